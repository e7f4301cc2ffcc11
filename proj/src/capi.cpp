#include <scd/scd.h>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "gradsuite.hpp"
#include "networks.hpp"
#include "report.hpp"
#include "synthetic.hpp"
#include "training.hpp"

struct scd_config {
  scd::Config cfg;
};

struct scd_network {
  scd::Network net;
};

struct scd_report {
  nlohmann::json doc;
  std::string json_text;
  std::optional<std::string> csv;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

template <class Fn>
scd_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SCD_OK;
  } catch (const scd::DimensionError& e) {
    set_error(e.what());
    return SCD_ERR_DIMENSION;
  } catch (const scd::ContractError& e) {
    set_error(e.what());
    return SCD_ERR_CONTRACT;
  } catch (const scd::ConfigError& e) {
    set_error(e.what());
    return SCD_ERR_CONFIG;
  } catch (const scd::DataError& e) {
    set_error(e.what());
    return SCD_ERR_DATA;
  } catch (const scd::UndefinedMetricError& e) {
    set_error(e.what());
    return SCD_ERR_UNDEFINED_METRIC;
  } catch (const scd::NumericError& e) {
    set_error(e.what());
    return SCD_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return SCD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return SCD_ERR_INTERNAL;
  }
}

scd_status invalid(const char* message) {
  set_error(message);
  return SCD_ERR_INVALID_ARGUMENT;
}

#define SCD_REQUIRE(cond, message)  \
  do {                              \
    if (!(cond)) return invalid(message); \
  } while (0)

scd_report* make_report(nlohmann::json doc, std::optional<std::string> csv = std::nullopt) {
  auto* r = new scd_report;
  r->doc = std::move(doc);
  r->json_text = r->doc.dump(2) + "\n";
  r->csv = std::move(csv);
  return r;
}

std::size_t resolve_classes(const scd::Config& cfg, const std::filesystem::path& data_dir) {
  const auto recorded = scd::dataset_classes(data_dir);
  if (cfg.has("classes")) {
    const auto n = static_cast<std::size_t>(cfg.get_int("classes"));
    if (recorded && *recorded != n) {
      throw scd::ConfigError("config sets classes = " + std::to_string(n) + " but " + data_dir.string() +
                             " records " + std::to_string(*recorded));
    }
    return n;
  }
  return recorded.value_or(scd::NetworkConfig{}.num_classes);
}

std::size_t eval_threads(const scd::Config& cfg) {
  const long long t = cfg.get_int_or("eval.threads", 1);
  if (t < 1) throw scd::ConfigError("eval.threads must be at least 1");
  return static_cast<std::size_t>(t);
}

std::vector<scd::SamplePair> load_for(const scd::Network& net, const std::filesystem::path& dir) {
  const std::size_t n = net.config().num_classes;
  if (const auto recorded = scd::dataset_classes(dir); recorded && *recorded != n) {
    throw scd::ConfigError("network has " + std::to_string(n) + " classes but " + dir.string() + " records " +
                           std::to_string(*recorded));
  }
  auto data = scd::read_dataset(dir, n);
  if (data.empty()) throw scd::DataError(dir.string() + ": no samples");
  return data;
}

nlohmann::json train_json(const scd::TrainResult& result) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"steps", e.steps},
                      {"lr", e.lr},
                      {"l_sem1", e.mean.l_sem1},
                      {"l_sem2", e.mean.l_sem2},
                      {"l_change", e.mean.l_change},
                      {"l_sc", e.mean.l_sc},
                      {"l_total", e.mean.l_total}});
  }
  return {{"steps", result.steps}, {"step_losses", result.step_losses}, {"epochs", epochs}};
}

std::string loss_csv(const scd::TrainResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "step,l_total\n";
  for (std::size_t i = 0; i < result.step_losses.size(); ++i) os << i << ',' << result.step_losses[i] << '\n';
  return os.str();
}

}  // namespace

extern "C" {

const char* scd_version(void) { return "1.0.0"; }

const char* scd_status_name(scd_status status) {
  switch (status) {
    case SCD_OK: return "ok";
    case SCD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SCD_ERR_DIMENSION: return "dimension error";
    case SCD_ERR_CONTRACT: return "contract error";
    case SCD_ERR_CONFIG: return "config error";
    case SCD_ERR_DATA: return "data error";
    case SCD_ERR_UNDEFINED_METRIC: return "undefined metric";
    case SCD_ERR_NUMERIC: return "numeric error";
    case SCD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* scd_last_error(void) { return g_last_error.c_str(); }

scd_status scd_config_create(scd_config** out) {
  SCD_REQUIRE(out, "out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new scd_config; });
}

scd_status scd_config_load(const char* path, scd_config** out) {
  SCD_REQUIRE(path && out, "path or out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new scd_config{scd::Config::load(path)}; });
}

scd_status scd_config_set(scd_config* config, const char* key, const char* value) {
  SCD_REQUIRE(config && key && value, "config, key or value is NULL");
  return guarded([&] { config->cfg.set(key, value); });
}

void scd_config_destroy(scd_config* config) { delete config; }

scd_status scd_config_check(const scd_config* config) {
  SCD_REQUIRE(config, "config is NULL");
  return guarded([&] {
    config->cfg.check_known_keys();
    scd::network_config(config->cfg);
    scd::train_config(config->cfg);
    scd::synth_config(config->cfg);
    eval_threads(config->cfg);
  });
}

scd_status scd_config_adopt_dataset(scd_config* config, const char* data_dir) {
  SCD_REQUIRE(config && data_dir, "config or data_dir is NULL");
  return guarded([&] {
    const std::size_t n = resolve_classes(config->cfg, data_dir);
    config->cfg.set("classes", std::to_string(n));
  });
}

size_t scd_config_key_count(void) { return scd::known_config_keys().size(); }

scd_status scd_config_key(size_t index, const char** key, const char** default_value, const char** description) {
  const auto& keys = scd::known_config_keys();
  SCD_REQUIRE(index < keys.size(), "config key index out of range");
  if (key) *key = keys[index].key;
  if (default_value) *default_value = keys[index].default_value;
  if (description) *description = keys[index].description;
  return SCD_OK;
}

scd_status scd_generate(const scd_config* config, const char* dir) {
  SCD_REQUIRE(config && dir, "config or dir is NULL");
  return guarded([&] {
    const scd::SynthConfig sc = scd::synth_config(config->cfg);
    scd::generate_synthetic(dir, config->cfg.get_u64_or("seed", 0), sc);
  });
}

scd_status scd_validate(const scd_config* config, const char* data_dir, scd_report** out) {
  SCD_REQUIRE(config && data_dir && out, "config, data_dir or out is NULL");
  *out = nullptr;
  bool failed = false;
  const scd_status s = guarded([&] {
    const std::size_t n = resolve_classes(config->cfg, data_dir);
    const scd::ValidationReport v = scd::validate_dataset(data_dir, n);
    *out = make_report({{"samples", v.samples},
                        {"classes", n},
                        {"pixels", v.pixels},
                        {"changed_pixels", v.changed_pixels},
                        {"changed_fraction", v.changed_fraction()},
                        {"errors", v.errors},
                        {"warnings", v.warnings},
                        {"ok", v.ok()}});
    if (!v.ok()) {
      failed = true;
      set_error(v.errors.front());
    }
  });
  if (s != SCD_OK) return s;
  return failed ? SCD_ERR_DATA : SCD_OK;
}

scd_status scd_network_create(const scd_config* config, scd_network** out) {
  SCD_REQUIRE(config && out, "config or out is NULL");
  *out = nullptr;
  return guarded([&] {
    const scd::NetworkConfig nc = scd::network_config(config->cfg);
    *out = new scd_network{scd::Network::build(nc, config->cfg.get_u64_or("seed", 0))};
  });
}

void scd_network_destroy(scd_network* net) { delete net; }

scd_status scd_network_save(const scd_network* net, const char* path) {
  SCD_REQUIRE(net && path, "net or path is NULL");
  return guarded([&] { scd::save_checkpoint(net->net, path); });
}

scd_status scd_network_load(scd_network* net, const char* path) {
  SCD_REQUIRE(net && path, "net or path is NULL");
  return guarded([&] { scd::load_checkpoint(net->net, path); });
}

scd_status scd_network_family(const scd_network* net, const char** name) {
  SCD_REQUIRE(net && name, "net or name is NULL");
  *name = scd::family_name(net->net.family()).data();
  return SCD_OK;
}

scd_status scd_network_params(const scd_network* net, uint64_t* count) {
  SCD_REQUIRE(net && count, "net or count is NULL");
  return guarded([&] { *count = scd::count_params(net->net); });
}

scd_status scd_network_flops(const scd_network* net, size_t height, size_t width, uint64_t* flops) {
  SCD_REQUIRE(net && flops, "net or flops is NULL");
  return guarded([&] { *flops = scd::estimate_flops(net->net, height, width); });
}

scd_status scd_train(scd_network* net, const scd_config* config, const char* data_dir, scd_epoch_callback callback,
                     void* user, scd_report** out) {
  SCD_REQUIRE(net && config && data_dir, "net, config or data_dir is NULL");
  if (out) *out = nullptr;
  return guarded([&] {
    const scd::TrainConfig tc = scd::train_config(config->cfg);
    const auto data = load_for(net->net, data_dir);
    scd::EpochCallback cb;
    if (callback) {
      cb = [&](const scd::EpochReport& e) {
        const scd_epoch_info info{e.epoch,         e.steps,         e.lr,         e.mean.l_sem1,
                                  e.mean.l_sem2,   e.mean.l_change, e.mean.l_sc, e.mean.l_total};
        callback(&info, user);
      };
    }
    const scd::TrainResult result = scd::train(net->net, data, tc, cb);
    if (out) *out = make_report(train_json(result), loss_csv(result));
  });
}

scd_status scd_evaluate(const scd_network* net, const scd_config* config, const char* data_dir,
                        const char* prediction_dir, scd_report** out) {
  SCD_REQUIRE(net && config && data_dir && out, "net, config, data_dir or out is NULL");
  *out = nullptr;
  return guarded([&] {
    const auto data = load_for(net->net, data_dir);
    std::optional<std::filesystem::path> pred;
    if (prediction_dir) pred = prediction_dir;
    const scd::Evaluation ev = scd::evaluate(net->net, data, pred, eval_threads(config->cfg));
    nlohmann::json doc = scd::evaluation_json(ev);
    doc["family"] = std::string(scd::family_name(net->net.family()));
    *out = make_report(std::move(doc));
  });
}

scd_status scd_evaluate_dirs(const scd_config* config, const char* pred_dir, const char* truth_dir,
                             scd_report** out) {
  SCD_REQUIRE(config && pred_dir && truth_dir && out, "config, pred_dir, truth_dir or out is NULL");
  *out = nullptr;
  return guarded([&] {
    const std::size_t n = resolve_classes(config->cfg, truth_dir);
    *out = make_report(scd::evaluation_json(scd::evaluate_predictions(pred_dir, truth_dir, n)));
  });
}

scd_status scd_compare(const scd_config* config, const char* data_dir, scd_report** out) {
  SCD_REQUIRE(config && out, "config or out is NULL");
  *out = nullptr;
  return guarded([&] {
    scd::Config base = config->cfg;
    if (data_dir) base.set("classes", std::to_string(resolve_classes(base, data_dir)));
    const scd::SynthConfig sc = scd::synth_config(base);
    const std::uint64_t seed = base.get_u64_or("seed", 0);
    std::vector<scd::SamplePair> data;
    std::vector<scd::CompareRow> rows;
    std::string csv = scd::csv_header() + "\n";
    for (scd::Family family : scd::kAllFamilies) {
      scd::Config cfg = base;
      cfg.set("family", std::string(scd::family_name(family)));
      scd::Network net = scd::Network::build(scd::network_config(cfg), seed);
      scd::CompareRow row{family, scd::count_params(net), scd::estimate_flops(net, sc.height, sc.width), {}, {}};
      if (data_dir) {
        if (data.empty()) data = load_for(net, data_dir);
        scd::train(net, data, scd::train_config(cfg));
        const scd::Evaluation ev = scd::evaluate(net, data, std::nullopt, eval_threads(cfg));
        row.metrics = ev.report;
        if (scd::is_direct(family)) row.zero_set_disagreement = ev.zero_set_disagreement;
      }
      csv += scd::csv_row(row) + "\n";
      rows.push_back(std::move(row));
    }
    nlohmann::json doc = {{"height", sc.height}, {"width", sc.width}, {"rows", scd::compare_json(rows)}};
    *out = make_report(std::move(doc), csv);
  });
}

scd_status scd_gradcheck(uint64_t seed, scd_grad_callback callback, void* user, double* max_rel_error) {
  return guarded([&] {
    double worst = 0.0;
    for (const auto& r : scd::run_grad_suite(seed)) {
      worst = std::max(worst, r.max_rel_error);
      if (callback) callback(r.name.c_str(), r.max_rel_error, r.elements, user);
    }
    if (max_rel_error) *max_rel_error = worst;
  });
}

double scd_gradcheck_tolerance(void) { return scd::kGradTolerance; }

scd_status scd_report_json(const scd_report* report, const char** json) {
  SCD_REQUIRE(report && json, "report or json is NULL");
  *json = report->json_text.c_str();
  return SCD_OK;
}

scd_status scd_report_csv(const scd_report* report, const char** csv) {
  SCD_REQUIRE(report && csv, "report or csv is NULL");
  if (!report->csv) {
    set_error("report has no CSV rendering");
    return SCD_ERR_CONTRACT;
  }
  *csv = report->csv->c_str();
  return SCD_OK;
}

scd_status scd_report_number(const scd_report* report, const char* pointer, double* value) {
  SCD_REQUIRE(report && pointer && value, "report, pointer or value is NULL");
  return guarded([&] {
    const nlohmann::json::json_pointer ptr{std::string(pointer)};
    if (!report->doc.contains(ptr)) throw scd::ContractError(std::string("report has no field ") + pointer);
    const auto& v = report->doc.at(ptr);
    if (v.is_null()) throw scd::UndefinedMetricError(std::string(pointer) + " is undefined");
    if (!v.is_number()) throw scd::ContractError(std::string(pointer) + " is not a number");
    *value = v.get<double>();
  });
}

scd_status scd_report_save(const scd_report* report, const char* path) {
  SCD_REQUIRE(report && path, "report or path is NULL");
  return guarded([&] {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw scd::DataError(std::string("cannot write ") + path);
    f << report->json_text;
    if (!f) throw scd::DataError(std::string("failed writing ") + path);
  });
}

void scd_report_destroy(scd_report* report) { delete report; }

}  // extern "C"
