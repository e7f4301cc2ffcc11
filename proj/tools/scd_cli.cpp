// Command-line front end. Talks to the library only through <scd/scd.h>.
#include <scd/scd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

namespace {

namespace fs = std::filesystem;

struct Failure {
  scd_status status;
  std::string message;
};

void check(scd_status s) {
  if (s != SCD_OK) throw Failure{s, scd_last_error()};
}

int exit_code(scd_status s) {
  return (s == SCD_ERR_NUMERIC || s == SCD_ERR_UNDEFINED_METRIC) ? 2 : 1;
}

struct ConfigDeleter {
  void operator()(scd_config* c) const { scd_config_destroy(c); }
};
struct NetworkDeleter {
  void operator()(scd_network* n) const { scd_network_destroy(n); }
};
struct ReportDeleter {
  void operator()(scd_report* r) const { scd_report_destroy(r); }
};
using ConfigPtr = std::unique_ptr<scd_config, ConfigDeleter>;
using NetworkPtr = std::unique_ptr<scd_network, NetworkDeleter>;
using ReportPtr = std::unique_ptr<scd_report, ReportDeleter>;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

ConfigPtr load_config(const Common& c) {
  scd_config* raw = nullptr;
  if (c.config_path.empty()) {
    check(scd_config_create(&raw));
  } else {
    check(scd_config_load(c.config_path.c_str(), &raw));
  }
  ConfigPtr cfg(raw);
  if (c.seed) check(scd_config_set(cfg.get(), "seed", std::to_string(*c.seed).c_str()));
  check(scd_config_check(cfg.get()));
  return cfg;
}

std::string json_of(const scd_report* r) {
  const char* text = nullptr;
  check(scd_report_json(r, &text));
  return text;
}

std::string csv_of(const scd_report* r) {
  const char* text = nullptr;
  check(scd_report_csv(r, &text));
  return text;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Failure{SCD_ERR_DATA, "cannot write " + path.string()};
  f << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

void print_metrics(const scd_report* r) {
  static const char* kFields[] = {"oa", "iou_nc", "iou_c", "miou", "rho", "eta", "sek", "p_scd", "r_scd", "f_scd"};
  for (const char* f : kFields) {
    double v = 0.0;
    const std::string ptr = std::string("/") + f;
    const scd_status s = scd_report_number(r, ptr.c_str(), &v);
    std::cout << std::left << std::setw(8) << f << (s == SCD_OK ? fmt(v) : std::string("undefined")) << '\n';
  }
}

void on_epoch(const scd_epoch_info* e, void*) {
  std::cout << "epoch " << e->epoch << " steps " << e->steps << " lr " << fmt(e->lr) << " l_sem1 " << fmt(e->l_sem1)
            << " l_sem2 " << fmt(e->l_sem2) << " l_change " << fmt(e->l_change) << " l_sc " << fmt(e->l_sc)
            << " l_total " << fmt(e->l_total) << std::endl;
}

void add_common(CLI::App* cmd, Common& c, bool json_flag = true) {
  cmd->add_option("--config", c.config_path, "config file of `key = value` lines")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "overrides the `seed` config key");
  if (json_flag) cmd->add_flag("--json", c.json, "print the JSON report");
}

std::string config_key_table() {
  std::ostringstream os;
  os << "Config keys (defaults are chosen by this toolkit):\n";
  for (std::size_t i = 0; i < scd_config_key_count(); ++i) {
    const char *key = nullptr, *def = nullptr, *desc = nullptr;
    scd_config_key(i, &key, &def, &desc);
    os << "  " << std::left << std::setw(24) << key << std::setw(14) << (*def ? def : "-") << desc << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic change detection toolkit"};
  app.require_subcommand(1);
  app.footer(config_key_table());
  app.set_version_flag("--version", scd_version());

  Common common;
  std::string data_dir, out_dir, model_path, pred_dir, truth_dir, eval_dir;
  bool csv = false;

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(generate, common, false);
  generate->add_option("--out", out_dir, "dataset directory")->required();

  auto* train = app.add_subcommand("train", "train a network, writing model.ckpt, loss.csv and metrics.json");
  add_common(train, common);
  train->add_option("--data", data_dir, "training dataset")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--eval", eval_dir, "dataset for metrics.json (default: the training set)")
      ->check(CLI::ExistingDirectory);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
  add_common(evaluate, common);
  evaluate->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", data_dir, "dataset")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", pred_dir, "write predicted label maps here");

  auto* metrics = app.add_subcommand("metrics", "metrics of prediction maps against ground truth");
  add_common(metrics, common);
  metrics->add_option("--pred", pred_dir, "prediction directory (label1/, label2/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  metrics->add_option("--truth", truth_dir, "ground-truth dataset")->required()->check(CLI::ExistingDirectory);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every block and loss");
  add_common(gradcheck, common);

  auto* compare = app.add_subcommand("compare", "parameters, FLOPs and metrics of all five families");
  add_common(compare, common);
  compare->add_flag("--csv", csv, "print one CSV row per family");
  compare->add_option("--data", data_dir, "train and evaluate each family on this dataset")
      ->check(CLI::ExistingDirectory);

  auto* validate = app.add_subcommand("validate", "check dataset files and label invariants");
  add_common(validate, common);
  validate->add_option("--data", data_dir, "dataset")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  try {
    if (*generate) {
      ConfigPtr cfg = load_config(common);
      check(scd_generate(cfg.get(), out_dir.c_str()));
      std::cout << "wrote dataset to " << out_dir << '\n';
      return 0;
    }

    if (*train) {
      ConfigPtr cfg = load_config(common);
      check(scd_config_adopt_dataset(cfg.get(), data_dir.c_str()));
      scd_network* raw = nullptr;
      check(scd_network_create(cfg.get(), &raw));
      NetworkPtr net(raw);
      scd_report* rep = nullptr;
      check(scd_train(net.get(), cfg.get(), data_dir.c_str(), on_epoch, nullptr, &rep));
      ReportPtr loss(rep);
      fs::create_directories(out_dir);
      const fs::path out(out_dir);
      check(scd_network_save(net.get(), (out / "model.ckpt").string().c_str()));
      write_text(out / "loss.csv", csv_of(loss.get()));
      check(scd_evaluate(net.get(), cfg.get(), (eval_dir.empty() ? data_dir : eval_dir).c_str(), nullptr, &rep));
      ReportPtr report(rep);
      check(scd_report_save(report.get(), (out / "metrics.json").string().c_str()));
      if (common.json) {
        std::cout << json_of(report.get());
      } else {
        print_metrics(report.get());
      }
      return 0;
    }

    if (*evaluate) {
      ConfigPtr cfg = load_config(common);
      check(scd_config_adopt_dataset(cfg.get(), data_dir.c_str()));
      scd_network* raw = nullptr;
      check(scd_network_create(cfg.get(), &raw));
      NetworkPtr net(raw);
      check(scd_network_load(net.get(), model_path.c_str()));
      scd_report* rep = nullptr;
      check(scd_evaluate(net.get(), cfg.get(), data_dir.c_str(), pred_dir.empty() ? nullptr : pred_dir.c_str(), &rep));
      ReportPtr report(rep);
      if (common.json) {
        std::cout << json_of(report.get());
      } else {
        print_metrics(report.get());
      }
      return 0;
    }

    if (*metrics) {
      ConfigPtr cfg = load_config(common);
      scd_report* rep = nullptr;
      check(scd_evaluate_dirs(cfg.get(), pred_dir.c_str(), truth_dir.c_str(), &rep));
      ReportPtr report(rep);
      if (common.json) {
        std::cout << json_of(report.get());
      } else {
        print_metrics(report.get());
      }
      return 0;
    }

    if (*gradcheck) {
      const std::uint64_t seed = common.seed.value_or(0);
      struct Sink {
        bool json;
        std::ostringstream rows;
        bool first = true;
      } sink{common.json, {}};
      auto cb = [](const char* name, double err, size_t elements, void* user) {
        auto* s = static_cast<Sink*>(user);
        if (s->json) {
          s->rows << (s->first ? "" : ",\n") << "    {\"component\": \"" << name << "\", \"max_rel_error\": "
                  << std::setprecision(6) << std::scientific << err << ", \"elements\": " << elements << "}";
          s->first = false;
        } else {
          std::cout << std::left << std::setw(16) << name << std::scientific << std::setprecision(3) << err << "  ("
                    << elements << " elements)" << std::endl;
        }
      };
      double worst = 0.0;
      check(scd_gradcheck(seed, cb, &sink, &worst));
      const bool pass = worst < scd_gradcheck_tolerance();
      if (common.json) {
        std::cout << "{\n  \"seed\": " << seed << ",\n  \"tolerance\": " << scd_gradcheck_tolerance()
                  << ",\n  \"components\": [\n"
                  << sink.rows.str() << "\n  ],\n  \"max_rel_error\": " << worst
                  << ",\n  \"pass\": " << (pass ? "true" : "false") << "\n}\n";
      } else {
        std::cout << (pass ? "PASS" : "FAIL") << " max relative error " << std::scientific << std::setprecision(3)
                  << worst << " (tolerance " << scd_gradcheck_tolerance() << ")\n";
      }
      return pass ? 0 : 2;
    }

    if (*compare) {
      ConfigPtr cfg = load_config(common);
      scd_report* rep = nullptr;
      check(scd_compare(cfg.get(), data_dir.empty() ? nullptr : data_dir.c_str(), &rep));
      ReportPtr report(rep);
      if (common.json) {
        std::cout << json_of(report.get());
      } else {
        std::cout << csv_of(report.get());
      }
      return 0;
    }

    if (*validate) {
      ConfigPtr cfg = load_config(common);
      scd_report* rep = nullptr;
      const scd_status s = scd_validate(cfg.get(), data_dir.c_str(), &rep);
      ReportPtr report(rep);
      if (!report) check(s);
      const std::string message = scd_last_error();
      if (common.json) {
        std::cout << json_of(report.get());
      } else {
        double samples = 0, fraction = 0;
        scd_report_number(report.get(), "/samples", &samples);
        scd_report_number(report.get(), "/changed_fraction", &fraction);
        std::cout << (s == SCD_OK ? "ok" : "invalid") << ": " << static_cast<long long>(samples)
                  << " samples, changed fraction " << fmt(fraction) << '\n';
      }
      if (s != SCD_OK) {
        std::cerr << "error: " << message << '\n';
        return exit_code(s);
      }
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << scd_status_name(f.status) << "): " << f.message << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
