#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "networks.hpp"
#include "synthetic.hpp"
#include "training.hpp"

namespace scd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!item.empty()) out.push_back(std::move(item));
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(std::move(item));
  return out;
}

long long to_int(const std::string& key, std::string_view text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects an integer, got '" + std::string(text) + "'");
  return v;
}

std::size_t to_size(const std::string& key, long long v) {
  if (v < 0) throw ConfigError("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    cfg.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long Config::get_int(const std::string& key) const { return to_int(key, get(key)); }

long long Config::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& text = get(key);
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects an unsigned integer, got '" + text + "'");
  return v;
}

double Config::get_double_or(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& text = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + get(key) + "'");
}

std::vector<std::size_t> Config::get_sizes_or(const std::string& key, std::vector<std::size_t> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(get(key))) out.push_back(to_size(key, to_int(key, item)));
  return out;
}

std::vector<std::string> Config::get_strings_or(const std::string& key, std::vector<std::string> fallback) const {
  return has(key) ? split_list(get(key)) : fallback;
}

const std::vector<ConfigKey>& known_config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"family", "Bi-SRNet", "DSCD-e | DSCD-l | SSCD-e | SSCD-l | Bi-SRNet"},
      {"classes", "4", "number of land-cover classes N (0 is no-change)"},
      {"class_names", "", "comma-separated class names"},
      {"encoder.channels", "16,32,64,64", "output channels per encoder stage"},
      {"encoder.strides", "2,2,2,1", "stride per encoder stage (product must be 8)"},
      {"encoder.units", "1,1,1,1", "residual units per encoder stage"},
      {"encoder.norm", "none", "none | affine (per-channel scale and shift after each conv)"},
      {"sr.r", "2", "query/key channel reduction in the attention blocks"},
      {"cotsr.shared", "true", "share q/k/v across the two cross-temporal branches"},
      {"cd.width", "0", "change block working width (0: half the encoder width)"},
      {"cd.units", "6", "residual units in the change block"},
      {"upsample", "nearest", "nearest | bilinear head upsampling"},
      {"threshold", "0.5", "change probability threshold for masking"},
      {"loss.sc", "auto", "auto | true | false (auto: on for Bi-SRNet only)"},
      {"loss.sc_mode", "intent", "intent | literal branch assignment of the consistency loss"},
      {"loss.sc_space", "prob", "prob | logit space for the cosine similarity"},
      {"train.batch_size", "8", "samples per optimizer step"},
      {"train.epochs", "50", "training epochs"},
      {"train.lr", "0.1", "initial learning rate"},
      {"train.momentum", "0.9", "Nesterov momentum (artifact default)"},
      {"train.augment", "true", "random flip/rotation per sample"},
      {"train.max_steps", "0", "stop after this many steps (0: epochs * batches)"},
      {"train.grad_clip", "1.0", "cap on the global gradient L2 norm, 0 disables (artifact default)"},
      {"lr.schedule", "poly", "poly | constant (artifact default)"},
      {"lr.power", "0.9", "polynomial decay power (artifact default)"},
      {"seed", "0", "seed for initialization, shuffling and augmentation"},
      {"synth.count", "50", "synthetic pairs to generate"},
      {"synth.size", "32", "synthetic raster side (sets height and width)"},
      {"synth.height", "32", "synthetic raster height"},
      {"synth.width", "32", "synthetic raster width"},
      {"synth.change_fraction", "0.2", "target changed-pixel fraction"},
      {"synth.cell", "8", "region grid cell size in pixels"},
      {"synth.noise", "12", "per-pixel colour noise (std dev)"},
      {"eval.threads", "1", "evaluation worker threads"},
  };
  return keys;
}

void Config::check_known_keys() const {
  const auto& keys = known_config_keys();
  for (const auto& [key, value] : values_) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return key == k.key; });
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
}

NetworkConfig network_config(const Config& cfg) {
  NetworkConfig nc;
  nc.family = parse_family(cfg.get_or("family", "Bi-SRNet"));
  nc.num_classes = to_size("classes", cfg.get_int_or("classes", 4));
  nc.class_names = cfg.get_strings_or("class_names", {});
  nc.encoder.stage_channels = cfg.get_sizes_or("encoder.channels", nc.encoder.stage_channels);
  {
    std::vector<std::size_t> def(nc.encoder.strides.begin(), nc.encoder.strides.end());
    const auto strides = cfg.get_sizes_or("encoder.strides", def);
    nc.encoder.strides.assign(strides.begin(), strides.end());
  }
  nc.encoder.units_per_stage = cfg.get_sizes_or("encoder.units", nc.encoder.units_per_stage);
  const std::string norm = lower(cfg.get_or("encoder.norm", "none"));
  if (norm == "affine") {
    nc.encoder.norm = true;
  } else if (norm != "none") {
    throw ConfigError("encoder.norm must be 'none' or 'affine'");
  }
  nc.sr_reduction = static_cast<int>(cfg.get_int_or("sr.r", 2));
  nc.cotsr_shared = cfg.get_bool_or("cotsr.shared", true);
  nc.cd_width = to_size("cd.width", cfg.get_int_or("cd.width", 0));
  nc.cd_units = to_size("cd.units", cfg.get_int_or("cd.units", 6));
  const std::string up = lower(cfg.get_or("upsample", "nearest"));
  if (up == "nearest") {
    nc.upsampling = Upsampling::Nearest;
  } else if (up == "bilinear") {
    nc.upsampling = Upsampling::Bilinear;
  } else {
    throw ConfigError("upsample must be 'nearest' or 'bilinear'");
  }
  nc.change_threshold = cfg.get_double_or("threshold", 0.5);
  nc.validate();
  return nc;
}

LossConfig loss_config(const Config& cfg) {
  LossConfig lc;
  lc.sc_mode = parse_sc_mode(cfg.get_or("loss.sc_mode", "intent"));
  lc.sc_space = parse_sc_space(cfg.get_or("loss.sc_space", "prob"));
  const std::string sc = lower(cfg.get_or("loss.sc", "auto"));
  if (sc != "auto") lc.use_sc = cfg.get_bool_or("loss.sc", false);
  return lc;
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig tc;
  tc.batch_size = to_size("train.batch_size", cfg.get_int_or("train.batch_size", 8));
  tc.epochs = to_size("train.epochs", cfg.get_int_or("train.epochs", 50));
  tc.initial_lr = cfg.get_double_or("train.lr", 0.1);
  tc.momentum = cfg.get_double_or("train.momentum", 0.9);
  tc.augment = cfg.get_bool_or("train.augment", true);
  tc.max_steps = to_size("train.max_steps", cfg.get_int_or("train.max_steps", 0));
  tc.grad_clip = cfg.get_double_or("train.grad_clip", 1.0);
  const std::string schedule = lower(cfg.get_or("lr.schedule", "poly"));
  if (schedule == "poly") {
    tc.schedule = LrSchedule::Poly;
  } else if (schedule == "constant") {
    tc.schedule = LrSchedule::Constant;
  } else {
    throw ConfigError("lr.schedule must be 'poly' or 'constant'");
  }
  tc.poly_power = cfg.get_double_or("lr.power", 0.9);
  tc.seed = cfg.get_u64_or("seed", 0);
  tc.loss = loss_config(cfg);
  tc.validate();
  return tc;
}

SynthConfig synth_config(const Config& cfg) {
  SynthConfig sc;
  sc.count = to_size("synth.count", cfg.get_int_or("synth.count", 50));
  const std::size_t side = to_size("synth.size", cfg.get_int_or("synth.size", 32));
  sc.height = to_size("synth.height", cfg.get_int_or("synth.height", static_cast<long long>(side)));
  sc.width = to_size("synth.width", cfg.get_int_or("synth.width", static_cast<long long>(side)));
  sc.num_classes = to_size("classes", cfg.get_int_or("classes", 4));
  sc.change_fraction = cfg.get_double_or("synth.change_fraction", 0.20);
  sc.cell = to_size("synth.cell", cfg.get_int_or("synth.cell", 8));
  sc.noise = cfg.get_double_or("synth.noise", 12.0);
  try {
    sc.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

}  // namespace scd
