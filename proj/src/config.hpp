#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scd {

// Flat `key = value` settings; `#` starts a comment. Later assignments win.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_sizes_or(const std::string& key, std::vector<std::size_t> fallback) const;
  std::vector<std::string> get_strings_or(const std::string& key, std::vector<std::string> fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Throws ConfigError on any key not in the known set.
  void check_known_keys() const;

 private:
  std::map<std::string, std::string> values_;
};

// Keys understood by the toolkit with a short description each (used by
// --help output).
struct ConfigKey {
  const char* key;
  const char* default_value;
  const char* description;
};
const std::vector<ConfigKey>& known_config_keys();

struct NetworkConfig;
struct LossConfig;
struct TrainConfig;
struct SynthConfig;

NetworkConfig network_config(const Config& cfg);
LossConfig loss_config(const Config& cfg);
TrainConfig train_config(const Config& cfg);
SynthConfig synth_config(const Config& cfg);

}  // namespace scd
