#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "labels.hpp"
#include "tensor.hpp"

namespace scd::testing {

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double stddev = 1.0, bool requires_grad = true) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::normal_distribution<double> g(0.0, stddev);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline LabelMap random_labels(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t max) {
  LabelMap m(h, w);
  std::uniform_int_distribution<int> u(0, static_cast<int>(max));
  for (auto& v : m.values) v = static_cast<std::uint8_t>(u(rng));
  return m;
}

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scd_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace scd::testing
