#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dataset.hpp"

namespace scd {

struct SynthConfig {
  std::size_t count = 50;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 4;
  double change_fraction = 0.20;
  // Region geometry is laid out on a grid of cell x cell pixel blocks.
  std::size_t cell = 8;
  double noise = 12.0;

  void validate() const;
};

// Base colour for land-cover class k (1-based).
std::array<std::uint8_t, 3> class_colour(std::size_t k);

// One scene pair; sample `index` of the dataset generated from `seed`.
SamplePair generate_pair(std::uint64_t seed, std::size_t index, const SynthConfig& config);
std::vector<SamplePair> generate_synthetic(std::uint64_t seed, const SynthConfig& config);
// Writes the pairs plus dataset.cfg under dir.
void generate_synthetic(const std::filesystem::path& dir, std::uint64_t seed, const SynthConfig& config);

}  // namespace scd
