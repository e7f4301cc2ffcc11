#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace scd {

namespace {

struct Region {
  bool ellipse;
  double cy, cx, ry, rx;  // in cell units

  bool contains(std::size_t i, std::size_t j) const {
    const double dy = (static_cast<double>(i) + 0.5 - cy) / ry;
    const double dx = (static_cast<double>(j) + 0.5 - cx) / rx;
    return ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
  }
};

Region random_region(std::mt19937_64& rng, std::size_t gh, std::size_t gw, double max_radius_frac) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Region r;
  r.ellipse = u(rng) < 0.5;
  r.cy = u(rng) * static_cast<double>(gh);
  r.cx = u(rng) * static_cast<double>(gw);
  r.ry = 0.5 + u(rng) * std::max(0.5, max_radius_frac * static_cast<double>(gh));
  r.rx = 0.5 + u(rng) * std::max(0.5, max_radius_frac * static_cast<double>(gw));
  return r;
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

void SynthConfig::validate() const {
  if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0) {
    throw ContractError("synthetic size must be positive multiples of 8");
  }
  if (num_classes < 2) throw ContractError("synthetic data needs at least 2 classes");
  if (num_classes > 254) throw ContractError("synthetic data supports at most 254 classes");
  if (cell == 0 || height % cell != 0 || width % cell != 0) {
    throw ContractError("synthetic cell size must divide the image size");
  }
  if (change_fraction < 0.0 || change_fraction > 1.0) throw ContractError("change fraction must lie in [0, 1]");
}

std::array<std::uint8_t, 3> class_colour(std::size_t k) {
  static const std::array<std::uint8_t, 3> kPalette[] = {
      {34, 139, 34},   // tree
      {154, 205, 50},  // low vegetation
      {30, 100, 220},  // water
      {180, 40, 40},   // building
      {150, 130, 100}, // ground
      {240, 140, 20},  // playground
  };
  if (k >= 1 && k <= std::size(kPalette)) return kPalette[k - 1];
  const std::uint64_t h = (k * 2654435761ull) ^ 0x9e3779b97f4a7c15ull;
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

SamplePair generate_pair(std::uint64_t seed, std::size_t index, const SynthConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5cdu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = config.num_classes;
  std::uniform_int_distribution<std::size_t> pick_class(1, n);

  const std::size_t gh = config.height / config.cell, gw = config.width / config.cell;
  const std::size_t cells = gh * gw;

  // Land cover at time 1: background plus a few regions.
  std::vector<std::uint8_t> t1(cells, static_cast<std::uint8_t>(pick_class(rng)));
  const int regions = 2 + static_cast<int>(u(rng) * 4.0);
  for (int r = 0; r < regions; ++r) {
    const Region reg = random_region(rng, gh, gw, 0.35);
    const auto k = static_cast<std::uint8_t>(pick_class(rng));
    for (std::size_t i = 0; i < gh; ++i)
      for (std::size_t j = 0; j < gw; ++j)
        if (reg.contains(i, j)) t1[i * gw + j] = k;
  }

  // Time 2: mutate regions until the target number of changed cells is hit.
  // Stochastic rounding keeps the expected fraction on target for small grids.
  const double exact = config.change_fraction * static_cast<double>(cells);
  std::size_t target = static_cast<std::size_t>(std::floor(exact));
  if (u(rng) < exact - std::floor(exact)) ++target;
  target = std::min(target, cells);

  std::vector<std::uint8_t> t2 = t1;
  std::vector<bool> changed(cells, false);
  std::size_t n_changed = 0;
  for (int attempt = 0; n_changed < target && attempt < 1000; ++attempt) {
    const Region reg = random_region(rng, gh, gw, 0.25);
    const auto k = static_cast<std::uint8_t>(pick_class(rng));
    for (std::size_t i = 0; i < gh && n_changed < target; ++i) {
      for (std::size_t j = 0; j < gw && n_changed < target; ++j) {
        const std::size_t c = i * gw + j;
        if (changed[c] || !reg.contains(i, j)) continue;
        t2[c] = (k != t1[c]) ? k : static_cast<std::uint8_t>(k % n + 1);
        changed[c] = true;
        ++n_changed;
      }
    }
  }
  for (std::size_t c = 0; c < cells && n_changed < target; ++c) {
    if (changed[c]) continue;
    t2[c] = static_cast<std::uint8_t>(t1[c] % n + 1);
    changed[c] = true;
    ++n_changed;
  }

  SamplePair s;
  {
    std::ostringstream name;
    name << std::setw(5) << std::setfill('0') << index;
    s.stem = name.str();
  }
  s.image1 = RgbImage(config.height, config.width);
  s.image2 = RgbImage(config.height, config.width);
  s.label1 = LabelMap(config.height, config.width);
  s.label2 = LabelMap(config.height, config.width);

  std::normal_distribution<double> noise(0.0, config.noise);
  const double shift1 = (u(rng) - 0.5) * 20.0;
  const double shift2 = (u(rng) - 0.5) * 20.0;
  for (std::size_t i = 0; i < config.height; ++i) {
    for (std::size_t j = 0; j < config.width; ++j) {
      const std::size_t c = (i / config.cell) * gw + j / config.cell;
      const auto col1 = class_colour(t1[c]);
      const auto col2 = class_colour(t2[c]);
      std::uint8_t* p1 = s.image1.pixel(i, j);
      std::uint8_t* p2 = s.image2.pixel(i, j);
      for (int ch = 0; ch < 3; ++ch) {
        p1[ch] = clamp_byte(col1[ch] + shift1 + noise(rng));
        p2[ch] = clamp_byte(col2[ch] + shift2 + noise(rng));
      }
      if (changed[c]) {
        s.label1.at(i, j) = t1[c];
        s.label2.at(i, j) = t2[c];
      }
    }
  }
  return s;
}

std::vector<SamplePair> generate_synthetic(std::uint64_t seed, const SynthConfig& config) {
  config.validate();
  std::vector<SamplePair> out;
  out.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) out.push_back(generate_pair(seed, i, config));
  return out;
}

void generate_synthetic(const std::filesystem::path& dir, std::uint64_t seed, const SynthConfig& config) {
  const auto pairs = generate_synthetic(seed, config);
  write_dataset_meta(dir, config.num_classes);
  for (const auto& s : pairs) write_sample(dir, s);
}

}  // namespace scd
