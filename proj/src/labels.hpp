#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scd {

// Integer class raster, row-major. Class 0 is no-change.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), values(h * w, fill) {}

  std::uint8_t& at(std::size_t i, std::size_t j) { return values[i * width + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return values[i * width + j]; }
  std::size_t size() const { return values.size(); }
  bool same_shape(const LabelMap& o) const { return height == o.height && width == o.width; }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w) : height(h), width(w), rgb(h * w * 3, 0) {}

  std::uint8_t* pixel(std::size_t i, std::size_t j) { return rgb.data() + (i * width + j) * 3; }
  const std::uint8_t* pixel(std::size_t i, std::size_t j) const { return rgb.data() + (i * width + j) * 3; }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

}  // namespace scd
