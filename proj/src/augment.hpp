#pragma once

#include <cstdint>
#include <string_view>

#include "dataset.hpp"

namespace scd {

enum class Transform { Identity, FlipH, FlipV, Rot90, Rot180, Rot270 };

std::string_view transform_name(Transform t);

// Geometric transform applied identically to both images and both label maps.
// Quarter turns require square rasters.
SamplePair apply_transform(const SamplePair& sample, Transform t);
LabelMap apply_transform(const LabelMap& map, Transform t);
RgbImage apply_transform(const RgbImage& image, Transform t);

// Uniform choice among the six transforms (four on non-square input).
Transform choose_transform(std::uint64_t seed, bool square);

SamplePair augment(const SamplePair& sample, std::uint64_t seed);

}  // namespace scd
