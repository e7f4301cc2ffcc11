#include "augment.hpp"

#include <random>

#include "errors.hpp"

namespace scd {

namespace {

// Source coordinate in the input for output pixel (i, j); (h, w) is the input size.
std::pair<std::size_t, std::size_t> source(Transform t, std::size_t i, std::size_t j, std::size_t h, std::size_t w) {
  switch (t) {
    case Transform::Identity: return {i, j};
    case Transform::FlipH: return {i, w - 1 - j};
    case Transform::FlipV: return {h - 1 - i, j};
    case Transform::Rot90: return {h - 1 - j, i};  // clockwise
    case Transform::Rot180: return {h - 1 - i, w - 1 - j};
    case Transform::Rot270: return {j, w - 1 - i};
  }
  return {i, j};
}

bool quarter_turn(Transform t) { return t == Transform::Rot90 || t == Transform::Rot270; }

template <class Fn>
void remap(Transform t, std::size_t h, std::size_t w, Fn copy) {
  if (quarter_turn(t) && h != w) throw ContractError("quarter-turn rotation requires a square raster");
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      auto [si, sj] = source(t, i, j, h, w);
      copy(i, j, si, sj);
    }
}

}  // namespace

std::string_view transform_name(Transform t) {
  switch (t) {
    case Transform::Identity: return "identity";
    case Transform::FlipH: return "hflip";
    case Transform::FlipV: return "vflip";
    case Transform::Rot90: return "rot90";
    case Transform::Rot180: return "rot180";
    case Transform::Rot270: return "rot270";
  }
  return "?";
}

LabelMap apply_transform(const LabelMap& map, Transform t) {
  LabelMap out(map.height, map.width);
  remap(t, map.height, map.width,
        [&](std::size_t i, std::size_t j, std::size_t si, std::size_t sj) { out.at(i, j) = map.at(si, sj); });
  return out;
}

RgbImage apply_transform(const RgbImage& image, Transform t) {
  RgbImage out(image.height, image.width);
  remap(t, image.height, image.width, [&](std::size_t i, std::size_t j, std::size_t si, std::size_t sj) {
    const std::uint8_t* src = image.pixel(si, sj);
    std::uint8_t* dst = out.pixel(i, j);
    dst[0] = src[0];
    dst[1] = src[1];
    dst[2] = src[2];
  });
  return out;
}

SamplePair apply_transform(const SamplePair& s, Transform t) {
  if (t == Transform::Identity) return s;
  SamplePair out;
  out.stem = s.stem;
  out.image1 = apply_transform(s.image1, t);
  out.image2 = apply_transform(s.image2, t);
  out.label1 = apply_transform(s.label1, t);
  out.label2 = apply_transform(s.label2, t);
  return out;
}

Transform choose_transform(std::uint64_t seed, bool square) {
  static constexpr Transform kAll[] = {Transform::Identity, Transform::FlipH,  Transform::FlipV,
                                       Transform::Rot90,    Transform::Rot180, Transform::Rot270};
  static constexpr Transform kRect[] = {Transform::Identity, Transform::FlipH, Transform::FlipV, Transform::Rot180};
  std::mt19937_64 rng(seed);
  if (square) return kAll[std::uniform_int_distribution<int>(0, 5)(rng)];
  return kRect[std::uniform_int_distribution<int>(0, 3)(rng)];
}

SamplePair augment(const SamplePair& sample, std::uint64_t seed) {
  return apply_transform(sample, choose_transform(seed, sample.image1.height == sample.image1.width));
}

}  // namespace scd
