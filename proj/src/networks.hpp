#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blocks.hpp"
#include "labels.hpp"
#include "tensor.hpp"

namespace scd {

enum class Family { DscdEarly, DscdLate, SscdEarly, SscdLate, BiSRNet };

inline constexpr Family kAllFamilies[] = {Family::DscdEarly, Family::DscdLate, Family::SscdEarly, Family::SscdLate,
                                          Family::BiSRNet};

std::string_view family_name(Family family);
Family parse_family(std::string_view text);
// Direct families predict semantic change maps over N+1 classes and have no
// separate change head.
bool is_direct(Family family);

enum class Upsampling { Nearest, Bilinear };

struct NetworkConfig {
  Family family = Family::BiSRNet;
  std::size_t num_classes = 4;
  std::vector<std::string> class_names;  // defaulted from num_classes when empty
  EncoderConfig encoder;
  int sr_reduction = 2;
  bool cotsr_shared = true;
  std::size_t cd_width = 0;  // 0 selects half the encoder output width
  std::size_t cd_units = 6;
  Upsampling upsampling = Upsampling::Nearest;
  double change_threshold = 0.5;

  void validate() const;
  std::size_t resolved_cd_width() const;
};

std::vector<std::string> default_class_names(std::size_t num_classes);

struct ForwardOutput {
  // Disentangled families: P1, P2 class logits [N, H, W] and change logit
  // C [1, H, W]. Direct families: S-logits [N+1, H, W] in p1/p2 and no C.
  Tensor p1;
  Tensor p2;
  Tensor change;
  LabelMap s1;
  LabelMap s2;
};

class Network {
 public:
  static Network build(const NetworkConfig& config, std::uint64_t seed);

  ForwardOutput forward(const Tensor& image1, const Tensor& image2) const;

  Family family() const { return config_.family; }
  const NetworkConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t head_count() const { return change_head_ ? 3 : 2; }

  // Unique parameters in a fixed order; shared tensors appear once.
  ParamList parameters() const;

  const Encoder& encoder1() const { return encoder1_; }
  const Encoder& encoder2() const { return encoder2_; }
  const std::optional<Encoder>& change_encoder() const { return change_encoder_; }
  const std::optional<CdBlock>& cd_block() const { return cd_; }
  std::optional<SiamSR>& siam_sr() { return siam_; }
  const std::optional<SiamSR>& siam_sr() const { return siam_; }
  std::optional<CotSR>& cot_sr() { return cot_; }
  const std::optional<CotSR>& cot_sr() const { return cot_; }
  const Classifier& head1() const { return head1_; }
  const Classifier& head2() const { return head2_; }
  const std::optional<Classifier>& change_head() const { return change_head_; }

  std::uint64_t flops(std::size_t height, std::size_t width) const;

 private:
  Tensor upsample(const Tensor& logits) const;

  NetworkConfig config_;
  std::uint64_t seed_ = 0;
  Encoder encoder1_;
  Encoder encoder2_;
  std::optional<Encoder> change_encoder_;
  std::optional<CdBlock> cd_;
  std::optional<SiamSR> siam_;
  std::optional<CotSR> cot_;
  Classifier head1_;
  Classifier head2_;
  std::optional<Classifier> change_head_;
};

std::uint64_t count_params(const Network& net);
// 2 FLOPs per multiply-add over convolutions and matrix products for one
// image pair of the given size; elementwise work is not counted.
std::uint64_t estimate_flops(const Network& net, std::size_t height, std::size_t width);

// S_t = 1 + argmax_k P_t[k] where sigmoid(C) >= threshold, else 0.
std::pair<LabelMap, LabelMap> mask_semantic(const Tensor& p1, const Tensor& p2, const Tensor& change,
                                            double threshold);
// Per-pixel argmax over channels of [K, H, W] logits.
LabelMap argmax_labels(const Tensor& logits);

// [3, H, W] tensor scaled to [-1, 1].
Tensor image_tensor(const RgbImage& image);

}  // namespace scd
