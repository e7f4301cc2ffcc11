#include "networks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "errors.hpp"

namespace scd {

namespace {

std::string lowered(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '-' || ch == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::DscdEarly: return "DSCD-e";
    case Family::DscdLate: return "DSCD-l";
    case Family::SscdEarly: return "SSCD-e";
    case Family::SscdLate: return "SSCD-l";
    case Family::BiSRNet: return "Bi-SRNet";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  const std::string key = lowered(text);
  for (Family f : kAllFamilies) {
    if (lowered(family_name(f)) == key) return f;
  }
  throw ConfigError("unknown network family '" + std::string(text) + "'");
}

bool is_direct(Family family) { return family == Family::DscdEarly || family == Family::DscdLate; }

std::vector<std::string> default_class_names(std::size_t num_classes) {
  static const char* const kNames[] = {"tree", "low_vegetation", "water", "building", "ground", "playground"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < num_classes; ++i) {
    names.push_back(i < std::size(kNames) ? kNames[i] : "class" + std::to_string(i + 1));
  }
  return names;
}

void NetworkConfig::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (num_classes > 254) throw ConfigError("num_classes must fit 8-bit labels");
  if (!class_names.empty() && class_names.size() != num_classes) {
    throw ConfigError("class_names has " + std::to_string(class_names.size()) + " entries, expected " +
                      std::to_string(num_classes));
  }
  encoder.validate();
  if (change_threshold <= 0.0 || change_threshold >= 1.0) throw ConfigError("change threshold must lie in (0, 1)");
  if (family == Family::BiSRNet) reduced_channels(encoder.out_channels(), sr_reduction);
}

std::size_t NetworkConfig::resolved_cd_width() const {
  return cd_width != 0 ? cd_width : std::max<std::size_t>(1, encoder.out_channels() / 2);
}

// ---------------------------------------------------------------------------

Network Network::build(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Network net;
  net.config_ = config;
  if (net.config_.class_names.empty()) net.config_.class_names = default_class_names(config.num_classes);
  net.seed_ = seed;

  const std::size_t n = config.num_classes;
  const std::size_t c = config.encoder.out_channels();
  const std::size_t cd_width = config.resolved_cd_width();
  const bool norm = config.encoder.norm;

  EncoderConfig pair_input = config.encoder;
  pair_input.in_channels = 2 * config.encoder.in_channels;

  switch (config.family) {
    case Family::DscdEarly:
      net.encoder1_ = Encoder::make(seed, "encoder", pair_input);
      net.encoder2_ = net.encoder1_;
      net.head1_ = Classifier::make(seed, "head.s1", c, n + 1);
      net.head2_ = Classifier::make(seed, "head.s2", c, n + 1);
      break;
    case Family::DscdLate:
      net.encoder1_ = Encoder::make(seed, "encoder", config.encoder);
      net.encoder2_ = net.encoder1_;
      net.cd_ = CdBlock::make(seed, "cd", c, cd_width, config.cd_units, norm);
      net.head1_ = Classifier::make(seed, "head.s1", cd_width, n + 1);
      net.head2_ = Classifier::make(seed, "head.s2", cd_width, n + 1);
      break;
    case Family::SscdEarly:
      net.encoder1_ = Encoder::make(seed, "encoder", config.encoder);
      net.encoder2_ = net.encoder1_;
      net.change_encoder_ = Encoder::make(seed, "change_encoder", pair_input);
      net.head1_ = Classifier::make(seed, "head.p1", c, n);
      net.head2_ = Classifier::make(seed, "head.p2", c, n);
      net.change_head_ = Classifier::make(seed, "head.c", c, 1);
      break;
    case Family::SscdLate:
    case Family::BiSRNet:
      net.encoder1_ = Encoder::make(seed, "encoder", config.encoder);
      net.encoder2_ = net.encoder1_;
      net.cd_ = CdBlock::make(seed, "cd", c, cd_width, config.cd_units, norm);
      net.head1_ = Classifier::make(seed, "head.p1", c, n);
      net.head2_ = Classifier::make(seed, "head.p2", c, n);
      net.change_head_ = Classifier::make(seed, "head.c", cd_width, 1);
      if (config.family == Family::BiSRNet) {
        net.siam_ = SiamSR::make(seed, "siam_sr", c, config.sr_reduction);
        net.cot_ = CotSR::make(seed, "cot_sr", c, config.sr_reduction, config.cotsr_shared);
      }
      break;
  }
  return net;
}

Tensor Network::upsample(const Tensor& logits) const {
  return config_.upsampling == Upsampling::Nearest ? upsample_nearest(logits, kOutputStride)
                                                   : upsample_bilinear(logits, kOutputStride);
}

ForwardOutput Network::forward(const Tensor& image1, const Tensor& image2) const {
  if (image1.shape() != image2.shape()) {
    throw ContractError("temporal images differ in shape: " + shape_str(image1.shape()) + " vs " +
                        shape_str(image2.shape()));
  }
  if (image1.rank() != 3 || image1.dim(1) % kOutputStride != 0 || image1.dim(2) % kOutputStride != 0) {
    throw ContractError("input " + shape_str(image1.shape()) + " must be [c, h, w] with h, w divisible by 8");
  }

  ForwardOutput out;
  switch (config_.family) {
    case Family::DscdEarly: {
      const Tensor x = encoder1_(concat_channels(image1, image2));
      out.p1 = upsample(head1_(x));
      out.p2 = upsample(head2_(x));
      break;
    }
    case Family::DscdLate: {
      const Tensor d = (*cd_)(encoder1_(image1), encoder2_(image2));
      out.p1 = upsample(head1_(d));
      out.p2 = upsample(head2_(d));
      break;
    }
    case Family::SscdEarly: {
      out.p1 = upsample(head1_(encoder1_(image1)));
      out.p2 = upsample(head2_(encoder2_(image2)));
      out.change = upsample((*change_head_)((*change_encoder_)(concat_channels(image1, image2))));
      break;
    }
    case Family::SscdLate: {
      const Tensor x1 = encoder1_(image1);
      const Tensor x2 = encoder2_(image2);
      out.p1 = upsample(head1_(x1));
      out.p2 = upsample(head2_(x2));
      out.change = upsample((*change_head_)((*cd_)(x1, x2)));
      break;
    }
    case Family::BiSRNet: {
      const Tensor x1 = (*siam_)(encoder1_(image1));
      const Tensor x2 = (*siam_)(encoder2_(image2));
      auto [t1, t2] = (*cot_)(x1, x2);
      out.p1 = upsample(head1_(t1));
      out.p2 = upsample(head2_(t2));
      // The change branch sees the Siam-SR features, not the Cot-SR output.
      out.change = upsample((*change_head_)((*cd_)(x1, x2)));
      break;
    }
  }

  if (is_direct(config_.family)) {
    out.s1 = argmax_labels(out.p1);
    out.s2 = argmax_labels(out.p2);
  } else {
    std::tie(out.s1, out.s2) = mask_semantic(out.p1, out.p2, out.change, config_.change_threshold);
  }
  return out;
}

ParamList Network::parameters() const {
  ParamList list;
  encoder1_.collect(list, "encoder");
  encoder2_.collect(list, "encoder");
  if (change_encoder_) change_encoder_->collect(list, "change_encoder");
  if (siam_) siam_->collect(list, "siam_sr");
  if (cot_) cot_->collect(list, "cot_sr");
  if (cd_) cd_->collect(list, "cd");
  const bool direct = is_direct(config_.family);
  head1_.collect(list, direct ? "head.s1" : "head.p1");
  head2_.collect(list, direct ? "head.s2" : "head.p2");
  if (change_head_) change_head_->collect(list, "head.c");
  return list;
}

std::uint64_t Network::flops(std::size_t height, std::size_t width) const {
  const std::size_t h = height / kOutputStride, w = width / kOutputStride;
  std::uint64_t total = 0;
  switch (config_.family) {
    case Family::DscdEarly:
      total += encoder1_.flops(height, width);
      break;
    case Family::DscdLate:
      total += encoder1_.flops(height, width) + encoder2_.flops(height, width) + cd_->flops(h, w);
      break;
    case Family::SscdEarly:
      total += encoder1_.flops(height, width) + encoder2_.flops(height, width) +
               change_encoder_->flops(height, width) + change_head_->flops(h, w);
      break;
    case Family::SscdLate:
    case Family::BiSRNet:
      total += encoder1_.flops(height, width) + encoder2_.flops(height, width) + cd_->flops(h, w) +
               change_head_->flops(h, w);
      if (siam_) total += 2 * siam_->flops(h, w) + cot_->flops(h, w);
      break;
  }
  total += head1_.flops(h, w) + head2_.flops(h, w);
  return total;
}

std::uint64_t count_params(const Network& net) { return net.parameters().count(); }

std::uint64_t estimate_flops(const Network& net, std::size_t height, std::size_t width) {
  return net.flops(height, width);
}

// ---------------------------------------------------------------------------

LabelMap argmax_labels(const Tensor& logits) {
  if (logits.rank() != 3) throw DimensionError("argmax_labels expects [K, H, W], got " + shape_str(logits.shape()));
  const std::size_t k = logits.dim(0), h = logits.dim(1), w = logits.dim(2), p = h * w;
  auto d = logits.data();
  LabelMap out(h, w);
  for (std::size_t q = 0; q < p; ++q) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (d[c * p + q] > d[best * p + q]) best = c;
    }
    out.values[q] = static_cast<std::uint8_t>(best);
  }
  return out;
}

std::pair<LabelMap, LabelMap> mask_semantic(const Tensor& p1, const Tensor& p2, const Tensor& change,
                                            double threshold) {
  if (p1.rank() != 3 || p1.shape() != p2.shape() || change.rank() != 3 || change.dim(0) != 1 ||
      change.dim(1) != p1.dim(1) || change.dim(2) != p1.dim(2)) {
    throw DimensionError("mask_semantic: incompatible shapes " + shape_str(p1.shape()) + ", " +
                         shape_str(p2.shape()) + ", " + shape_str(change.shape()));
  }
  LabelMap s1 = argmax_labels(p1);
  LabelMap s2 = argmax_labels(p2);
  auto c = change.data();
  for (std::size_t q = 0; q < s1.size(); ++q) {
    const double prob = 1.0 / (1.0 + std::exp(-c[q]));
    if (prob >= threshold) {
      s1.values[q] = static_cast<std::uint8_t>(s1.values[q] + 1);
      s2.values[q] = static_cast<std::uint8_t>(s2.values[q] + 1);
    } else {
      s1.values[q] = 0;
      s2.values[q] = 0;
    }
  }
  return {std::move(s1), std::move(s2)};
}

Tensor image_tensor(const RgbImage& image) {
  const std::size_t h = image.height, w = image.width, p = h * w;
  std::vector<double> values(3 * p);
  for (std::size_t q = 0; q < p; ++q) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      values[ch * p + q] = static_cast<double>(image.rgb[q * 3 + ch]) / 127.5 - 1.0;
    }
  }
  return Tensor::from({3, h, w}, std::move(values));
}

}  // namespace scd
