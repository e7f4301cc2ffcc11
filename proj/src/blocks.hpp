#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace scd {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// Ordered set of named parameters. Adding a tensor that is already present
// (shared weights) keeps only the first registration.
class ParamList {
 public:
  void add(std::string name, const Tensor& t);
  const std::vector<NamedParam>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  std::uint64_t count() const;

 private:
  std::vector<NamedParam> items_;
};

// Gaussian(0, stddev) values drawn from a generator keyed by (seed, name), so a
// parameter's initial value does not depend on construction order.
Tensor init_param(std::uint64_t seed, const std::string& name, Shape shape, double stddev);

struct ConvLayer {
  Tensor weight;  // [out, in, k, k]
  Tensor bias;    // [out] or undefined
  int stride = 1;
  int padding = 0;

  static ConvLayer make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out,
                        std::size_t kernel, int stride, bool with_bias, double gain = 2.0);
  Tensor operator()(const Tensor& x) const;
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel() const { return weight.dim(2); }
  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const;
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;
};

// Pixelwise linear map expressed as a matrix product over the flattened
// [c, h*w] view.
struct PointwiseLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out] or undefined

  static PointwiseLayer make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out,
                             bool with_bias, double stddev);
  Tensor operator()(const Tensor& x) const;  // [in, h, w] -> [out, h, w]
  Tensor flat(const Tensor& x2d) const;      // [in, H] -> [out, H]
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;
};

struct ChannelNorm {
  Tensor gamma;
  Tensor beta;
  static ChannelNorm make(std::size_t channels);
  Tensor operator()(const Tensor& x) const { return channel_affine(x, gamma, beta); }
  void collect(ParamList& out, const std::string& name) const;
};

// relu(x + conv(relu(conv(x)))) at stride 1, no biases.
struct ResidualUnit {
  ConvLayer conv1;
  ConvLayer conv2;
  std::optional<ChannelNorm> norm1;
  std::optional<ChannelNorm> norm2;

  static ResidualUnit make(std::uint64_t seed, const std::string& name, std::size_t channels, bool norm,
                           double branch_gain);
  Tensor operator()(const Tensor& x) const;
  std::size_t channels() const { return conv1.in_channels(); }
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;
};

struct EncoderConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> stage_channels{16, 32, 64, 64};
  std::vector<int> strides{2, 2, 2, 1};
  std::vector<std::size_t> units_per_stage{1, 1, 1, 1};
  bool norm = false;

  // Throws ConfigError unless the lists agree and the total stride is 8.
  void validate() const;
  std::size_t out_channels() const { return stage_channels.back(); }
};

constexpr int kOutputStride = 8;

// Strided conv stages, each followed by residual units. Output is at 1/8 of
// the input resolution.
class Encoder {
 public:
  static Encoder make(std::uint64_t seed, const std::string& name, const EncoderConfig& config);
  Tensor operator()(const Tensor& image) const;
  std::size_t out_channels() const { return config_.out_channels(); }
  const EncoderConfig& config() const { return config_; }
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;

 private:
  struct Stage {
    ConvLayer down;
    std::optional<ChannelNorm> norm;
    std::vector<ResidualUnit> units;
  };
  EncoderConfig config_;
  std::vector<Stage> stages_;
};

// Fuses two temporal feature maps: concat -> 1x1 conv -> relu -> residual units.
class CdBlock {
 public:
  static CdBlock make(std::uint64_t seed, const std::string& name, std::size_t in_channels,
                      std::size_t width, std::size_t units, bool norm);
  Tensor operator()(const Tensor& x1, const Tensor& x2) const;
  std::size_t width() const { return fuse_.out_channels(); }
  std::size_t in_channels() const { return fuse_.in_channels() / 2; }
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;

 private:
  ConvLayer fuse_;
  std::vector<ResidualUnit> units_;
};

// Attention projections of a non-local unit: q, k reduce channels by r, v
// keeps them.
struct Projections {
  PointwiseLayer q;
  PointwiseLayer k;
  PointwiseLayer v;

  static Projections make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction);
  // Row-stochastic [H, H] attention of a [c, h, w] feature map.
  Tensor attention(const Tensor& x) const;
  Tensor values(const Tensor& x) const;  // [c, H]
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;
};

// x + aggregate(v, A): column j of the output is sum_i A[j][i] * v[:, i],
// i.e. v x A^T in row-major terms. With v zero the block is the identity.
Tensor apply_attention(const Tensor& x, const Tensor& values, const Tensor& attention);

std::size_t reduced_channels(std::size_t channels, int reduction);

class SiamSR {
 public:
  static SiamSR make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction);
  Tensor operator()(const Tensor& x) const;
  Tensor attention(const Tensor& x) const { return proj_.attention(x); }
  Projections& projections() { return proj_; }
  const Projections& projections() const { return proj_; }
  std::uint64_t flops(std::size_t h, std::size_t w) const { return proj_.flops(h, w) + attention_flops(h, w); }
  std::uint64_t attention_flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const { proj_.collect(out, name); }

 private:
  Projections proj_;
  std::size_t channels_ = 0;
};

// Cross-temporal reasoning: each branch's attention reweights the opposite
// branch's values.
class CotSR {
 public:
  static CotSR make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction,
                    bool shared_projections);
  std::pair<Tensor, Tensor> operator()(const Tensor& x1, const Tensor& x2) const;
  Projections& branch1() { return p1_; }
  Projections& branch2() { return p2_; }
  const Projections& branch1() const { return p1_; }
  const Projections& branch2() const { return p2_; }
  bool shared() const { return p1_.q.weight.same_as(p2_.q.weight); }
  std::uint64_t flops(std::size_t h, std::size_t w) const;
  void collect(ParamList& out, const std::string& name) const;

 private:
  Projections p1_;
  Projections p2_;
  std::size_t channels_ = 0;
};

// 1x1 classifier producing logits; no activation.
class Classifier {
 public:
  static Classifier make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const { return layer_(x); }
  PointwiseLayer& layer() { return layer_; }
  std::size_t out_channels() const { return layer_.out_channels(); }
  std::uint64_t flops(std::size_t h, std::size_t w) const { return layer_.flops(h, w); }
  void collect(ParamList& out, const std::string& name) const { layer_.collect(out, name); }

 private:
  PointwiseLayer layer_;
};

}  // namespace scd
