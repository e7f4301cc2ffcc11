#include "blocks.hpp"

#include <cmath>
#include <random>

#include "errors.hpp"

namespace scd {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Residual branches start scaled down so a stack of units stays close to
// unit gain without normalization layers.
constexpr double kResidualBranchGain = 0.25;

}  // namespace

void ParamList::add(std::string name, const Tensor& t) {
  if (!t.defined()) return;
  for (const auto& p : items_) {
    if (p.tensor.same_as(t)) return;
  }
  items_.push_back({std::move(name), t});
}

std::vector<Tensor> ParamList::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.tensor);
  return out;
}

std::uint64_t ParamList::count() const {
  std::uint64_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

Tensor init_param(std::uint64_t seed, const std::string& name, Shape shape, double stddev) {
  std::vector<double> values(shape_numel(shape), 0.0);
  if (stddev > 0.0) {
    const std::uint64_t h = fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : values) v = dist(rng);
  }
  return Tensor::from(std::move(shape), std::move(values), true);
}

// ---------------------------------------------------------------------------

ConvLayer ConvLayer::make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out,
                          std::size_t kernel, int stride, bool with_bias, double gain) {
  ConvLayer layer;
  const double stddev = std::sqrt(gain / static_cast<double>(in * kernel * kernel));
  layer.weight = init_param(seed, name + ".weight", {out, in, kernel, kernel}, stddev);
  if (with_bias) layer.bias = Tensor::zeros({out}, true);
  layer.stride = stride;
  layer.padding = static_cast<int>(kernel / 2);
  return layer;
}

Tensor ConvLayer::operator()(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != in_channels()) {
    throw DimensionError("conv layer expects " + std::to_string(in_channels()) + " input channels, got " +
                         shape_str(x.shape()));
  }
  Tensor y = conv2d(x, weight, stride, padding);
  return bias.defined() ? bias_add(y, bias) : y;
}

std::pair<std::size_t, std::size_t> ConvLayer::output_size(std::size_t h, std::size_t w) const {
  const std::size_t k = kernel();
  const std::size_t p = static_cast<std::size_t>(padding);
  const std::size_t s = static_cast<std::size_t>(stride);
  return {(h + 2 * p - k) / s + 1, (w + 2 * p - k) / s + 1};
}

std::uint64_t ConvLayer::flops(std::size_t h, std::size_t w) const {
  auto [ho, wo] = output_size(h, w);
  return 2ull * out_channels() * in_channels() * kernel() * kernel() * ho * wo;
}

void ConvLayer::collect(ParamList& out, const std::string& name) const {
  out.add(name + ".weight", weight);
  out.add(name + ".bias", bias);
}

PointwiseLayer PointwiseLayer::make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out,
                                    bool with_bias, double stddev) {
  PointwiseLayer layer;
  layer.weight = init_param(seed, name + ".weight", {out, in}, stddev);
  if (with_bias) layer.bias = Tensor::zeros({out}, true);
  return layer;
}

Tensor PointwiseLayer::flat(const Tensor& x2d) const {
  Tensor y = matmul(weight, x2d);
  return bias.defined() ? bias_add(y, bias) : y;
}

Tensor PointwiseLayer::operator()(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != in_channels()) {
    throw DimensionError("1x1 layer expects " + std::to_string(in_channels()) + " input channels, got " +
                         shape_str(x.shape()));
  }
  const std::size_t h = x.dim(1), w = x.dim(2);
  return reshape(flat(reshape(x, {x.dim(0), h * w})), {out_channels(), h, w});
}

std::uint64_t PointwiseLayer::flops(std::size_t h, std::size_t w) const {
  return 2ull * in_channels() * out_channels() * h * w;
}

void PointwiseLayer::collect(ParamList& out, const std::string& name) const {
  out.add(name + ".weight", weight);
  out.add(name + ".bias", bias);
}

ChannelNorm ChannelNorm::make(std::size_t channels) {
  return {Tensor::full({channels}, 1.0, true), Tensor::zeros({channels}, true)};
}

void ChannelNorm::collect(ParamList& out, const std::string& name) const {
  out.add(name + ".gamma", gamma);
  out.add(name + ".beta", beta);
}

// ---------------------------------------------------------------------------

ResidualUnit ResidualUnit::make(std::uint64_t seed, const std::string& name, std::size_t channels, bool norm,
                                double branch_gain) {
  ResidualUnit u;
  u.conv1 = ConvLayer::make(seed, name + ".conv1", channels, channels, 3, 1, false);
  u.conv2 = ConvLayer::make(seed, name + ".conv2", channels, channels, 3, 1, false, 2.0 * branch_gain * branch_gain);
  if (norm) {
    u.norm1 = ChannelNorm::make(channels);
    u.norm2 = ChannelNorm::make(channels);
  }
  return u;
}

Tensor ResidualUnit::operator()(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != channels()) {
    throw DimensionError("residual unit expects " + std::to_string(channels()) + " channels, got " +
                         shape_str(x.shape()));
  }
  Tensor f = conv1(x);
  if (norm1) f = (*norm1)(f);
  f = conv2(relu(f));
  if (norm2) f = (*norm2)(f);
  return relu(add(x, f));
}

std::uint64_t ResidualUnit::flops(std::size_t h, std::size_t w) const { return conv1.flops(h, w) + conv2.flops(h, w); }

void ResidualUnit::collect(ParamList& out, const std::string& name) const {
  conv1.collect(out, name + ".conv1");
  conv2.collect(out, name + ".conv2");
  if (norm1) norm1->collect(out, name + ".norm1");
  if (norm2) norm2->collect(out, name + ".norm2");
}

// ---------------------------------------------------------------------------

void EncoderConfig::validate() const {
  if (in_channels == 0) throw ConfigError("encoder: in_channels must be positive");
  if (stage_channels.empty()) throw ConfigError("encoder: at least one stage is required");
  if (strides.size() != stage_channels.size() || units_per_stage.size() != stage_channels.size()) {
    throw ConfigError("encoder: channels, strides and units lists must have equal length");
  }
  long product = 1;
  for (int s : strides) {
    if (s < 1) throw ConfigError("encoder: strides must be positive");
    product *= s;
  }
  if (product != kOutputStride) {
    throw ConfigError("encoder: product of strides must be 8, got " + std::to_string(product));
  }
  for (auto c : stage_channels) {
    if (c == 0) throw ConfigError("encoder: stage channels must be positive");
  }
}

Encoder Encoder::make(std::uint64_t seed, const std::string& name, const EncoderConfig& config) {
  config.validate();
  Encoder enc;
  enc.config_ = config;
  std::size_t in = config.in_channels;
  for (std::size_t s = 0; s < config.stage_channels.size(); ++s) {
    const std::string sname = name + ".stage" + std::to_string(s);
    const std::size_t c = config.stage_channels[s];
    Stage st;
    st.down = ConvLayer::make(seed, sname + ".down", in, c, 3, config.strides[s], false);
    if (config.norm) st.norm = ChannelNorm::make(c);
    for (std::size_t u = 0; u < config.units_per_stage[s]; ++u) {
      st.units.push_back(
          ResidualUnit::make(seed, sname + ".unit" + std::to_string(u), c, config.norm, kResidualBranchGain));
    }
    enc.stages_.push_back(std::move(st));
    in = c;
  }
  return enc;
}

Tensor Encoder::operator()(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != config_.in_channels) {
    throw DimensionError("encoder expects " + std::to_string(config_.in_channels) + " input channels, got " +
                         shape_str(image.shape()));
  }
  if (image.dim(1) % kOutputStride != 0 || image.dim(2) % kOutputStride != 0) {
    throw ContractError("encoder input spatial size " + shape_str(image.shape()) + " is not divisible by 8");
  }
  Tensor x = image;
  for (const auto& st : stages_) {
    x = st.down(x);
    if (st.norm) x = (*st.norm)(x);
    x = relu(x);
    for (const auto& u : st.units) x = u(x);
  }
  return x;
}

std::uint64_t Encoder::flops(std::size_t h, std::size_t w) const {
  std::uint64_t total = 0;
  for (const auto& st : stages_) {
    total += st.down.flops(h, w);
    std::tie(h, w) = st.down.output_size(h, w);
    for (const auto& u : st.units) total += u.flops(h, w);
  }
  return total;
}

void Encoder::collect(ParamList& out, const std::string& name) const {
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const std::string sname = name + ".stage" + std::to_string(s);
    stages_[s].down.collect(out, sname + ".down");
    if (stages_[s].norm) stages_[s].norm->collect(out, sname + ".norm");
    for (std::size_t u = 0; u < stages_[s].units.size(); ++u) {
      stages_[s].units[u].collect(out, sname + ".unit" + std::to_string(u));
    }
  }
}

// ---------------------------------------------------------------------------

CdBlock CdBlock::make(std::uint64_t seed, const std::string& name, std::size_t in_channels, std::size_t width,
                      std::size_t units, bool norm) {
  if (width == 0) throw ConfigError("cd block width must be positive");
  CdBlock b;
  b.fuse_ = ConvLayer::make(seed, name + ".fuse", 2 * in_channels, width, 1, 1, false);
  for (std::size_t u = 0; u < units; ++u) {
    b.units_.push_back(ResidualUnit::make(seed, name + ".unit" + std::to_string(u), width, norm, kResidualBranchGain));
  }
  return b;
}

Tensor CdBlock::operator()(const Tensor& x1, const Tensor& x2) const {
  if (x1.shape() != x2.shape()) {
    throw DimensionError("cd block: temporal features differ " + shape_str(x1.shape()) + " vs " +
                         shape_str(x2.shape()));
  }
  Tensor x = relu(fuse_(concat_channels(x1, x2)));
  for (const auto& u : units_) x = u(x);
  return x;
}

std::uint64_t CdBlock::flops(std::size_t h, std::size_t w) const {
  std::uint64_t total = fuse_.flops(h, w);
  for (const auto& u : units_) total += u.flops(h, w);
  return total;
}

void CdBlock::collect(ParamList& out, const std::string& name) const {
  fuse_.collect(out, name + ".fuse");
  for (std::size_t u = 0; u < units_.size(); ++u) units_[u].collect(out, name + ".unit" + std::to_string(u));
}

// ---------------------------------------------------------------------------

std::size_t reduced_channels(std::size_t channels, int reduction) {
  if (reduction < 1 || channels % static_cast<std::size_t>(reduction) != 0) {
    throw ConfigError("channel count " + std::to_string(channels) + " is not divisible by reduction factor " +
                      std::to_string(reduction));
  }
  return channels / static_cast<std::size_t>(reduction);
}

Projections Projections::make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction) {
  const std::size_t reduced = reduced_channels(channels, reduction);
  const double stddev = std::sqrt(2.0 / static_cast<double>(channels));
  Projections p;
  p.q = PointwiseLayer::make(seed, name + ".q", channels, reduced, true, stddev);
  // Keys carry no bias: it would shift each score row by a constant that the
  // row softmax removes.
  p.k = PointwiseLayer::make(seed, name + ".k", channels, reduced, false, stddev);
  p.v = PointwiseLayer::make(seed, name + ".v", channels, channels, true, 0.0);
  return p;
}

Tensor Projections::attention(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != q.in_channels()) {
    throw DimensionError("attention expects " + std::to_string(q.in_channels()) + " channels, got " +
                         shape_str(x.shape()));
  }
  const Tensor flat = reshape(x, {x.dim(0), x.dim(1) * x.dim(2)});
  const Tensor query = transpose(q.flat(flat));  // [H, c']
  const Tensor key = k.flat(flat);               // [c', H]
  return softmax_rows(matmul(query, key));
}

Tensor Projections::values(const Tensor& x) const {
  return v.flat(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

std::uint64_t Projections::flops(std::size_t h, std::size_t w) const {
  return q.flops(h, w) + k.flops(h, w) + v.flops(h, w);
}

void Projections::collect(ParamList& out, const std::string& name) const {
  q.collect(out, name + ".q");
  k.collect(out, name + ".k");
  v.collect(out, name + ".v");
}

Tensor apply_attention(const Tensor& x, const Tensor& values, const Tensor& attention) {
  return add(x, reshape(matmul(values, transpose(attention)), x.shape()));
}

SiamSR SiamSR::make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction) {
  SiamSR b;
  b.proj_ = Projections::make(seed, name, channels, reduction);
  b.channels_ = channels;
  return b;
}

Tensor SiamSR::operator()(const Tensor& x) const { return apply_attention(x, proj_.values(x), proj_.attention(x)); }

std::uint64_t SiamSR::attention_flops(std::size_t h, std::size_t w) const {
  const std::uint64_t hw = h * w;
  const std::uint64_t reduced = proj_.q.out_channels();
  return 2ull * hw * reduced * hw + 2ull * channels_ * hw * hw;
}

CotSR CotSR::make(std::uint64_t seed, const std::string& name, std::size_t channels, int reduction,
                  bool shared_projections) {
  CotSR b;
  b.channels_ = channels;
  if (shared_projections) {
    b.p1_ = Projections::make(seed, name, channels, reduction);
    b.p2_ = b.p1_;
  } else {
    b.p1_ = Projections::make(seed, name + ".b1", channels, reduction);
    b.p2_ = Projections::make(seed, name + ".b2", channels, reduction);
  }
  return b;
}

std::pair<Tensor, Tensor> CotSR::operator()(const Tensor& x1, const Tensor& x2) const {
  if (x1.shape() != x2.shape()) {
    throw DimensionError("cot-sr: temporal features differ " + shape_str(x1.shape()) + " vs " + shape_str(x2.shape()));
  }
  const Tensor a1 = p1_.attention(x1);
  const Tensor a2 = p2_.attention(x2);
  return {apply_attention(x1, p1_.values(x1), a2), apply_attention(x2, p2_.values(x2), a1)};
}

std::uint64_t CotSR::flops(std::size_t h, std::size_t w) const {
  const std::uint64_t hw = h * w;
  const std::uint64_t reduced = p1_.q.out_channels();
  const std::uint64_t attention = 2ull * hw * reduced * hw + 2ull * channels_ * hw * hw;
  return p1_.flops(h, w) + p2_.flops(h, w) + 2 * attention;
}

void CotSR::collect(ParamList& out, const std::string& name) const {
  if (shared()) {
    p1_.collect(out, name);
  } else {
    p1_.collect(out, name + ".b1");
    p2_.collect(out, name + ".b2");
  }
}

Classifier Classifier::make(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out) {
  Classifier c;
  c.layer_ = PointwiseLayer::make(seed, name, in, out, true, std::sqrt(1.0 / static_cast<double>(in)));
  return c;
}

}  // namespace scd
