#include "gradsuite.hpp"

#include <functional>
#include <random>

#include "blocks.hpp"
#include "errors.hpp"
#include "labels.hpp"
#include "losses.hpp"
#include "tensor.hpp"

namespace scd {

namespace {

class Operands {
 public:
  explicit Operands(std::uint64_t seed) : rng_(seed ^ 0x67726164ull) {}

  Tensor tensor(Shape shape, double stddev = 1.0) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::normal_distribution<double> g(0.0, stddev);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng_);
    return Tensor::from(std::move(shape), std::move(v), true);
  }

  // Random labels in {0..max}.
  LabelMap labels(std::size_t h, std::size_t w, std::size_t max) {
    LabelMap m(h, w);
    std::uniform_int_distribution<int> u(0, static_cast<int>(max));
    for (auto& v : m.values) v = static_cast<std::uint8_t>(u(rng_));
    return m;
  }

  std::uint64_t seed() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

Tensor readout(const Tensor& out, const Tensor& r) { return sum(mul(out, r)); }

void randomize(Operands& ops, Tensor& t, double stddev) {
  const Tensor fresh = ops.tensor(t.shape(), stddev);
  auto dst = t.mutable_data();
  std::copy(fresh.data().begin(), fresh.data().end(), dst.begin());
}

std::vector<Tensor> with(std::vector<Tensor> base, const ParamList& params) {
  for (const auto& t : params.tensors()) base.push_back(t);
  return base;
}

GradComponentResult check(const std::string& name, const std::function<Tensor()>& f, std::vector<Tensor> wrt,
                          double step) {
  const GradCheckResult r = grad_check(f, std::span<Tensor>(wrt), step);
  return {name, r.max_rel_error, r.elements};
}

void randomize_projections(Operands& ops, Projections& p) {
  randomize(ops, p.v.weight, 0.5);
  if (p.v.bias.defined()) randomize(ops, p.v.bias, 0.5);
  if (p.q.bias.defined()) randomize(ops, p.q.bias, 0.5);
  if (p.k.bias.defined()) randomize(ops, p.k.bias, 0.5);
}

}  // namespace

const std::vector<std::string>& grad_components() {
  static const std::vector<std::string> names = {"residual_unit", "encoder_stage", "cd_block",    "siam_sr",
                                                 "cot_sr",        "head",          "l_sem",       "l_change",
                                                 "l_sc_intent",   "l_sc_literal",  "l_scd"};
  return names;
}

GradComponentResult grad_check_component(const std::string& name, std::uint64_t seed, double step) {
  Operands ops(seed * 1315423911ull + fnv1a(name));
  const std::uint64_t init = ops.seed();

  if (name == "residual_unit") {
    const ResidualUnit unit = ResidualUnit::make(init, "unit", 3, false, 1.0);
    Tensor x = ops.tensor({3, 5, 5});
    Tensor r = ops.tensor({3, 5, 5}).detach();
    ParamList params;
    unit.collect(params, "unit");
    return check(name, [&] { return readout(unit(x), r); }, with({x}, params), step);
  }
  if (name == "encoder_stage") {
    EncoderConfig cfg;
    cfg.in_channels = 3;
    cfg.stage_channels = {4, 4, 4};
    cfg.strides = {2, 2, 2};
    cfg.units_per_stage = {1, 1, 0};
    cfg.norm = true;
    const Encoder enc = Encoder::make(init, "enc", cfg);
    ParamList params;
    enc.collect(params, "enc");
    // Norm parameters start at (1, 0); move them off the identity.
    for (const auto& p : params.items()) {
      if (p.tensor.rank() == 1) {
        Tensor t = p.tensor;
        randomize(ops, t, 0.5);
        auto d = t.mutable_data();
        for (auto& v : d) v += 1.0;
      }
    }
    Tensor x = ops.tensor({3, 16, 16});
    Tensor r = ops.tensor({4, 2, 2}).detach();
    return check(name, [&] { return readout(enc(x), r); }, with({x}, params), step);
  }
  if (name == "cd_block") {
    const CdBlock cd = CdBlock::make(init, "cd", 3, 4, 1, false);
    Tensor x1 = ops.tensor({3, 4, 4});
    Tensor x2 = ops.tensor({3, 4, 4});
    Tensor r = ops.tensor({4, 4, 4}).detach();
    ParamList params;
    cd.collect(params, "cd");
    return check(name, [&] { return readout(cd(x1, x2), r); }, with({x1, x2}, params), step);
  }
  if (name == "siam_sr") {
    SiamSR sr = SiamSR::make(init, "sr", 4, 2);
    randomize_projections(ops, sr.projections());
    Tensor x = ops.tensor({4, 3, 3});
    Tensor r = ops.tensor({4, 3, 3}).detach();
    ParamList params;
    sr.collect(params, "sr");
    return check(name, [&] { return readout(sr(x), r); }, with({x}, params), step);
  }
  if (name == "cot_sr") {
    GradComponentResult worst{name, 0.0, 0};
    for (bool shared : {true, false}) {
      CotSR cot = CotSR::make(init, "cot", 4, 2, shared);
      randomize_projections(ops, cot.branch1());
      if (!shared) randomize_projections(ops, cot.branch2());
      Tensor x1 = ops.tensor({4, 3, 3});
      Tensor x2 = ops.tensor({4, 3, 3});
      Tensor r1 = ops.tensor({4, 3, 3}).detach();
      Tensor r2 = ops.tensor({4, 3, 3}).detach();
      ParamList params;
      cot.collect(params, "cot");
      auto f = [&] {
        auto [y1, y2] = cot(x1, x2);
        return add(readout(y1, r1), readout(y2, r2));
      };
      const auto res = check(name, f, with({x1, x2}, params), step);
      worst.max_rel_error = std::max(worst.max_rel_error, res.max_rel_error);
      worst.elements += res.elements;
    }
    return worst;
  }
  if (name == "head") {
    const Classifier head = Classifier::make(init, "head", 4, 3);
    Tensor x = ops.tensor({4, 3, 3});
    Tensor r = ops.tensor({3, 3, 3}).detach();
    ParamList params;
    head.collect(params, "head");
    return check(name, [&] { return readout(head(x), r); }, with({x}, params), step);
  }
  if (name == "l_sem") {
    Tensor logits = ops.tensor({3, 4, 4});
    const LabelMap labels = ops.labels(4, 4, 3);
    Tensor direct = ops.tensor({4, 4, 4});
    auto f = [&] { return add(semantic_loss(logits, labels), direct_semantic_loss(direct, labels)); };
    return check(name, f, {logits, direct}, step);
  }
  if (name == "l_change") {
    Tensor logits = ops.tensor({1, 4, 4});
    const LabelMap labels = ops.labels(4, 4, 1);
    return check(name, [&] { return change_loss(logits, labels); }, {logits}, step);
  }
  if (name == "l_sc_intent" || name == "l_sc_literal") {
    const ScMode mode = name == "l_sc_intent" ? ScMode::Intent : ScMode::Literal;
    Tensor p1 = ops.tensor({3, 4, 4});
    Tensor p2 = ops.tensor({3, 4, 4});
    const LabelMap labels = ops.labels(4, 4, 1);
    auto f = [&] {
      return add(semantic_consistency_loss(p1, p2, labels, mode, ScSpace::Probability),
                 semantic_consistency_loss(p1, p2, labels, mode, ScSpace::Logit));
    };
    return check(name, f, {p1, p2}, step);
  }
  if (name == "l_scd") {
    Tensor p1 = ops.tensor({3, 4, 4});
    Tensor p2 = ops.tensor({3, 4, 4});
    Tensor c = ops.tensor({1, 4, 4});
    const LabelMap l1 = ops.labels(4, 4, 3);
    LabelMap l2 = ops.labels(4, 4, 3);
    for (std::size_t q = 0; q < l1.size(); ++q) {
      if (l1.values[q] == 0) l2.values[q] = 0;
      else if (l2.values[q] == 0) l2.values[q] = 1;
    }
    const LabelMap lc = change_mask(l1);
    auto f = [&] {
      return total_loss(semantic_loss(p1, l1), semantic_loss(p2, l2), change_loss(c, lc),
                        semantic_consistency_loss(p1, p2, lc));
    };
    return check(name, f, {p1, p2, c}, step);
  }
  throw ContractError("unknown gradient-check component '" + name + "'");
}

std::vector<GradComponentResult> run_grad_suite(std::uint64_t seed, double step) {
  std::vector<GradComponentResult> out;
  for (const auto& name : grad_components()) out.push_back(grad_check_component(name, seed, step));
  return out;
}

}  // namespace scd
