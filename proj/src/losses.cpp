#include "losses.hpp"

#include <string>

#include "errors.hpp"

namespace scd {

namespace {

void require_pixels(const Tensor& logits, const LabelMap& labels, const char* what) {
  if (logits.rank() != 3 || logits.dim(1) != labels.height || logits.dim(2) != labels.width) {
    throw DimensionError(std::string(what) + ": logits " + shape_str(logits.shape()) + " do not match labels " +
                         std::to_string(labels.height) + "x" + std::to_string(labels.width));
  }
}

// [K, H, W] -> [H*W, K]
Tensor pixel_rows(const Tensor& x) { return transpose(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)})); }

// -sum(weights * log_softmax(rows)).
Tensor weighted_nll(const Tensor& logits, std::vector<double> weights) {
  const Tensor logp = log_softmax_rows(pixel_rows(logits));
  const Tensor w = Tensor::from(logp.shape(), std::move(weights));
  return scale(sum(mul(logp, w)), -1.0);
}

}  // namespace

ScMode parse_sc_mode(std::string_view text) {
  if (text == "intent") return ScMode::Intent;
  if (text == "literal") return ScMode::Literal;
  throw ConfigError("loss.sc_mode must be intent or literal, got '" + std::string(text) + "'");
}

ScSpace parse_sc_space(std::string_view text) {
  if (text == "prob" || text == "probability") return ScSpace::Probability;
  if (text == "logit") return ScSpace::Logit;
  throw ConfigError("loss.sc_space must be prob or logit, got '" + std::string(text) + "'");
}

std::string_view sc_mode_name(ScMode mode) { return mode == ScMode::Intent ? "intent" : "literal"; }

std::string_view sc_space_name(ScSpace space) { return space == ScSpace::Probability ? "prob" : "logit"; }

Tensor semantic_loss(const Tensor& logits, const LabelMap& labels, std::size_t* counted) {
  require_pixels(logits, labels, "semantic_loss");
  const std::size_t n = logits.dim(0), p = labels.size();
  std::size_t count = 0;
  for (auto v : labels.values) {
    if (v > n) throw DataError("semantic_loss: label " + std::to_string(v) + " exceeds class count " + std::to_string(n));
    if (v != 0) ++count;
  }
  if (counted) *counted = count;
  if (count == 0) return Tensor::scalar(0.0);
  std::vector<double> weights(p * n, 0.0);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t q = 0; q < p; ++q) {
    const auto v = labels.values[q];
    if (v != 0) weights[q * n + (v - 1)] = inv;
  }
  return weighted_nll(logits, std::move(weights));
}

Tensor direct_semantic_loss(const Tensor& logits, const LabelMap& labels) {
  require_pixels(logits, labels, "direct_semantic_loss");
  const std::size_t k = logits.dim(0), p = labels.size();
  std::vector<double> weights(p * k, 0.0);
  const double inv = 1.0 / static_cast<double>(p);
  for (std::size_t q = 0; q < p; ++q) {
    const auto v = labels.values[q];
    if (v >= k) {
      throw DataError("direct_semantic_loss: label " + std::to_string(v) + " exceeds class count " +
                      std::to_string(k - 1));
    }
    weights[q * k + v] = inv;
  }
  return weighted_nll(logits, std::move(weights));
}

Tensor change_loss(const Tensor& logits, const LabelMap& change_labels) {
  require_pixels(logits, change_labels, "change_loss");
  if (logits.dim(0) != 1) throw DimensionError("change_loss expects a single logit channel");
  const std::size_t p = change_labels.size();
  std::vector<double> pos(p), neg(p);
  for (std::size_t q = 0; q < p; ++q) {
    const auto v = change_labels.values[q];
    if (v > 1) throw DataError("change_loss: change label " + std::to_string(v) + " is not binary");
    pos[q] = v;
    neg[q] = 1.0 - v;
  }
  const Shape shape = logits.shape();
  const Tensor prob = clamp(sigmoid(logits), 1e-12, 1.0 - 1e-12);
  const Tensor log_p = log(prob);
  const Tensor log_q = log(add_scalar(scale(prob, -1.0), 1.0));
  const Tensor ll = add(mul(Tensor::from(shape, std::move(pos)), log_p), mul(Tensor::from(shape, std::move(neg)), log_q));
  return scale(sum(ll), -1.0 / static_cast<double>(p));
}

Tensor semantic_consistency_loss(const Tensor& p1, const Tensor& p2, const LabelMap& change_labels, ScMode mode,
                                 ScSpace space) {
  require_pixels(p1, change_labels, "semantic_consistency_loss");
  if (p1.shape() != p2.shape()) {
    throw DimensionError("semantic_consistency_loss: " + shape_str(p1.shape()) + " vs " + shape_str(p2.shape()));
  }
  Tensor x1 = pixel_rows(p1);
  Tensor x2 = pixel_rows(p2);
  if (space == ScSpace::Probability) {
    x1 = softmax_rows(x1);
    x2 = softmax_rows(x2);
  }
  const Tensor cos = cosine_rows(x1, x2);
  const std::size_t p = change_labels.size();
  // Per pixel: offset + sign * cos, where the (1 - cos) branch has offset 1.
  std::vector<double> sign(p);
  double offset = 0.0;
  for (std::size_t q = 0; q < p; ++q) {
    const auto y = change_labels.values[q];
    if (y > 1) throw DataError("semantic_consistency_loss: change label " + std::to_string(y) + " is not binary");
    const bool pull = (mode == ScMode::Intent) ? (y == 0) : (y == 1);
    sign[q] = pull ? -1.0 : 1.0;
    if (pull) offset += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(p);
  const Tensor weighted = sum(mul(cos, Tensor::from({p}, std::move(sign))));
  return add_scalar(scale(weighted, inv), offset * inv);
}

Tensor total_loss(const Tensor& sem1, const Tensor& sem2, const Tensor& change, const Tensor& sc) {
  return add(add(scale(add(sem1, sem2), 0.5), change), sc);
}

double total_loss(double sem1, double sem2, double change, double sc) { return (sem1 + sem2) / 2.0 + change + sc; }

LossReport& LossReport::operator+=(const LossReport& o) {
  l_sem1 += o.l_sem1;
  l_sem2 += o.l_sem2;
  l_change += o.l_change;
  l_sc += o.l_sc;
  l_total += o.l_total;
  sem1_pixels += o.sem1_pixels;
  sem2_pixels += o.sem2_pixels;
  change_pixels += o.change_pixels;
  sc_pixels += o.sc_pixels;
  return *this;
}

LossReport LossReport::scaled(double f) const {
  LossReport r = *this;
  r.l_sem1 *= f;
  r.l_sem2 *= f;
  r.l_change *= f;
  r.l_sc *= f;
  r.l_total *= f;
  return r;
}

LabelMap change_mask(const LabelMap& semantic) {
  LabelMap out(semantic.height, semantic.width);
  for (std::size_t q = 0; q < semantic.size(); ++q) out.values[q] = semantic.values[q] != 0 ? 1 : 0;
  return out;
}

}  // namespace scd
