#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "gradsuite.hpp"
#include "losses.hpp"
#include "test_util.hpp"

using namespace scd;
using scd::testing::random_labels;
using scd::testing::random_tensor;

namespace {

LabelMap labels(std::size_t h, std::size_t w, std::vector<std::uint8_t> v) {
  LabelMap m(h, w);
  m.values = std::move(v);
  return m;
}

LabelMap inverted(const LabelMap& m) {
  LabelMap out = m;
  for (auto& v : out.values) v = v ? 0 : 1;
  return out;
}

Tensor offset_pixel_logits(const Tensor& logits, std::size_t pixel, double shift) {
  Tensor out = logits.clone();
  const std::size_t n = logits.dim(0);
  const std::size_t hw = logits.dim(1) * logits.dim(2);
  for (std::size_t k = 0; k < n; ++k) out.mutable_data()[k * hw + pixel] += shift;
  return out;
}

}  // namespace

TEST_CASE("semantic loss: exclusion, confidence and uniform logits") {
  const Tensor logits = Tensor::from({2, 1, 2}, {0.3, -1.0, 2.0, 0.5});
  std::size_t counted = 99;
  CHECK(semantic_loss(logits, labels(1, 2, {0, 0}), &counted).item() == 0.0);
  CHECK(counted == 0);

  CHECK(semantic_loss(Tensor::from({2, 1, 1}, {60.0, -60.0}), labels(1, 1, {1})).item() < 1e-12);
  CHECK(semantic_loss(Tensor::zeros({2, 1, 1}), labels(1, 1, {1})).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(semantic_loss(Tensor::zeros({2, 1, 1}), labels(1, 1, {1})).item() == doctest::Approx(0.693147).epsilon(1e-6));

  // Only labelled pixels enter the mean.
  semantic_loss(logits, labels(1, 2, {0, 2}), &counted);
  CHECK(counted == 1);
}

TEST_CASE("semantic loss rejects labels above N") {
  CHECK_THROWS_AS(semantic_loss(Tensor::zeros({2, 1, 1}), labels(1, 1, {3})), DataError);
  CHECK_THROWS_AS(direct_semantic_loss(Tensor::zeros({3, 1, 1}), labels(1, 1, {3})), DataError);
  CHECK_THROWS_AS(semantic_loss(Tensor::zeros({2, 1, 2}), labels(1, 1, {1})), DimensionError);
}

TEST_CASE("direct semantic loss scores all N+1 classes including no-change") {
  CHECK(direct_semantic_loss(Tensor::zeros({3, 1, 1}), labels(1, 1, {0})).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("semantic loss is invariant to a per-pixel logit shift") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Tensor logits = random_tensor(rng, {4, 3, 3}, 2.0, false);
    const LabelMap lab = random_labels(rng, 3, 3, 4);
    Tensor shifted = logits;
    for (std::size_t q = 0; q < 9; ++q) shifted = offset_pixel_logits(shifted, q, 100.0 * (q % 3) - 70.0);
    CHECK(std::abs(semantic_loss(logits, lab).item() - semantic_loss(shifted, lab).item()) < 1e-9);
  }
}

TEST_CASE("change loss closed forms") {
  CHECK(change_loss(Tensor::zeros({1, 1, 1}), labels(1, 1, {1})).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(change_loss(Tensor::from({1, 1, 2}, {80.0, -80.0}), labels(1, 2, {1, 0})).item() < 1e-11);
  // Clamping bounds the loss of a confidently wrong pixel at -log(1e-12).
  CHECK(change_loss(Tensor::from({1, 1, 1}, {-800.0}), labels(1, 1, {1})).item() ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("semantic consistency loss closed forms") {
  std::mt19937_64 rng(12);
  const Tensor p = random_tensor(rng, {3, 2, 2}, 1.0, false);
  CHECK(std::abs(semantic_consistency_loss(p, p, labels(2, 2, {0, 0, 0, 0})).item()) < 1e-12);

  // Saturated one-hot probabilities on distinct classes are orthogonal.
  const Tensor a = Tensor::from({2, 1, 1}, {60.0, -60.0});
  const Tensor b = Tensor::from({2, 1, 1}, {-60.0, 60.0});
  CHECK(semantic_consistency_loss(a, b, labels(1, 1, {1})).item() < 1e-12);
  CHECK(semantic_consistency_loss(a, b, labels(1, 1, {0})).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("literal mode equals intent mode with the change labels inverted") {
  std::mt19937_64 rng(13);
  for (ScSpace space : {ScSpace::Probability, ScSpace::Logit}) {
    for (int t = 0; t < 20; ++t) {
      const Tensor p1 = random_tensor(rng, {4, 3, 4}, 1.5, false);
      const Tensor p2 = random_tensor(rng, {4, 3, 4}, 1.5, false);
      const LabelMap c = random_labels(rng, 3, 4, 1);
      const double literal = semantic_consistency_loss(p1, p2, c, ScMode::Literal, space).item();
      const double intent = semantic_consistency_loss(p1, p2, inverted(c), ScMode::Intent, space).item();
      CHECK(std::abs(literal - intent) < 1e-12);
    }
  }
}

TEST_CASE("consistency loss decreases as P1 moves toward P2 at an unchanged pixel") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const Tensor p1 = random_tensor(rng, {4, 1, 1}, 2.0, false);
    const Tensor p2 = random_tensor(rng, {4, 1, 1}, 2.0, false);
    const LabelMap c = labels(1, 1, {0});
    double previous = semantic_consistency_loss(p1, p2, c).item();
    for (int s = 1; s <= 10; ++s) {
      const double alpha = s / 10.0;
      std::vector<double> mix(4);
      for (std::size_t k = 0; k < 4; ++k) mix[k] = (1 - alpha) * p1.data()[k] + alpha * p2.data()[k];
      const double current = semantic_consistency_loss(Tensor::from({4, 1, 1}, mix), p2, c).item();
      CHECK(current < previous + 1e-15);
      previous = current;
    }
    CHECK(previous < 1e-12);
  }
}

TEST_CASE("all losses are non-negative and the probability-space SC loss lies in [0, 1]") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 50; ++t) {
    const Tensor p1 = random_tensor(rng, {3, 4, 4}, 3.0, false);
    const Tensor p2 = random_tensor(rng, {3, 4, 4}, 3.0, false);
    const Tensor c = random_tensor(rng, {1, 4, 4}, 3.0, false);
    const LabelMap l = random_labels(rng, 4, 4, 3);
    const LabelMap lc = change_mask(l);
    CHECK(semantic_loss(p1, l).item() >= 0.0);
    CHECK(direct_semantic_loss(p1, random_labels(rng, 4, 4, 2)).item() >= 0.0);
    CHECK(change_loss(c, lc).item() >= 0.0);
    for (ScMode mode : {ScMode::Intent, ScMode::Literal}) {
      const double sc = semantic_consistency_loss(p1, p2, lc, mode).item();
      CHECK(sc >= 0.0);
      CHECK(sc <= 1.0);
    }
  }
}

TEST_CASE("total loss arithmetic") {
  CHECK(total_loss(0.2, 0.4, 0.1, 0.05) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(total_loss(0.0, 0.0, 0.0, 0.0) == 0.0);
  const Tensor t = total_loss(Tensor::scalar(0.2), Tensor::scalar(0.4), Tensor::scalar(0.1), Tensor::scalar(0.05));
  CHECK(std::abs(t.item() - 0.45) < 1e-12);
}

TEST_CASE("loss report accumulates and scales") {
  LossReport a;
  a.l_sem1 = 1.0;
  a.l_total = 2.0;
  a.sem1_pixels = 3;
  LossReport b = a;
  a += b;
  CHECK(a.l_sem1 == 2.0);
  CHECK(a.sem1_pixels == 6);
  CHECK(a.scaled(0.5).l_total == 2.0);
}

TEST_CASE("change mask and sc option names") {
  const LabelMap m = change_mask(labels(1, 3, {0, 2, 1}));
  CHECK(m.values == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(parse_sc_mode("literal") == ScMode::Literal);
  CHECK(parse_sc_space(sc_space_name(ScSpace::Logit)) == ScSpace::Logit);
  CHECK_THROWS_AS(parse_sc_mode("reversed"), ConfigError);
}

TEST_CASE("loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const char* name : {"l_sem", "l_change", "l_sc_intent", "l_sc_literal", "l_scd"}) {
      const auto r = grad_check_component(name, seed);
      INFO(name << " seed " << seed);
      CHECK(r.max_rel_error < kGradTolerance);
    }
    CHECK(grad_check_component("l_change", seed).max_rel_error < 1e-5);
  }
}
