#pragma once

#include <cstddef>
#include <string_view>

#include "labels.hpp"
#include "tensor.hpp"

namespace scd {

// Which change label rewards cosine agreement. Intent: unchanged pixels are
// pulled together (1 - cos) and changed pixels pushed apart (cos). Literal
// swaps the two branches.
enum class ScMode { Intent, Literal };
// Cosine over per-pixel softmax probabilities or over raw logits.
enum class ScSpace { Probability, Logit };

ScMode parse_sc_mode(std::string_view text);
ScSpace parse_sc_space(std::string_view text);
std::string_view sc_mode_name(ScMode mode);
std::string_view sc_space_name(ScSpace space);

// Cross entropy of [N, H, W] class logits against labels in {0..N}; pixels
// labelled 0 are skipped and label k scores class k-1. Zero when no pixel
// carries a class.
Tensor semantic_loss(const Tensor& logits, const LabelMap& labels, std::size_t* counted = nullptr);

// Cross entropy of [N+1, H, W] logits against labels in {0..N} including the
// no-change class. Used by the direct families.
Tensor direct_semantic_loss(const Tensor& logits, const LabelMap& labels);

// Mean binary cross entropy of change logits [1, H, W] against {0, 1} labels;
// probabilities are clamped to [1e-12, 1 - 1e-12].
Tensor change_loss(const Tensor& logits, const LabelMap& change_labels);

// Mean over all pixels of the cosine consistency term between P1 and P2.
Tensor semantic_consistency_loss(const Tensor& p1, const Tensor& p2, const LabelMap& change_labels,
                                 ScMode mode = ScMode::Intent, ScSpace space = ScSpace::Probability);

// (sem1 + sem2) / 2 + change + sc, no balancing weights.
Tensor total_loss(const Tensor& sem1, const Tensor& sem2, const Tensor& change, const Tensor& sc);
double total_loss(double sem1, double sem2, double change, double sc);

struct LossReport {
  double l_sem1 = 0.0;
  double l_sem2 = 0.0;
  double l_change = 0.0;
  double l_sc = 0.0;
  double l_total = 0.0;
  std::size_t sem1_pixels = 0;
  std::size_t sem2_pixels = 0;
  std::size_t change_pixels = 0;
  std::size_t sc_pixels = 0;

  LossReport& operator+=(const LossReport& other);
  LossReport scaled(double factor) const;
};

// Binary change map: 1 wherever the semantic change label is non-zero.
LabelMap change_mask(const LabelMap& semantic);

}  // namespace scd
