#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scd {

struct GradComponentResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements = 0;
};

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kGradStep = 1e-5;

// Components: residual_unit, encoder_stage, cd_block, siam_sr, cot_sr, head,
// l_sem, l_change, l_sc_intent, l_sc_literal, l_scd.
const std::vector<std::string>& grad_components();

// Analytic vs central-difference gradients of every component on small random
// operands drawn from `seed`. Blocks are read out through sum(out * R) with a
// random R; attention blocks get non-zero value projections.
GradComponentResult grad_check_component(const std::string& name, std::uint64_t seed, double step = kGradStep);
std::vector<GradComponentResult> run_grad_suite(std::uint64_t seed, double step = kGradStep);

}  // namespace scd
