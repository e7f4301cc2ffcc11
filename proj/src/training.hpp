#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "losses.hpp"
#include "networks.hpp"

namespace scd {

struct LossConfig {
  ScMode sc_mode = ScMode::Intent;
  ScSpace sc_space = ScSpace::Probability;
  // Semantic consistency term on/off; unset means on for Bi-SRNet only.
  std::optional<bool> use_sc;

  bool sc_enabled(Family family) const;
};

enum class LrSchedule { Constant, Poly };

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t epochs = 50;
  double initial_lr = 0.1;
  double momentum = 0.9;
  LrSchedule schedule = LrSchedule::Poly;
  double poly_power = 0.9;
  std::uint64_t seed = 0;
  bool augment = true;
  std::size_t max_steps = 0;  // 0: epochs * batches
  // Global L2 norm cap on the batch gradient; 0 disables.
  double grad_clip = 1.0;
  LossConfig loss;

  void validate() const;
};

// Forward-pass losses for one sample, routed by family:
//   Bi-SRNet / SSCD-l / SSCD-e: (sem1 + sem2)/2 + change [+ sc]
//   DSCD-*: (N+1)-class cross entropy per temporal head including class 0.
// `total` receives the differentiable scalar.
LossReport compute_losses(const Network& net, const ForwardOutput& out, const SamplePair& sample,
                          const LossConfig& config, Tensor* total = nullptr);

// u <- mu*u - lr*g;  theta <- theta + mu*u - lr*g
class NesterovSgd {
 public:
  NesterovSgd(std::vector<Tensor> params, double momentum);
  // Gradients enter the update multiplied by grad_scale.
  void step(double lr, double grad_scale = 1.0);
  void zero_grad();
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> velocity_;
  double momentum_;
};

double learning_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps);

// L2 norm over all gradients; throws NumericError on a non-finite entry.
double gradient_norm(const std::vector<Tensor>& params);

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double lr = 0.0;
  LossReport mean;
};

struct TrainResult {
  std::vector<double> step_losses;  // batch-mean l_total per optimizer step
  std::vector<EpochReport> epochs;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Mini-batch training. Sample order and augmentation are fixed by
// config.seed and the epoch index. Throws NumericError with a snapshot of
// the failing step when a loss or gradient turns non-finite.
TrainResult train(Network& net, const std::vector<SamplePair>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace scd
