#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "metrics.hpp"
#include "networks.hpp"

namespace scd {

struct Evaluation {
  ConfusionMatrix joint;  // S1 vs L1 and S2 vs L2 in one matrix
  ConfusionMatrix t1;
  ConfusionMatrix t2;
  MetricsReport report;
  MetricsReport report_t1;
  MetricsReport report_t2;
  std::size_t samples = 0;
  // Fraction of pixels where exactly one of S1, S2 is zero.
  double zero_set_disagreement = 0.0;

  explicit Evaluation(std::size_t num_classes) : joint(num_classes), t1(num_classes), t2(num_classes) {}
};

// Masked semantic change maps of one sample; no graph is recorded.
std::pair<LabelMap, LabelMap> predict(const Network& net, const SamplePair& sample);

// Fraction of pixels where (a == 0) != (b == 0).
double zero_set_disagreement(const LabelMap& a, const LabelMap& b);

// Runs the network over every sample on `threads` workers. Shards merge in a
// fixed order, so the result does not depend on the thread count. When
// `prediction_dir` is set, S1/S2 are written there as label1/ and label2/.
Evaluation evaluate(const Network& net, const std::vector<SamplePair>& samples,
                    const std::optional<std::filesystem::path>& prediction_dir = std::nullopt,
                    std::size_t threads = 1);

// Compares label1/label2 maps in `pred_dir` against the ground truth in
// `truth_dir`; every truth stem must have a prediction.
Evaluation evaluate_predictions(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir,
                                std::size_t num_classes);

}  // namespace scd
