#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labels.hpp"

namespace scd {

// (N+1) x (N+1) counts; at(i, j) = pixels predicted i with ground truth j.
// Index 0 is no-change.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);
  static ConfusionMatrix from_counts(std::size_t num_classes, const std::vector<std::vector<std::uint64_t>>& rows);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return num_classes_ + 1; }
  std::uint64_t at(std::size_t pred, std::size_t truth) const { return counts_[pred * size() + truth]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t pred) const;
  std::uint64_t col_sum(std::size_t truth) const;

  // Throws DataError naming the first offending pixel.
  void accumulate(const LabelMap& predicted, const LabelMap& truth);
  ConfusionMatrix& merge(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t num_classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& predicted, const LabelMap& truth);
ConfusionMatrix merge(ConfusionMatrix a, const ConfusionMatrix& b);

// trace / total. Throws UndefinedMetricError on an empty matrix.
double overall_accuracy(const ConfusionMatrix& cm);

struct IouResult {
  std::optional<double> iou_nc;
  std::optional<double> iou_c;
  std::optional<double> miou;
};
IouResult miou(const ConfusionMatrix& cm);

struct KappaResult {
  double rho;
  double eta;
  double sek;
};
// Separated kappa on the matrix with the no-change true positives removed.
// Throws UndefinedMetricError when that matrix is empty or eta == 1.
KappaResult sek(const ConfusionMatrix& cm);

struct FscdResult {
  std::optional<double> p_scd;
  std::optional<double> r_scd;
  std::optional<double> f_scd;
};
// Throws UndefinedMetricError when neither prediction nor truth holds a
// changed pixel. A single vanishing denominator leaves that component and
// f_scd undefined.
FscdResult f_scd(const ConfusionMatrix& cm);

struct PixelCounts {
  std::uint64_t total = 0;
  std::uint64_t truth_changed = 0;
  std::uint64_t pred_changed = 0;
  std::uint64_t both_changed = 0;
  std::uint64_t correct = 0;
  friend bool operator==(const PixelCounts&, const PixelCounts&) = default;
};

struct MetricsReport {
  std::optional<double> oa;
  std::optional<double> iou_nc;
  std::optional<double> iou_c;
  std::optional<double> miou;
  std::optional<double> rho;
  std::optional<double> eta;
  std::optional<double> sek;
  std::optional<double> p_scd;
  std::optional<double> r_scd;
  std::optional<double> f_scd;
  PixelCounts pixels;

  // Names of the fields that are undefined, in declaration order.
  std::vector<std::string> undefined_fields() const;
};

inline constexpr const char* kMetricNames[] = {"oa",  "iou_nc", "iou_c", "miou",  "rho",
                                               "eta", "sek",    "p_scd", "r_scd", "f_scd"};
std::optional<double> metric_value(const MetricsReport& report, std::string_view name);

PixelCounts pixel_counts(const ConfusionMatrix& cm);
MetricsReport compute_report(const ConfusionMatrix& cm);

// Independent path: every metric by direct per-pixel set counting over the
// paired maps, without forming a confusion matrix.
MetricsReport oracle_metrics(std::span<const LabelMap> predicted, std::span<const LabelMap> truth,
                             std::size_t num_classes);

}  // namespace scd
