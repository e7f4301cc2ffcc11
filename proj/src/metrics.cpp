#include "metrics.hpp"

#include <cmath>

#include "errors.hpp"

namespace scd {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : num_classes_(num_classes), counts_((num_classes + 1) * (num_classes + 1), 0) {
  if (num_classes < 1) throw ContractError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_counts(std::size_t num_classes,
                                             const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix cm(num_classes);
  if (rows.size() != cm.size()) throw DimensionError("confusion matrix rows do not match class count");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cm.size()) throw DimensionError("confusion matrix row has wrong length");
    for (std::size_t j = 0; j < rows[i].size(); ++j) cm.counts_[i * cm.size() + j] = rows[i][j];
  }
  return cm;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t pred) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < size(); ++j) t += at(pred, j);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += at(i, truth);
  return t;
}

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth) {
  if (!predicted.same_shape(truth)) {
    throw DataError("accumulate: prediction " + std::to_string(predicted.height) + "x" +
                    std::to_string(predicted.width) + " vs truth " + std::to_string(truth.height) + "x" +
                    std::to_string(truth.width));
  }
  for (std::size_t q = 0; q < predicted.size(); ++q) {
    const auto p = predicted.values[q];
    const auto t = truth.values[q];
    if (p > num_classes_ || t > num_classes_) {
      throw DataError("accumulate: label out of range at pixel (" + std::to_string(q / predicted.width) + ", " +
                      std::to_string(q % predicted.width) + "): predicted " + std::to_string(p) + ", truth " +
                      std::to_string(t) + ", classes " + std::to_string(num_classes_));
    }
  }
  for (std::size_t q = 0; q < predicted.size(); ++q) ++counts_[predicted.values[q] * size() + truth.values[q]];
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) throw DimensionError("merge: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& predicted, const LabelMap& truth) {
  cm.accumulate(predicted, truth);
  return cm;
}

ConfusionMatrix merge(ConfusionMatrix a, const ConfusionMatrix& b) {
  a.merge(b);
  return a;
}

// ---------------------------------------------------------------------------

double overall_accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw UndefinedMetricError("OA is undefined on an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) trace += cm.at(i, i);
  return static_cast<double>(trace) / static_cast<double>(total);
}

IouResult miou(const ConfusionMatrix& cm) {
  IouResult r;
  const auto q00 = cm.at(0, 0);
  const auto nc_den = cm.col_sum(0) + cm.row_sum(0) - q00;
  if (nc_den > 0) r.iou_nc = static_cast<double>(q00) / static_cast<double>(nc_den);
  std::uint64_t changed = 0;
  for (std::size_t i = 1; i < cm.size(); ++i)
    for (std::size_t j = 1; j < cm.size(); ++j) changed += cm.at(i, j);
  const auto c_den = cm.total() - q00;
  if (c_den > 0) r.iou_c = static_cast<double>(changed) / static_cast<double>(c_den);
  if (r.iou_nc && r.iou_c) r.miou = (*r.iou_nc + *r.iou_c) / 2.0;
  return r;
}

KappaResult sek(const ConfusionMatrix& cm) {
  const std::size_t n = cm.size();
  auto hat = [&](std::size_t i, std::size_t j) -> std::uint64_t { return (i == 0 && j == 0) ? 0 : cm.at(i, j); };
  std::uint64_t total = 0, diag = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diag += hat(i, i);
    for (std::size_t j = 0; j < n; ++j) total += hat(i, j);
  }
  if (total == 0) throw UndefinedMetricError("SeK is undefined: no pixels outside the no-change agreement");
  long double chance = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += hat(i, j);
      col += hat(j, i);
    }
    chance += static_cast<long double>(row) * static_cast<long double>(col);
  }
  const double t = static_cast<double>(total);
  const double rho = static_cast<double>(diag) / t;
  const double eta = static_cast<double>(chance / (static_cast<long double>(total) * static_cast<long double>(total)));
  if (eta == 1.0) throw UndefinedMetricError("SeK is undefined: expected agreement eta equals 1");
  const double iou_c = *miou(cm).iou_c;  // defined: its denominator equals total
  const double sek_value = std::exp(iou_c - 1.0) * (rho - eta) / (1.0 - eta);
  return {rho, eta, sek_value};
}

FscdResult f_scd(const ConfusionMatrix& cm) {
  std::uint64_t hits = 0, pred_changed = 0, truth_changed = 0;
  for (std::size_t i = 1; i < cm.size(); ++i) {
    hits += cm.at(i, i);
    pred_changed += cm.row_sum(i);
    truth_changed += cm.col_sum(i);
  }
  if (pred_changed == 0 && truth_changed == 0) {
    throw UndefinedMetricError("F_scd is undefined: no changed pixels in prediction or truth");
  }
  FscdResult r;
  if (pred_changed > 0) r.p_scd = static_cast<double>(hits) / static_cast<double>(pred_changed);
  if (truth_changed > 0) r.r_scd = static_cast<double>(hits) / static_cast<double>(truth_changed);
  if (r.p_scd && r.r_scd) {
    const double s = *r.p_scd + *r.r_scd;
    r.f_scd = s > 0.0 ? 2.0 * *r.p_scd * *r.r_scd / s : 0.0;
  }
  return r;
}

std::vector<std::string> MetricsReport::undefined_fields() const {
  std::vector<std::string> out;
  for (const char* name : kMetricNames) {
    if (!metric_value(*this, name)) out.emplace_back(name);
  }
  return out;
}

std::optional<double> metric_value(const MetricsReport& r, std::string_view name) {
  if (name == "oa") return r.oa;
  if (name == "iou_nc") return r.iou_nc;
  if (name == "iou_c") return r.iou_c;
  if (name == "miou") return r.miou;
  if (name == "rho") return r.rho;
  if (name == "eta") return r.eta;
  if (name == "sek") return r.sek;
  if (name == "p_scd") return r.p_scd;
  if (name == "r_scd") return r.r_scd;
  if (name == "f_scd") return r.f_scd;
  throw ContractError("unknown metric '" + std::string(name) + "'");
}

PixelCounts pixel_counts(const ConfusionMatrix& cm) {
  PixelCounts c;
  c.total = cm.total();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    c.correct += cm.at(i, i);
    for (std::size_t j = 0; j < cm.size(); ++j) {
      const auto v = cm.at(i, j);
      if (j != 0) c.truth_changed += v;
      if (i != 0) c.pred_changed += v;
      if (i != 0 && j != 0) c.both_changed += v;
    }
  }
  return c;
}

MetricsReport compute_report(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.pixels = pixel_counts(cm);
  if (cm.total() > 0) r.oa = overall_accuracy(cm);
  auto iou = miou(cm);
  r.iou_nc = iou.iou_nc;
  r.iou_c = iou.iou_c;
  r.miou = iou.miou;
  try {
    auto k = sek(cm);
    r.rho = k.rho;
    r.eta = k.eta;
    r.sek = k.sek;
  } catch (const UndefinedMetricError&) {
  }
  try {
    auto f = f_scd(cm);
    r.p_scd = f.p_scd;
    r.r_scd = f.r_scd;
    r.f_scd = f.f_scd;
  } catch (const UndefinedMetricError&) {
  }
  return r;
}

// ---------------------------------------------------------------------------

MetricsReport oracle_metrics(std::span<const LabelMap> predicted, std::span<const LabelMap> truth,
                             std::size_t num_classes) {
  if (predicted.size() != truth.size()) throw DataError("oracle_metrics: map counts differ");
  // Per-pixel indicator counts.
  std::uint64_t total = 0, correct = 0;
  std::uint64_t both_nc = 0, either_nc = 0;
  std::uint64_t both_c = 0, either_c = 0;
  std::uint64_t informative = 0, informative_correct = 0;
  std::uint64_t pred_c = 0, truth_c = 0, pred_c_correct = 0;
  std::vector<std::uint64_t> pred_class(num_classes + 1, 0), truth_class(num_classes + 1, 0);

  for (std::size_t m = 0; m < predicted.size(); ++m) {
    const auto& pm = predicted[m];
    const auto& tm = truth[m];
    if (!pm.same_shape(tm)) throw DataError("oracle_metrics: map shapes differ");
    for (std::size_t q = 0; q < pm.size(); ++q) {
      const unsigned p = pm.values[q], t = tm.values[q];
      if (p > num_classes || t > num_classes) throw DataError("oracle_metrics: label out of range");
      ++total;
      const bool same = p == t;
      if (same) ++correct;
      if (p == 0 && t == 0) ++both_nc;
      if (p == 0 || t == 0) ++either_nc;
      if (p != 0 && t != 0) ++both_c;
      if (p != 0 || t != 0) ++either_c;
      if (!(p == 0 && t == 0)) {
        ++informative;
        if (same) ++informative_correct;
        ++pred_class[p];
        ++truth_class[t];
      }
      if (p != 0) {
        ++pred_c;
        if (same) ++pred_c_correct;
      }
      if (t != 0) ++truth_c;
    }
  }

  MetricsReport r;
  r.pixels = {total, truth_c, pred_c, both_c, correct};
  auto ratio = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  r.oa = ratio(correct, total);
  r.iou_nc = ratio(both_nc, either_nc);
  r.iou_c = ratio(both_c, either_c);
  if (r.iou_nc && r.iou_c) r.miou = (*r.iou_nc + *r.iou_c) / 2.0;
  if (informative > 0) {
    long double chance = 0.0L;
    for (std::size_t k = 0; k <= num_classes; ++k) {
      chance += static_cast<long double>(pred_class[k]) * static_cast<long double>(truth_class[k]);
    }
    const double eta = static_cast<double>(chance / (static_cast<long double>(informative) * informative));
    if (eta != 1.0) {
      r.rho = ratio(informative_correct, informative);
      r.eta = eta;
      r.sek = std::exp(*r.iou_c - 1.0) * (*r.rho - eta) / (1.0 - eta);
    }
  }
  // Correct changed predictions are exactly the changed-truth hits.
  if (pred_c > 0 || truth_c > 0) {
    r.p_scd = ratio(pred_c_correct, pred_c);
    r.r_scd = ratio(pred_c_correct, truth_c);
    if (r.p_scd && r.r_scd) {
      const double s = *r.p_scd + *r.r_scd;
      r.f_scd = s > 0.0 ? 2.0 * *r.p_scd * *r.r_scd / s : 0.0;
    }
  }
  return r;
}

}  // namespace scd
