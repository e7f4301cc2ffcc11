#include "report.hpp"

#include <iomanip>
#include <sstream>

namespace scd {

nlohmann::json metrics_json(const MetricsReport& report) {
  nlohmann::json j;
  for (const char* name : kMetricNames) {
    const auto v = metric_value(report, name);
    j[name] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  j["pixels"] = {
      {"total", report.pixels.total},
      {"truth_changed", report.pixels.truth_changed},
      {"pred_changed", report.pixels.pred_changed},
      {"both_changed", report.pixels.both_changed},
      {"correct", report.pixels.correct},
  };
  j["undefined"] = report.undefined_fields();
  return j;
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.size(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json evaluation_json(const Evaluation& ev) {
  nlohmann::json j = metrics_json(ev.report);
  j["samples"] = ev.samples;
  j["classes"] = ev.joint.num_classes();
  j["per_temporal"] = {{"t1", metrics_json(ev.report_t1)}, {"t2", metrics_json(ev.report_t2)}};
  j["confusion_matrix"] = confusion_json(ev.joint);
  j["zero_set_disagreement"] = ev.zero_set_disagreement;
  return j;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << *v;
  return os.str();
}

std::string csv_header() {
  std::string h = "family,params,flops";
  for (const char* name : kMetricNames) {
    h += ',';
    h += name;
  }
  h += ",zero_set_disagreement";
  return h;
}

std::string csv_row(const CompareRow& row) {
  std::ostringstream os;
  os << family_name(row.family) << ',' << row.params << ',' << row.flops;
  for (const char* name : kMetricNames) {
    os << ',';
    if (row.metrics) os << format_metric(metric_value(*row.metrics, name));
  }
  os << ',';
  if (row.zero_set_disagreement) os << format_metric(row.zero_set_disagreement);
  return os.str();
}

nlohmann::json compare_json(const std::vector<CompareRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["family"] = std::string(family_name(row.family));
    j["params"] = row.params;
    j["flops"] = row.flops;
    j["metrics"] = row.metrics ? metrics_json(*row.metrics) : nlohmann::json(nullptr);
    j["zero_set_disagreement"] =
        row.zero_set_disagreement ? nlohmann::json(*row.zero_set_disagreement) : nlohmann::json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace scd
