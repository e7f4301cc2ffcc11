#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluation.hpp"
#include "metrics.hpp"
#include "networks.hpp"

namespace scd {

// The ten metrics (null when undefined), pixel counts and the list of
// undefined field names.
nlohmann::json metrics_json(const MetricsReport& report);
nlohmann::json confusion_json(const ConfusionMatrix& cm);

// Joint metrics at the top level plus per_temporal breakdown, confusion
// matrix and the zero-set disagreement diagnostic.
nlohmann::json evaluation_json(const Evaluation& ev);

struct CompareRow {
  Family family;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::optional<MetricsReport> metrics;
  std::optional<double> zero_set_disagreement;
};

std::string csv_header();
std::string csv_row(const CompareRow& row);
nlohmann::json compare_json(const std::vector<CompareRow>& rows);

// Fixed-precision rendering used in CSV cells; "undefined" for empty values.
std::string format_metric(const std::optional<double>& v);

}  // namespace scd
