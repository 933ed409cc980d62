#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sal/metrics.hpp"
#include "sal/util.hpp"

namespace sal {

struct AblationRow {
  std::string label;
  int num_seeds = 0;
  double map_mean = 0, map_std = 0;
  double cmc1_mean = 0, cmc1_std = 0;
  double cmc5_mean = 0;
  double cmc10_mean = 0;
  std::vector<double> map_values;  // per-seed, in run order
};

struct AblationReport {
  std::vector<AblationRow> rows;

  std::string format_table() const {
    std::ostringstream os;
    os << std::left << std::setw(18) << "variant" << std::right << std::setw(6) << "seeds"
       << std::setw(10) << "mAP" << std::setw(8) << "±std" << std::setw(8) << "CMC-1"
       << std::setw(8) << "±std" << std::setw(8) << "CMC-5" << std::setw(8) << "CMC-10"
       << "\n";
    os << std::string(74, '-') << "\n";
    os << std::fixed << std::setprecision(3);
    for (const auto& r : rows) {
      os << std::left << std::setw(18) << r.label << std::right << std::setw(6) << r.num_seeds
         << std::setw(10) << r.map_mean << std::setw(8) << r.map_std << std::setw(8)
         << r.cmc1_mean << std::setw(8) << r.cmc1_std << std::setw(8) << r.cmc5_mean
         << std::setw(8) << r.cmc10_mean << "\n";
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows)
      rows_json.push_back({{"label", r.label},
                           {"num_seeds", r.num_seeds},
                           {"map_mean", r.map_mean},
                           {"map_std", r.map_std},
                           {"cmc1_mean", r.cmc1_mean},
                           {"cmc1_std", r.cmc1_std},
                           {"cmc5_mean", r.cmc5_mean},
                           {"cmc10_mean", r.cmc10_mean},
                           {"map_values", r.map_values}});
    return nlohmann::json{{"rows", rows_json}};
  }
};

// Aggregates per-variant metric reports (one per seed) into a study table.
// Every requested variant must have at least one completed run.
inline AblationReport make_ablation_report(
    const std::vector<std::pair<std::string, std::vector<MetricsReport>>>& runs) {
  require(!runs.empty(), "ablation report with no variants");
  AblationReport rep;
  for (const auto& [label, reports] : runs) {
    require(!reports.empty(), "variant '", label, "' has no completed runs");
    AblationRow row;
    row.label = label;
    row.num_seeds = static_cast<int>(reports.size());
    auto mean_std = [&](auto get) {
      double mean = 0;
      for (const auto& r : reports) mean += get(r);
      mean /= reports.size();
      double var = 0;
      for (const auto& r : reports) var += (get(r) - mean) * (get(r) - mean);
      var = reports.size() > 1 ? var / (reports.size() - 1) : 0.0;
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    std::tie(row.map_mean, row.map_std) = mean_std([](const MetricsReport& r) { return r.map; });
    std::tie(row.cmc1_mean, row.cmc1_std) =
        mean_std([](const MetricsReport& r) { return r.cmc1; });
    row.cmc5_mean = mean_std([](const MetricsReport& r) { return r.cmc5; }).first;
    row.cmc10_mean = mean_std([](const MetricsReport& r) { return r.cmc10; }).first;
    for (const auto& r : reports) row.map_values.push_back(r.map);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace sal
