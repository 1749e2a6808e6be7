// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Benchmark report rows with a frozen metric vocabulary.
//
// CSV:  experiment,params,metric,value,units
//       params is "key=value" pairs joined by ';' in insertion order.
// JSON: {"experiment": str, "rows": [{"params": {...}, "metric": str,
//        "value": number, "units": str}, ...]}

#include <algorithm>
#include <array>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "lgroup/error.hpp"

namespace lgroup::report {

inline constexpr std::array<std::string_view, 7> kMetrics = {
    "cycles", "compression_ratio", "max_deviation", "utilization", "speedup_vs_dense", "success_rate", "density",
};

inline bool known_metric(std::string_view m) {
  return std::find(kMetrics.begin(), kMetrics.end(), m) != kMetrics.end();
}

using Params = std::vector<std::pair<std::string, std::string>>;

struct ReportRow {
  std::string experiment;
  Params params;
  std::string metric;
  double value = 0;
  std::string units;
};

class Report {
 public:
  explicit Report(std::string experiment = {}) : experiment_(std::move(experiment)) {}

  const std::string& experiment() const noexcept { return experiment_; }
  const std::vector<ReportRow>& rows() const noexcept { return rows_; }

  void add(Params params, std::string metric, double value, std::string units) {
    if (!known_metric(metric)) throw ContractError("report: unknown metric '" + metric + "'");
    rows_.push_back({experiment_, std::move(params), std::move(metric), value, std::move(units)});
  }

  void append(const Report& other) {
    for (const auto& r : other.rows_) rows_.push_back(r);
  }

  // Value of the first row matching metric and every given param.
  std::optional<double> find(std::string_view metric, const Params& match) const {
    for (const auto& r : rows_) {
      if (r.metric != metric) continue;
      bool ok = true;
      for (const auto& [k, v] : match) {
        auto it = std::find_if(r.params.begin(), r.params.end(), [&](const auto& p) { return p.first == k; });
        if (it == r.params.end() || it->second != v) {
          ok = false;
          break;
        }
      }
      if (ok) return r.value;
    }
    return std::nullopt;
  }

 private:
  std::string experiment_;
  std::vector<ReportRow> rows_;
};

inline std::string format_value(double v) { return fmt::format("{:.10g}", v); }

inline std::string join_params(const Params& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ';';
    s += p[i].first + '=' + p[i].second;
  }
  return s;
}

inline void write_csv(std::ostream& os, const Report& r) {
  os << "experiment,params,metric,value,units\n";
  for (const auto& row : r.rows())
    os << row.experiment << ',' << join_params(row.params) << ',' << row.metric << ',' << format_value(row.value)
       << ',' << row.units << '\n';
}

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows()) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row.params) params[k] = v;
    rows.push_back({{"params", params}, {"metric", row.metric}, {"value", row.value}, {"units", row.units}});
  }
  return {{"experiment", r.experiment()}, {"rows", rows}};
}

inline void write_json(std::ostream& os, const Report& r) { os << to_json(r).dump(2) << '\n'; }

struct ParseResult {
  Report report;
  std::vector<std::string> errors;
};

// Reads a CSV report and collects schema violations instead of throwing.
inline ParseResult read_csv(std::istream& is) {
  ParseResult out;
  std::string line;
  if (!std::getline(is, line) || line != "experiment,params,metric,value,units") {
    out.errors.push_back("bad header");
    return out;
  }
  std::size_t lineno = 1;
  std::vector<ReportRow> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 4 && !line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 5) {
      out.errors.push_back(fmt::format("line {}: expected 5 fields, got {}", lineno, cells.size()));
      continue;
    }
    if (!known_metric(cells[2])) {
      out.errors.push_back(fmt::format("line {}: unknown metric '{}'", lineno, cells[2]));
      continue;
    }
    ReportRow row;
    row.experiment = cells[0];
    std::stringstream ps(cells[1]);
    std::string kv;
    while (std::getline(ps, kv, ';')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        out.errors.push_back(fmt::format("line {}: malformed param '{}'", lineno, kv));
        continue;
      }
      row.params.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    try {
      std::size_t used = 0;
      row.value = std::stod(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      out.errors.push_back(fmt::format("line {}: bad value '{}'", lineno, cells[3]));
      continue;
    }
    row.metric = cells[2];
    row.units = cells[4];
    rows.push_back(std::move(row));
  }
  if (!rows.empty()) {
    out.report = Report(rows.front().experiment);
    for (auto& r : rows) out.report.add(std::move(r.params), std::move(r.metric), r.value, std::move(r.units));
  }
  return out;
}

}  // namespace lgroup::report
