// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Load allocation unit: hands weight-matrix rows to C cores.
//
// Row-based scheme: contiguous blocks of ceil(M/C) or floor(M/C) rows. Under
// random FLGW masks each row keeps 1/G of its weights on average, so every
// core converges to 1/(C*G) of the dense work without any run-time counting.
//
// Threshold scheme (comparison baseline): threshold = total / C; rows go to
// the current core until its load exceeds the threshold, then the next core
// starts. The last core takes whatever remains.
//
// Weight store is one row-major M x N array. Forward addresses are
// row * N + col; backward (transposed) rows are the original columns, so the
// address is col * N + row with N the transposed row count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lgroup/error.hpp"
#include "lgroup/osel.hpp"

namespace lgroup::alloc {

enum class Orientation { kForward, kBackward };

inline constexpr std::uint32_t kNoGroup = std::numeric_limits<std::uint32_t>::max();

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

struct RowInfo {
  std::uint32_t group = kNoGroup;
  std::size_t workload = 0;
  std::vector<std::uint32_t> cols;  // non-zero column indexes, ascending
};

struct CoreAssignment {
  Orientation orientation = Orientation::kForward;
  std::size_t rows = 0;
  std::size_t row_length = 0;
  std::vector<std::vector<std::size_t>> core_rows;
  std::vector<std::size_t> core_workload;
  std::vector<RowInfo> row_info;
  std::vector<std::string> warnings;

  std::size_t cores() const noexcept { return core_rows.size(); }
  std::size_t total_workload() const noexcept {
    std::size_t t = 0;
    for (auto w : core_workload) t += w;
    return t;
  }
};

inline std::vector<RowRange> partition_rows(std::size_t m, std::size_t c) {
  if (c == 0) throw ConfigError("partition_rows: core count must be >= 1");
  std::vector<RowRange> out;
  out.reserve(c);
  const std::size_t base = m / c, extra = m % c;
  std::size_t start = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    out.push_back({start, start + len});
    start += len;
  }
  return out;
}

namespace detail {

inline void note_idle(CoreAssignment& a, std::size_t m, std::size_t c) {
  if (c > m)
    a.warnings.push_back(std::to_string(c - m) + " of " + std::to_string(c) + " cores idle (C > M)");
}

inline void resolve_rows(CoreAssignment& a, const osel::SparseRowMemory& srm, const osel::IndexList& index) {
  a.row_info.resize(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto& tuple = osel::lookup(srm, index[r]);
    a.row_info[r] = {index[r], tuple.workload, osel::nonzero_indexes(tuple)};
  }
}

inline void sum_workloads(CoreAssignment& a) {
  a.core_workload.assign(a.core_rows.size(), 0);
  for (std::size_t k = 0; k < a.core_rows.size(); ++k)
    for (auto r : a.core_rows[k]) a.core_workload[k] += a.row_info[r].workload;
}

}  // namespace detail

// Greedy threshold allocation over known row workloads. Rows carry workloads
// only; group and column metadata stay empty.
inline CoreAssignment threshold_partition(std::span<const std::size_t> row_workloads, std::size_t c) {
  if (c == 0) throw ConfigError("threshold_partition: core count must be >= 1");
  CoreAssignment a;
  a.rows = row_workloads.size();
  a.core_rows.resize(c);
  a.row_info.resize(a.rows);
  double total = 0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    a.row_info[r].workload = row_workloads[r];
    total += static_cast<double>(row_workloads[r]);
  }
  const double threshold = total / static_cast<double>(c);
  std::size_t core = 0;
  double load = 0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    a.core_rows[core].push_back(r);
    load += static_cast<double>(row_workloads[r]);
    if (load > threshold && core + 1 < c) {
      ++core;
      load = 0;
    }
  }
  detail::note_idle(a, a.rows, c);
  detail::sum_workloads(a);
  return a;
}

// Row-based allocation from OSEL output; per-row metadata comes from the SRM.
inline CoreAssignment build_assignment(const osel::SparseRowMemory& srm, const osel::IndexList& index, std::size_t c,
                                       Orientation orientation = Orientation::kForward) {
  CoreAssignment a;
  a.orientation = orientation;
  a.rows = index.size();
  a.row_length = srm.row_length;
  detail::resolve_rows(a, srm, index);
  for (const auto& range : partition_rows(a.rows, c)) {
    auto& ids = a.core_rows.emplace_back();
    for (std::size_t r = range.begin; r < range.end; ++r) ids.push_back(r);
  }
  detail::note_idle(a, a.rows, c);
  detail::sum_workloads(a);
  return a;
}

// Threshold allocation from OSEL output, with the same per-row metadata.
inline CoreAssignment build_threshold_assignment(const osel::SparseRowMemory& srm, const osel::IndexList& index,
                                                 std::size_t c, Orientation orientation = Orientation::kForward) {
  std::vector<std::size_t> wl(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) wl[r] = osel::lookup(srm, index[r]).workload;
  CoreAssignment a = threshold_partition(wl, c);
  a.orientation = orientation;
  a.row_length = srm.row_length;
  detail::resolve_rows(a, srm, index);
  return a;
}

struct Address {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t flat = 0;
  bool operator==(const Address&) const = default;
};

struct AddressPlan {
  Orientation orientation = Orientation::kForward;
  std::vector<std::vector<Address>> per_core;
};

inline std::size_t flat_address(Orientation o, std::size_t row, std::size_t col, std::size_t rows,
                                std::size_t row_length) noexcept {
  return o == Orientation::kForward ? row * row_length + col : col * rows + row;
}

inline AddressPlan address_plan(const CoreAssignment& a) {
  AddressPlan plan{a.orientation, std::vector<std::vector<Address>>(a.cores())};
  for (std::size_t k = 0; k < a.cores(); ++k) {
    auto& out = plan.per_core[k];
    out.reserve(a.core_workload[k]);
    for (auto r : a.core_rows[k])
      for (auto c : a.row_info[r].cols) out.push_back({r, c, flat_address(a.orientation, r, c, a.rows, a.row_length)});
  }
  return plan;
}

struct WorkloadStats {
  std::vector<std::size_t> per_core;
  double theoretical = 0;
  double max_deviation = 0;
};

// Deviation in raw element counts from the perfectly balanced total / C.
inline WorkloadStats deviation(const CoreAssignment& a) {
  WorkloadStats s;
  s.per_core = a.core_workload;
  if (s.per_core.empty()) return s;
  s.theoretical = static_cast<double>(a.total_workload()) / static_cast<double>(s.per_core.size());
  for (auto w : s.per_core) s.max_deviation = std::max(s.max_deviation, std::abs(static_cast<double>(w) - s.theoretical));
  return s;
}

// Debug dump: CSV "core,row,group_idx,workload"; unknown groups print as -1.
inline void write_assignment_csv(std::ostream& os, const CoreAssignment& a) {
  os << "core,row,group_idx,workload\n";
  for (std::size_t k = 0; k < a.cores(); ++k)
    for (auto r : a.core_rows[k]) {
      const auto& info = a.row_info[r];
      os << k << ',' << r << ',';
      if (info.group == kNoGroup) os << -1;
      else os << info.group;
      os << ',' << info.workload << '\n';
    }
}

}  // namespace lgroup::alloc
