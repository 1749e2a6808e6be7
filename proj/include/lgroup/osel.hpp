// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// On-chip sparse data encoding loop (OSEL).
//
// Every mask row equals the OS row selected by that row's IG argmax, so at
// most G distinct rows exist. The encoder walks the row indexes in order and
// keeps one tuple per group in a G-entry sparse row memory (SRM):
//
//   status empty     -> compare the index against all column indexes (miss),
//                       store (bitvector, workload), mark generated
//   status generated -> reuse the tuple (hit)
//
// Either way the index is appended to the index list, which is all a
// downstream consumer needs to recover any row.
//
// The backward pass needs the transposed mask; the same loop runs with the
// OG column indexes leading and the IG row indexes as the comparison set.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lgroup/bitvector.hpp"
#include "lgroup/error.hpp"
#include "lgroup/flgw.hpp"

namespace lgroup::osel {

using flgw::MaxIndexList;
using IndexList = flgw::MaxIndexList;

inline std::size_t ceil_log2(std::size_t v) noexcept {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < v) ++bits;
  return bits;
}

inline std::size_t ceil_div(std::size_t a, std::size_t b) noexcept { return (a + b - 1) / b; }

struct SparseRowTuple {
  BitVector bitvector;
  std::uint32_t workload = 0;
  bool generated = false;  // status O / X
};

struct SparseRowMemory {
  std::size_t groups = 0;
  std::size_t row_length = 0;
  std::vector<SparseRowTuple> entries;

  SparseRowMemory() = default;
  SparseRowMemory(std::size_t g, std::size_t len) : groups(g), row_length(len), entries(g) {}

  std::size_t occupied() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const SparseRowTuple& t) { return t.generated; }));
  }

  // Tuple bit budget: bitvector + workload counter + group index.
  std::size_t bitvector_bits() const noexcept { return row_length; }
  std::size_t workload_bits() const noexcept { return ceil_log2(row_length); }
  std::size_t index_bits() const noexcept { return ceil_log2(groups); }
  std::size_t tuple_bits() const noexcept { return bitvector_bits() + workload_bits() + index_bits(); }
};

// Cycle categories reported for sparse data generation.
struct CycleBreakdown {
  std::uint64_t max_index = 0;
  std::uint64_t index_miss = 0;
  std::uint64_t index_hit = 0;
  std::uint64_t weight_compression = 0;

  std::uint64_t total() const noexcept { return max_index + index_miss + index_hit + weight_compression; }
  bool operator==(const CycleBreakdown&) const = default;
};

struct EncodeStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  CycleBreakdown cycles;
};

// Model constants. The argmax units reduce `comparators` candidates per cycle;
// a miss compares against every column index in one cycle and then writes the
// tuple over a `srm_write_bits`-wide port; compression fetches `fetch_width`
// unmasked weights per cycle.
struct CycleParams {
  std::size_t comparators = 16;
  std::size_t compare_cycles = 1;
  std::size_t srm_write_bits = 64;
  std::size_t hit_cycles = 1;
  std::size_t fetch_width = 8;

  void validate() const {
    if (comparators == 0 || srm_write_bits == 0 || fetch_width == 0)
      throw ConfigError("CycleParams: comparators, srm_write_bits and fetch_width must be >= 1");
  }

  std::uint64_t miss_cycles(std::size_t row_length) const noexcept {
    return compare_cycles + ceil_div(row_length, srm_write_bits);
  }
};

enum class Mode { kOsel, kBaseline };

inline CycleBreakdown account_cycles(std::size_t m, std::size_t n, std::size_t g, std::size_t row_length,
                                     std::size_t misses, std::size_t hits, std::size_t unmasked,
                                     const CycleParams& p) {
  p.validate();
  CycleBreakdown c;
  c.max_index = static_cast<std::uint64_t>(m + n) * ceil_div(g, p.comparators);
  c.index_miss = static_cast<std::uint64_t>(misses) * p.miss_cycles(row_length);
  c.index_hit = static_cast<std::uint64_t>(hits) * p.hit_cycles;
  c.weight_compression = ceil_div(unmasked, p.fetch_width);
  return c;
}

struct EncodeResult {
  SparseRowMemory srm;
  IndexList index;
  EncodeStats stats;
};

namespace detail {

inline void check_indexes(const MaxIndexList& list, std::size_t g, const char* what) {
  for (auto v : list.values)
    if (v >= g) throw ContractError(std::string(what) + ": index " + std::to_string(v) + " >= G");
}

inline EncodeResult run_loop(const MaxIndexList& lead, const MaxIndexList& other, const CycleParams& params) {
  const std::size_t g = lead.groups;
  if (g == 0 || other.groups != g) throw ContractError("encode: index lists disagree on G");
  check_indexes(lead, g, "encode");
  check_indexes(other, g, "encode");

  EncodeResult out{SparseRowMemory(g, other.size()), IndexList{g, {}}, {}};
  out.index.values.reserve(lead.size());
  std::size_t unmasked = 0;
  for (std::size_t i = 0; i < lead.size(); ++i) {
    const std::uint32_t k = lead[i];
    auto& slot = out.srm.entries[k];
    if (!slot.generated) {
      slot.bitvector = flgw::mask_row_from_indexes(k, other);
      slot.workload = static_cast<std::uint32_t>(slot.bitvector.popcount());
      slot.generated = true;
      ++out.stats.misses;
    } else {
      ++out.stats.hits;
    }
    unmasked += slot.workload;
    out.index.values.push_back(k);
  }
  out.stats.cycles = account_cycles(lead.size(), other.size(), g, other.size(), out.stats.misses,
                                    out.stats.hits, unmasked, params);
  return out;
}

}  // namespace detail

// Forward mask: rows led by the IG row argmax, bitvectors of length N.
inline EncodeResult encode_forward(const MaxIndexList& row_max, const MaxIndexList& col_max,
                                   const CycleParams& params = {}) {
  return detail::run_loop(row_max, col_max, params);
}

// Transposed mask: rows led by the OG column argmax, bitvectors of length M.
inline EncodeResult encode_backward(const MaxIndexList& col_max, const MaxIndexList& row_max,
                                    const CycleParams& params = {}) {
  return detail::run_loop(col_max, row_max, params);
}

inline const SparseRowTuple& lookup(const SparseRowMemory& srm, std::uint32_t group) {
  if (group >= srm.entries.size() || !srm.entries[group].generated)
    throw ContractError("sparse row memory: entry " + std::to_string(group) + " not generated");
  return srm.entries[group];
}

// Rebuilds the full matrix from the index list.
inline flgw::MaskMatrix reconstruct(const SparseRowMemory& srm, const IndexList& index) {
  std::vector<BitVector> rows;
  rows.reserve(index.size());
  for (auto k : index.values) rows.push_back(lookup(srm, k).bitvector);
  return flgw::MaskMatrix(srm.row_length, std::move(rows));
}

inline std::vector<std::uint32_t> nonzero_indexes(const SparseRowTuple& tuple) {
  if (!tuple.generated) throw ContractError("nonzero_indexes: tuple not generated");
  std::vector<std::uint32_t> out;
  out.reserve(tuple.workload);
  tuple.bitvector.for_each_set([&](std::size_t j) { out.push_back(static_cast<std::uint32_t>(j)); });
  return out;
}

// Closed-form counts for an M x N layer. Without a concrete mask, misses are
// min(G, M) and unmasked weights M*N/G. Baseline regenerates every row.
inline EncodeStats cycle_model(std::size_t m, std::size_t n, std::size_t g, Mode mode, const CycleParams& params = {},
                               std::optional<std::size_t> unmasked = std::nullopt) {
  flgw::validate_shape(m, n, g);
  const std::size_t nnz = unmasked.value_or(ceil_div(m * n, g));
  EncodeStats s;
  if (mode == Mode::kBaseline) {
    s.misses = m;
  } else {
    s.misses = std::min(g, m);
    s.hits = m - s.misses;
  }
  s.cycles = account_cycles(m, n, g, n, s.misses, s.hits, nnz, params);
  return s;
}

struct FootprintReport {
  double unmasked_weight_bits = 0;
  double grouping_matrix_bits = 0;
  double sparse_row_memory_bits = 0;
  double dense_bits = 0;
  bool from_mask = false;  // false: expectation M*N/G was used

  double total_bits() const noexcept { return unmasked_weight_bits + grouping_matrix_bits + sparse_row_memory_bits; }
  double compression_ratio() const noexcept { return dense_bits / total_bits(); }
  double srm_fraction() const noexcept { return sparse_row_memory_bits / total_bits(); }
};

inline FootprintReport memory_footprint(std::size_t m, std::size_t n, std::size_t g, std::size_t weight_bits = 16,
                                        std::optional<std::size_t> unmasked = std::nullopt) {
  if (m == 0 || n == 0 || g == 0) throw ConfigError("memory_footprint: m, n, g must be >= 1");
  const double wb = static_cast<double>(weight_bits);
  FootprintReport r;
  r.from_mask = unmasked.has_value();
  const double nnz = unmasked ? static_cast<double>(*unmasked)
                              : static_cast<double>(m) * static_cast<double>(n) / static_cast<double>(g);
  r.unmasked_weight_bits = nnz * wb;
  r.grouping_matrix_bits = static_cast<double>(g * (m + n)) * wb;
  r.sparse_row_memory_bits = static_cast<double>(g * (n + ceil_log2(n) + ceil_log2(g)));
  r.dense_bits = static_cast<double>(m * n) * wb;
  return r;
}

// Dump: header "G N", then "idx workload hex" per generated entry.
inline void write_srm(std::ostream& os, const SparseRowMemory& srm) {
  os << srm.groups << ' ' << srm.row_length << '\n';
  for (std::size_t k = 0; k < srm.entries.size(); ++k) {
    const auto& t = srm.entries[k];
    if (!t.generated) continue;
    os << k << ' ' << t.workload << ' ' << t.bitvector.to_hex() << '\n';
  }
}

}  // namespace lgroup::osel
