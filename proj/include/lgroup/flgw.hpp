// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fully learnable weight grouping (FLGW).
//
// A layer W (M x N) owns two learnable matrices: IG (M x G) and OG (G x N).
// Row-argmax of IG and column-argmax of OG give one-hot selection matrices
// IS and OS; the pruning mask is the binary product IS * OS. The mask only
// hides weights, it never zeroes the stored values, so a weight masked in one
// iteration comes back untouched when the mask changes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lgroup/bitvector.hpp"
#include "lgroup/error.hpp"
#include "lgroup/matrix.hpp"

namespace lgroup::flgw {

inline constexpr std::size_t kMaxGroups = 32;
// The accelerator is built for G <= 16; larger G is allowed for sweeps only.
inline constexpr std::size_t kHardwareMaxGroups = 16;

inline bool outside_hardware_envelope(std::size_t g) noexcept { return g > kHardwareMaxGroups; }

// Per-row (IG) or per-column (OG) argmax, each value in [0, groups).
struct MaxIndexList {
  std::size_t groups = 0;
  std::vector<std::uint32_t> values;

  std::size_t size() const noexcept { return values.size(); }
  std::uint32_t operator[](std::size_t i) const noexcept { return values[i]; }
  bool operator==(const MaxIndexList&) const = default;
};

class GroupingPair {
 public:
  GroupingPair() = default;
  GroupingPair(Matrix<double> ig, Matrix<double> og) : ig_(std::move(ig)), og_(std::move(og)) {
    detail::require_dims(ig_.cols() == og_.rows(), "GroupingPair: IG cols != OG rows");
    if (ig_.cols() == 0 || ig_.rows() == 0 || og_.cols() == 0)
      throw ConfigError("GroupingPair: empty grouping matrix");
    check_finite();
  }

  std::size_t m() const noexcept { return ig_.rows(); }
  std::size_t n() const noexcept { return og_.cols(); }
  std::size_t g() const noexcept { return ig_.cols(); }

  const Matrix<double>& ig() const noexcept { return ig_; }
  const Matrix<double>& og() const noexcept { return og_; }

  // Mutable access for optimizers. Call check_finite() after an update.
  Matrix<double>& ig_mut() noexcept { return ig_; }
  Matrix<double>& og_mut() noexcept { return og_; }

  void check_finite() const {
    for (double v : ig_.flat())
      if (!std::isfinite(v)) throw NumericError("GroupingPair: non-finite IG entry");
    for (double v : og_.flat())
      if (!std::isfinite(v)) throw NumericError("GroupingPair: non-finite OG entry");
  }

 private:
  Matrix<double> ig_;
  Matrix<double> og_;
};

inline void validate_shape(std::size_t m, std::size_t n, std::size_t g) {
  if (m == 0 || n == 0 || g == 0) throw ConfigError("grouping: m, n, g must be >= 1");
  if (g > kMaxGroups) throw ConfigError("grouping: g=" + std::to_string(g) + " exceeds 32");
  if (g > std::min(m, n))
    throw ConfigError("grouping: g=" + std::to_string(g) + " > min(m, n) leaves a group empty");
}

// IG and OG entries are i.i.d. uniform on [0, 1).
inline GroupingPair init_grouping(std::size_t m, std::size_t n, std::size_t g, std::uint64_t seed) {
  validate_shape(m, n, g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix<double> ig(m, g), og(g, n);
  for (double& v : ig.flat()) v = uni(rng);
  for (double& v : og.flat()) v = uni(rng);
  return GroupingPair(std::move(ig), std::move(og));
}

// Ties go to the lowest index.
inline MaxIndexList argmax_rows(const Matrix<double>& ig) {
  MaxIndexList out{ig.cols(), std::vector<std::uint32_t>(ig.rows(), 0)};
  for (std::size_t r = 0; r < ig.rows(); ++r) {
    std::uint32_t best = 0;
    for (std::size_t c = 1; c < ig.cols(); ++c)
      if (ig(r, c) > ig(r, best)) best = static_cast<std::uint32_t>(c);
    out.values[r] = best;
  }
  return out;
}

inline MaxIndexList argmax_cols(const Matrix<double>& og) {
  MaxIndexList out{og.rows(), std::vector<std::uint32_t>(og.cols(), 0)};
  for (std::size_t c = 0; c < og.cols(); ++c) {
    std::uint32_t best = 0;
    for (std::size_t r = 1; r < og.rows(); ++r)
      if (og(r, c) > og(best, c)) best = static_cast<std::uint32_t>(r);
    out.values[c] = best;
  }
  return out;
}

enum class Orientation { kRowOneHot, kColOneHot };

// IS (row one-hot, M x G) or OS (column one-hot, G x N).
struct SelectionMatrix {
  Orientation orientation = Orientation::kRowOneHot;
  Matrix<std::uint8_t> bits;
};

inline SelectionMatrix build_input_selection(const Matrix<double>& ig) {
  const auto idx = argmax_rows(ig);
  SelectionMatrix s{Orientation::kRowOneHot, Matrix<std::uint8_t>(ig.rows(), ig.cols(), 0)};
  for (std::size_t r = 0; r < ig.rows(); ++r) s.bits(r, idx[r]) = 1;
  return s;
}

inline SelectionMatrix build_output_selection(const Matrix<double>& og) {
  const auto idx = argmax_cols(og);
  SelectionMatrix s{Orientation::kColOneHot, Matrix<std::uint8_t>(og.rows(), og.cols(), 0)};
  for (std::size_t c = 0; c < og.cols(); ++c) s.bits(idx[c], c) = 1;
  return s;
}

class MaskMatrix {
 public:
  MaskMatrix() = default;
  MaskMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitVector(cols)) {}
  MaskMatrix(std::size_t cols, std::vector<BitVector> rows) : cols_(cols), rows_(std::move(rows)) {
    for (const auto& r : rows_) detail::require_dims(r.size() == cols_, "MaskMatrix: ragged rows");
  }

  static MaskMatrix ones(std::size_t rows, std::size_t cols) {
    return MaskMatrix(cols, std::vector<BitVector>(rows, BitVector::ones(cols)));
  }

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }

  bool at(std::size_t r, std::size_t c) const noexcept { return rows_[r].test(c); }
  void set(std::size_t r, std::size_t c, bool v = true) noexcept { rows_[r].set(c, v); }

  const BitVector& row(std::size_t r) const noexcept { return rows_[r]; }
  BitVector& row(std::size_t r) noexcept { return rows_[r]; }

  std::size_t popcount() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.popcount();
    return n;
  }

  double density() const noexcept {
    const double total = static_cast<double>(rows() * cols_);
    return total == 0.0 ? 0.0 : static_cast<double>(popcount()) / total;
  }

  std::size_t distinct_rows() const {
    std::unordered_set<std::string> seen;
    for (const auto& r : rows_) seen.insert(r.to_hex());
    return seen.size();
  }

  MaskMatrix transposed() const {
    MaskMatrix t(cols_, rows());
    for (std::size_t r = 0; r < rows(); ++r) rows_[r].for_each_set([&](std::size_t c) { t.set(c, r); });
    return t;
  }

  bool operator==(const MaskMatrix&) const = default;

 private:
  std::size_t cols_ = 0;
  std::vector<BitVector> rows_;
};

// Reference route: binary matrix product IS * OS.
inline MaskMatrix dense_mask(const SelectionMatrix& is, const SelectionMatrix& os) {
  detail::require_dims(is.bits.cols() == os.bits.rows(), "dense_mask: IS cols != OS rows");
  const std::size_t m = is.bits.rows(), g = is.bits.cols(), n = os.bits.cols();
  MaskMatrix mask(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      unsigned acc = 0;
      for (std::size_t k = 0; k < g; ++k) acc += static_cast<unsigned>(is.bits(i, k) * os.bits(k, j));
      if (acc != 0) mask.set(i, j);
    }
  return mask;
}

// Bit j is set iff the row's group equals column j's group.
inline BitVector mask_row_from_indexes(std::uint32_t row_max_idx, const MaxIndexList& col_max) {
  BitVector bits(col_max.size());
  for (std::size_t j = 0; j < col_max.size(); ++j)
    if (col_max[j] == row_max_idx) bits.set(j);
  return bits;
}

inline MaskMatrix mask_from_grouping(const GroupingPair& gp) {
  const auto rows = argmax_rows(gp.ig());
  const auto cols = argmax_cols(gp.og());
  std::vector<BitVector> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(mask_row_from_indexes(rows[i], cols));
  return MaskMatrix(gp.n(), std::move(out));
}

// w ⊙ mask as a new matrix; w itself is left as is.
template <typename T>
Matrix<T> apply_mask(const Matrix<T>& w, const MaskMatrix& mask) {
  detail::require_dims(w.rows() == mask.rows() && w.cols() == mask.cols(), "apply_mask: shape mismatch");
  Matrix<T> out(w.rows(), w.cols(), T{});
  for (std::size_t i = 0; i < w.rows(); ++i) mask.row(i).for_each_set([&](std::size_t j) { out(i, j) = w(i, j); });
  return out;
}

// dL/dmask = dL/dW_eff ⊙ W, the mask side of the chain rule through apply_mask.
template <typename T>
Matrix<double> mask_gradient(const Matrix<T>& w, const Matrix<T>& dw_eff) {
  detail::require_dims(w.rows() == dw_eff.rows() && w.cols() == dw_eff.cols(), "mask_gradient: shape mismatch");
  Matrix<double> d(w.rows(), w.cols());
  for (std::size_t k = 0; k < w.size(); ++k)
    d.flat()[k] = static_cast<double>(dw_eff.flat()[k]) * static_cast<double>(w.flat()[k]);
  return d;
}

struct GroupingGradients {
  Matrix<double> d_ig;  // M x G
  Matrix<double> d_og;  // G x N
};

// Straight-through estimator: dIG = dmask * OS^T and dOG = IS^T * dmask, with
// the argmax binarization treated as identity.
inline GroupingGradients grouping_gradients(const Matrix<double>& dmask, const SelectionMatrix& is,
                                            const SelectionMatrix& os) {
  const std::size_t m = is.bits.rows(), g = is.bits.cols(), n = os.bits.cols();
  detail::require_dims(os.bits.rows() == g, "grouping_gradients: IS/OS group mismatch");
  detail::require_dims(dmask.rows() == m && dmask.cols() == n, "grouping_gradients: dmask shape");
  GroupingGradients out{Matrix<double>(m, g), Matrix<double>(g, n)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dmask(i, j);
      if (d == 0.0) continue;
      for (std::size_t k = 0; k < g; ++k) {
        if (os.bits(k, j)) out.d_ig(i, k) += d;
        if (is.bits(i, k)) out.d_og(k, j) += d;
      }
    }
  return out;
}

inline double expected_density(std::size_t g) {
  if (g == 0) throw ConfigError("expected_density: g must be >= 1");
  return 1.0 / static_cast<double>(g);
}

// Text dump: header "M N G", then one '0'/'1' line per row.
inline void write_mask(std::ostream& os, const MaskMatrix& mask, std::size_t g) {
  os << mask.rows() << ' ' << mask.cols() << ' ' << g << '\n';
  for (std::size_t i = 0; i < mask.rows(); ++i) os << mask.row(i).to_string() << '\n';
}

struct MaskDump {
  std::size_t groups = 0;
  MaskMatrix mask;
};

inline MaskDump read_mask(std::istream& is) {
  std::size_t m = 0, n = 0, g = 0;
  if (!(is >> m >> n >> g)) throw ContractError("read_mask: bad header");
  std::vector<BitVector> rows;
  rows.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::string line;
    if (!(is >> line) || line.size() != n) throw ContractError("read_mask: bad row " + std::to_string(i));
    rows.push_back(BitVector::from_string(line));
  }
  return {g, MaskMatrix(n, std::move(rows))};
}

}  // namespace lgroup::flgw
