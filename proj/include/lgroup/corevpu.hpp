// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense/sparse vector-processing-unit (VPU) core model.
//
// A core walks its rows in waves of up to four. The controller broadcasts
// the four row activations to every VPU and builds a 2-bit select array from
// the four workloads: the first WL0 VPUs take activation 0, the next WL1 take
// activation 1, and so on. If the wave holds more products than there are
// VPUs it spills into further beats. Each VPU multiplies its activation with
// one unmasked weight and the product is accumulated into the output column
// that weight belongs to.
//
// Timing per wave is max(wave_floor_cycles, beats). The weight fetch for the
// next wave runs behind the current one, so by default only compute beats are
// exposed (floor 1). A floor of 4 gives the unpipelined model.
//
// Accumulation order is fixed (core ascending, then row ascending per column)
// so results are bit-reproducible.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lgroup/alloc.hpp"
#include "lgroup/error.hpp"
#include "lgroup/flgw.hpp"
#include "lgroup/half.hpp"
#include "lgroup/matrix.hpp"
#include "lgroup/osel.hpp"

namespace lgroup::vpu {

enum class Precision { kFp32, kFp16Storage, kInteger };

inline constexpr std::size_t kDefaultVpuCount = 264;

struct CoreConfig {
  std::size_t vpu_count = kDefaultVpuCount;
  std::size_t rows_per_wave = 4;
  std::size_t wave_floor_cycles = 1;
  Precision precision = Precision::kFp16Storage;

  void validate() const {
    if (rows_per_wave == 0 || rows_per_wave > 4) throw ConfigError("CoreConfig: rows_per_wave must be in [1, 4]");
    if (vpu_count < rows_per_wave) throw ConfigError("CoreConfig: vpu_count must be >= rows_per_wave");
    if (wave_floor_cycles == 0) throw ConfigError("CoreConfig: wave_floor_cycles must be >= 1");
  }
};

// Select values are lane numbers 0..3, one per engaged VPU, grouped in beats
// of at most vpu_count entries.
struct SelectSignals {
  std::vector<std::vector<std::uint8_t>> beats;

  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto& b : beats) n += b.size();
    return n;
  }
};

inline SelectSignals generate_select_signals(std::span<const std::size_t> workloads, std::size_t vpu_count) {
  if (workloads.size() > 4) throw ContractError("generate_select_signals: at most four lanes");
  if (vpu_count == 0) throw ConfigError("generate_select_signals: vpu_count must be >= 1");
  std::vector<std::uint8_t> flat;
  for (std::size_t lane = 0; lane < workloads.size(); ++lane)
    flat.insert(flat.end(), workloads[lane], static_cast<std::uint8_t>(lane));
  SelectSignals out;
  for (std::size_t off = 0; off < flat.size(); off += vpu_count) {
    const std::size_t len = std::min(vpu_count, flat.size() - off);
    out.beats.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(off),
                           flat.begin() + static_cast<std::ptrdiff_t>(off + len));
  }
  return out;
}

// Window of group indexes resolved through the sparse row memory.
inline SelectSignals generate_select_signals(std::span<const std::uint32_t> index_window,
                                             const osel::SparseRowMemory& srm, std::size_t vpu_count) {
  std::vector<std::size_t> wl;
  for (auto k : index_window) wl.push_back(osel::lookup(srm, k).workload);
  return generate_select_signals(wl, vpu_count);
}

struct CoreReport {
  std::uint64_t cycles = 0;
  std::uint64_t active_macs = 0;
  std::uint64_t waves = 0;
  std::uint64_t skipped_waves = 0;
  std::uint64_t compute_beats = 0;
  std::uint64_t floor_stall = 0;
  std::size_t max_engaged_vpus = 0;
};

struct SimReport {
  std::uint64_t total_cycles = 0;  // cores run in parallel: slowest core
  std::size_t vpu_count = kDefaultVpuCount;
  std::vector<CoreReport> cores;

  std::uint64_t active_macs() const noexcept {
    std::uint64_t n = 0;
    for (const auto& c : cores) n += c.active_macs;
    return n;
  }
  // Slots offered while each core is busy.
  std::uint64_t mac_slots() const noexcept {
    std::uint64_t n = 0;
    for (const auto& c : cores) n += c.cycles * vpu_count;
    return n;
  }
  double utilization() const noexcept {
    const auto slots = mac_slots();
    return slots == 0 ? 0.0 : static_cast<double>(active_macs()) / static_cast<double>(slots);
  }
  template <typename Fn>
  std::uint64_t sum(Fn&& field) const {
    std::uint64_t n = 0;
    for (const auto& c : cores) n += field(c);
    return n;
  }
};

inline nlohmann::ordered_json to_json(const SimReport& r) {
  nlohmann::ordered_json per_core = nlohmann::ordered_json::array();
  for (const auto& c : r.cores) per_core.push_back(c.cycles);
  nlohmann::ordered_json j;
  j["cycles"] = r.total_cycles;
  j["active_macs"] = r.active_macs();
  j["utilization"] = r.utilization();
  j["breakdown"] = {
      {"waves", r.sum([](const CoreReport& c) { return c.waves; })},
      {"skipped_waves", r.sum([](const CoreReport& c) { return c.skipped_waves; })},
      {"compute_beats", r.sum([](const CoreReport& c) { return c.compute_beats; })},
      {"floor_stall", r.sum([](const CoreReport& c) { return c.floor_stall; })},
      {"mac_slots", r.mac_slots()},
      {"vpu_count", r.vpu_count},
      {"per_core_cycles", per_core},
  };
  return j;
}

template <typename T>
using accumulator_t = std::conditional_t<std::is_integral_v<T>, std::int64_t, float>;

namespace detail {

template <typename T>
auto load(T v, Precision p) {
  using A = accumulator_t<T>;
  if constexpr (std::is_integral_v<T>) {
    return static_cast<A>(v);
  } else {
    const float f = static_cast<float>(v);
    return p == Precision::kFp16Storage ? quantize_fp16(f) : f;
  }
}

}  // namespace detail

// Runs one core of `a` over the weight store `w` (original M x N, row-major).
// Forward: x has length M and the partial has length N. Backward: x has
// length N and the partial has length M.
template <typename T>
std::pair<std::vector<accumulator_t<T>>, CoreReport> run_core(const alloc::CoreAssignment& a, std::size_t core,
                                                               std::span<const T> x, const Matrix<T>& w,
                                                               const CoreConfig& cfg) {
  using A = accumulator_t<T>;
  cfg.validate();
  if (core >= a.cores()) throw ContractError("run_core: core id out of range");
  lgroup::detail::require_dims(x.size() == a.rows, "run_core: activation length != plan rows");
  lgroup::detail::require_dims(w.size() == a.rows * a.row_length, "run_core: weight store does not match plan");

  std::vector<A> partial(a.row_length, A{});
  CoreReport rep;
  const auto& rows = a.core_rows[core];
  const auto weights = w.flat();

  for (std::size_t start = 0; start < rows.size(); start += cfg.rows_per_wave) {
    const std::size_t lanes = std::min(cfg.rows_per_wave, rows.size() - start);
    std::array<std::size_t, 4> wl{};
    std::array<A, 4> act{};
    for (std::size_t l = 0; l < lanes; ++l) {
      const std::size_t r = rows[start + l];
      wl[l] = a.row_info[r].workload;
      act[l] = detail::load(x[r], cfg.precision);
    }
    const auto select = generate_select_signals(std::span<const std::size_t>(wl.data(), lanes), cfg.vpu_count);
    ++rep.waves;
    if (select.beats.empty()) {
      ++rep.skipped_waves;
      continue;
    }

    // Walk the flattened product stream beat by beat; lane offsets track the
    // next column of each row.
    std::array<std::size_t, 4> offset{};
    std::vector<A> staged;
    std::vector<std::size_t> target;
    for (const auto& beat : select.beats) {
      staged.clear();
      target.clear();
      for (std::uint8_t lane : beat) {
        const std::size_t r = rows[start + lane];
        const std::size_t c = a.row_info[r].cols[offset[lane]++];
        const std::size_t addr = alloc::flat_address(a.orientation, r, c, a.rows, a.row_length);
        staged.push_back(act[lane] * detail::load(weights[addr], cfg.precision));
        target.push_back(c);
      }
      for (std::size_t v = 0; v < staged.size(); ++v) partial[target[v]] += staged[v];
      rep.active_macs += beat.size();
      rep.max_engaged_vpus = std::max(rep.max_engaged_vpus, beat.size());
    }
    const std::uint64_t beats = select.beats.size();
    const std::uint64_t cycles = std::max<std::uint64_t>(cfg.wave_floor_cycles, beats);
    rep.compute_beats += beats;
    rep.floor_stall += cycles - beats;
    rep.cycles += cycles;
  }
  return {std::move(partial), rep};
}

template <typename A>
std::vector<A> aggregate(const std::vector<std::vector<A>>& partials) {
  if (partials.empty()) return {};
  std::vector<A> out(partials.front().size(), A{});
  for (const auto& p : partials) {
    lgroup::detail::require_dims(p.size() == out.size(), "aggregate: partial length mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[j];
  }
  return out;
}

template <typename T>
struct SpmvResult {
  std::vector<accumulator_t<T>> y;
  SimReport report;
  osel::EncodeStats encode;
};

template <typename T>
SpmvResult<T> run_plan(const alloc::CoreAssignment& plan, std::span<const T> x, const Matrix<T>& w,
                       const CoreConfig& cfg) {
  SpmvResult<T> out;
  out.report.vpu_count = cfg.vpu_count;
  std::vector<std::vector<accumulator_t<T>>> partials;
  for (std::size_t k = 0; k < plan.cores(); ++k) {
    auto [p, rep] = run_core(plan, k, x, w, cfg);
    out.report.total_cycles = std::max(out.report.total_cycles, rep.cycles);
    out.report.cores.push_back(rep);
    partials.push_back(std::move(p));
  }
  out.y = aggregate(partials);
  return out;
}

// y = x * (W ⊙ mask) through encode, allocate, per-core VPU runs, aggregate.
template <typename T>
SpmvResult<T> spmv(const Matrix<T>& w, const flgw::GroupingPair& gp, std::span<const T> x, std::size_t cores,
                   const CoreConfig& cfg = {}, const osel::CycleParams& params = {}) {
  lgroup::detail::require_dims(w.rows() == gp.m() && w.cols() == gp.n(), "spmv: weight/grouping shape mismatch");
  lgroup::detail::require_dims(x.size() == w.rows(), "spmv: activation length != M");
  const auto enc = osel::encode_forward(flgw::argmax_rows(gp.ig()), flgw::argmax_cols(gp.og()), params);
  const auto plan = alloc::build_assignment(enc.srm, enc.index, cores, alloc::Orientation::kForward);
  auto out = run_plan(plan, x, w, cfg);
  out.encode = enc.stats;
  return out;
}

// Backward: dx = (W ⊙ mask) * delta using the transposed encoding.
template <typename T>
SpmvResult<T> spmv_backward(const Matrix<T>& w, const flgw::GroupingPair& gp, std::span<const T> delta,
                            std::size_t cores, const CoreConfig& cfg = {}, const osel::CycleParams& params = {}) {
  lgroup::detail::require_dims(w.rows() == gp.m() && w.cols() == gp.n(), "spmv_backward: weight/grouping shape mismatch");
  lgroup::detail::require_dims(delta.size() == w.cols(), "spmv_backward: delta length != N");
  const auto enc = osel::encode_backward(flgw::argmax_cols(gp.og()), flgw::argmax_rows(gp.ig()), params);
  const auto plan = alloc::build_assignment(enc.srm, enc.index, cores, alloc::Orientation::kBackward);
  auto out = run_plan(plan, delta, w, cfg);
  out.encode = enc.stats;
  return out;
}

}  // namespace lgroup::vpu
