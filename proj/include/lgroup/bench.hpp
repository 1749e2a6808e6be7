// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment matrices behind the CLI subcommands. Every runner is a pure
// function of its ExperimentConfig; seeds are cfg.seed, cfg.seed + 1, ...

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lgroup/alloc.hpp"
#include "lgroup/corevpu.hpp"
#include "lgroup/error.hpp"
#include "lgroup/flgw.hpp"
#include "lgroup/osel.hpp"
#include "lgroup/report.hpp"
#include "lgroup/train.hpp"

namespace lgroup::bench {

enum class Bench { kEncode, kAlloc, kSpmv, kTrain };

struct ExperimentConfig {
  std::size_t m = 128;
  std::size_t n = 512;
  std::vector<std::size_t> g_list;
  std::vector<std::size_t> c_list{3};
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  std::size_t trials = 100;  // alloc-bench Monte Carlo trials per (G, C)
  std::size_t weight_bits = 16;
  osel::CycleParams cycle;
  vpu::CoreConfig core;
  // train
  std::size_t iterations = 300;
  std::size_t batch = 16;
  std::size_t agents = 2;
  std::size_t hidden = 32;

  std::uint64_t seed_at(std::size_t i) const noexcept { return seed + i; }

  void validate() const {
    if (g_list.empty()) throw ConfigError("config: g list is empty");
    if (c_list.empty()) throw ConfigError("config: c list is empty");
    if (seeds == 0) throw ConfigError("config: seeds must be >= 1");
    if (m == 0 || n == 0) throw ConfigError("config: m and n must be >= 1");
    for (auto g : g_list)
      if (g == 0) throw ConfigError("config: every g must be >= 1");
    for (auto c : c_list)
      if (c == 0) throw ConfigError("config: every c must be >= 1");
    cycle.validate();
    core.validate();
  }
};

inline ExperimentConfig defaults_for(Bench b) {
  ExperimentConfig c;
  switch (b) {
    case Bench::kEncode: c.g_list = {2, 4, 8, 16, 32}; break;
    case Bench::kAlloc: c.g_list = {2, 4, 8, 16}; break;
    case Bench::kSpmv:
      c.g_list = {1, 2, 4, 8, 16};
      c.seeds = 3;
      c.core.precision = vpu::Precision::kFp32;
      break;
    case Bench::kTrain:
      c.g_list = {1, 2, 4};
      c.seeds = 5;
      break;
  }
  return c;
}

namespace detail {

inline std::string str(std::size_t v) { return std::to_string(v); }
inline std::string str(std::uint64_t v, int) { return std::to_string(v); }

inline const char* envelope(std::size_t g) { return flgw::outside_hardware_envelope(g) ? "outside" : "ok"; }

inline void add_cycles(report::Report& r, report::Params base, const osel::CycleBreakdown& c) {
  const std::pair<const char*, std::uint64_t> stages[] = {
      {"total", c.total()},           {"max_index", c.max_index},
      {"index_miss", c.index_miss},   {"index_hit", c.index_hit},
      {"weight_compression", c.weight_compression},
  };
  for (const auto& [name, v] : stages) {
    auto p = base;
    p.emplace_back("stage", name);
    r.add(std::move(p), "cycles", static_cast<double>(v), "cycles");
  }
}

}  // namespace detail

struct EncodeBenchResult {
  report::Report report{"encode-bench"};
  std::vector<std::pair<std::string, std::string>> srm_dumps;  // file name, contents
};

inline EncodeBenchResult run_encode_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  EncodeBenchResult out;
  auto& r = out.report;
  for (auto g : cfg.g_list) {
    flgw::validate_shape(cfg.m, cfg.n, g);
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto seed = cfg.seed_at(s);
      const auto gp = flgw::init_grouping(cfg.m, cfg.n, g, seed);
      const auto enc = osel::encode_forward(flgw::argmax_rows(gp.ig()), flgw::argmax_cols(gp.og()), cfg.cycle);
      std::size_t unmasked = 0;
      for (auto k : enc.index.values) unmasked += enc.srm.entries[k].workload;
      const auto base = osel::cycle_model(cfg.m, cfg.n, g, osel::Mode::kBaseline, cfg.cycle, unmasked);

      const report::Params id = {{"m", detail::str(cfg.m)}, {"n", detail::str(cfg.n)}, {"g", detail::str(g)},
                                 {"seed", detail::str(seed, 0)}, {"hw", detail::envelope(g)}};
      auto with = [&](std::initializer_list<std::pair<std::string, std::string>> extra) {
        auto p = id;
        for (const auto& e : extra) p.push_back(e);
        return p;
      };
      detail::add_cycles(r, with({{"mode", "osel"}}), enc.stats.cycles);
      detail::add_cycles(r, with({{"mode", "baseline"}}), base.cycles);
      r.add(with({{"mode", "osel"}, {"stage", "speedup_vs_baseline"}}), "cycles",
            static_cast<double>(base.cycles.total()) / static_cast<double>(enc.stats.cycles.total()), "ratio");

      const auto fp_mask = osel::memory_footprint(cfg.m, cfg.n, g, cfg.weight_bits, unmasked);
      const auto fp_model = osel::memory_footprint(cfg.m, cfg.n, g, cfg.weight_bits);
      r.add(with({{"source", "mask"}}), "compression_ratio", fp_mask.compression_ratio(), "x");
      r.add(with({{"source", "expectation"}}), "compression_ratio", fp_model.compression_ratio(), "x");
      r.add(with({}), "density",
            static_cast<double>(unmasked) / static_cast<double>(cfg.m * cfg.n), "fraction");

      std::ostringstream dump;
      osel::write_srm(dump, enc.srm);
      out.srm_dumps.emplace_back("srm_g" + detail::str(g) + "_s" + detail::str(seed, 0) + ".txt", dump.str());
    }
  }
  return out;
}

struct AllocTrial {
  double row_based = 0;
  double threshold = 0;
};

inline AllocTrial alloc_trial(std::size_t m, std::size_t n, std::size_t g, std::size_t c, std::uint64_t seed) {
  const auto gp = flgw::init_grouping(m, n, g, seed);
  const auto enc = osel::encode_forward(flgw::argmax_rows(gp.ig()), flgw::argmax_cols(gp.og()));
  const auto row = alloc::deviation(alloc::build_assignment(enc.srm, enc.index, c));
  const auto thr = alloc::deviation(alloc::build_threshold_assignment(enc.srm, enc.index, c));
  return {row.max_deviation, thr.max_deviation};
}

inline report::Report run_alloc_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.trials == 0) throw ConfigError("alloc-bench: trials must be >= 1");
  report::Report r("alloc-bench");
  for (auto g : cfg.g_list) {
    flgw::validate_shape(cfg.m, cfg.n, g);
    for (auto c : cfg.c_list) {
      double row_sum = 0, thr_sum = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const auto trial = alloc_trial(cfg.m, cfg.n, g, c, cfg.seed_at(t));
        row_sum += trial.row_based;
        thr_sum += trial.threshold;
      }
      const double k = static_cast<double>(cfg.trials);
      const report::Params id = {{"m", detail::str(cfg.m)}, {"n", detail::str(cfg.n)}, {"g", detail::str(g)},
                                 {"c", detail::str(c)},     {"trials", detail::str(cfg.trials)}};
      auto p = id;
      p.emplace_back("scheme", "row");
      r.add(p, "max_deviation", row_sum / k, "elements");
      p = id;
      p.emplace_back("scheme", "threshold");
      r.add(p, "max_deviation", thr_sum / k, "elements");
    }
  }
  return r;
}

// Independent reference: y = x * (W ⊙ (IS * OS)) accumulated in double.
template <typename T>
std::vector<double> dense_masked_matvec(const Matrix<T>& w, const flgw::MaskMatrix& mask, std::span<const double> x) {
  std::vector<double> y(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (mask.at(i, j)) y[j] += x[i] * static_cast<double>(w(i, j));
  return y;
}

// max |y - ref| / max(max |ref|, tiny)
inline double relative_error(std::span<const float> y, std::span<const double> ref) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    num = std::max(num, std::abs(static_cast<double>(y[j]) - ref[j]));
    den = std::max(den, std::abs(ref[j]));
  }
  return num / std::max(den, 1e-30);
}

struct SpmvCase {
  Matrix<float> w;
  flgw::GroupingPair gp;
  std::vector<float> x;
};

inline SpmvCase make_spmv_case(std::size_t m, std::size_t n, std::size_t g, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x100000001b3ull + g);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  SpmvCase c{Matrix<float>(m, n), flgw::init_grouping(m, n, g, seed), std::vector<float>(m)};
  for (float& v : c.w.flat()) v = uni(rng);
  for (float& v : c.x) v = uni(rng);
  return c;
}

struct SpmvVerifyResult {
  report::Report report{"spmv-verify"};
  std::size_t passed = 0;
  std::size_t failed = 0;
  double worst_error = 0;
};

inline constexpr double kSpmvTolerance = 1e-5;

inline SpmvVerifyResult run_spmv_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  SpmvVerifyResult out;
  auto& r = out.report;
  const auto precision = cfg.core.precision;
  if (precision == vpu::Precision::kInteger)
    throw ConfigError("spmv-verify: integer precision is a test mode; use fp32 or fp16");
  const char* prec_name = precision == vpu::Precision::kFp32 ? "fp32" : "fp16";
  for (auto c : cfg.c_list)
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto seed = cfg.seed_at(s);
      const auto dense_case = make_spmv_case(cfg.m, cfg.n, 1, seed);
      const auto dense = vpu::spmv<float>(dense_case.w, dense_case.gp, dense_case.x, c, cfg.core, cfg.cycle);
      for (auto g : cfg.g_list) {
        flgw::validate_shape(cfg.m, cfg.n, g);
        const auto k = make_spmv_case(cfg.m, cfg.n, g, seed);
        const auto res = vpu::spmv<float>(k.w, k.gp, k.x, c, cfg.core, cfg.cycle);

        // Reference sees the values the core stores.
        Matrix<float> wq = k.w;
        std::vector<double> xq(k.x.size());
        if (precision == vpu::Precision::kFp16Storage)
          for (float& v : wq.flat()) v = quantize_fp16(v);
        for (std::size_t i = 0; i < k.x.size(); ++i)
          xq[i] = precision == vpu::Precision::kFp16Storage ? quantize_fp16(k.x[i]) : k.x[i];
        const auto mask = flgw::dense_mask(flgw::build_input_selection(k.gp.ig()),
                                           flgw::build_output_selection(k.gp.og()));
        const auto ref = dense_masked_matvec(wq, mask, xq);
        const double err = relative_error(res.y, ref);
        out.worst_error = std::max(out.worst_error, err);
        const bool ok = err <= kSpmvTolerance && res.report.active_macs() == mask.popcount();
        ok ? ++out.passed : ++out.failed;

        const report::Params id = {{"m", detail::str(cfg.m)}, {"n", detail::str(cfg.n)},
                                   {"g", detail::str(g)},     {"c", detail::str(c)},
                                   {"seed", detail::str(seed, 0)}, {"precision", prec_name}};
        r.add(id, "cycles", static_cast<double>(res.report.total_cycles), "cycles");
        r.add(id, "utilization", res.report.utilization(), "fraction");
        r.add(id, "speedup_vs_dense",
              static_cast<double>(dense.report.total_cycles) / static_cast<double>(res.report.total_cycles), "x");
        r.add(id, "density", mask.density(), "fraction");
      }
    }
  return out;
}

struct TrainBenchResult {
  report::Report report{"train"};
  std::vector<std::pair<std::string, train::Timeline>> timelines;  // file name, timeline
};

inline train::TrainConfig train_config(const ExperimentConfig& cfg, std::size_t g, std::uint64_t seed) {
  train::TrainConfig t;
  t.groups = g;
  t.seed = seed;
  t.iterations = cfg.iterations;
  t.batch = cfg.batch;
  t.agents = cfg.agents;
  t.hidden = cfg.hidden;
  return t;
}

// Final success: mean over the last tenth of the run (at least one iteration).
inline std::size_t final_window(std::size_t iterations) { return std::max<std::size_t>(1, iterations / 10); }

inline TrainBenchResult run_train(const ExperimentConfig& cfg) {
  cfg.validate();
  TrainBenchResult out;
  auto& r = out.report;
  const std::size_t window = final_window(cfg.iterations);
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    const auto seed = cfg.seed_at(s);
    const auto base_cfg = train_config(cfg, 1, seed);
    const report::Params rid = {{"g", "-"}, {"seed", detail::str(seed, 0)}, {"policy", "random"}};
    r.add(rid, "success_rate", train::random_policy_success(base_cfg, 2000, seed), "percent");
    for (auto g : cfg.g_list) {
      const auto tc = train_config(cfg, g, seed);
      auto tl = train::train_loop<float>(tc);
      const report::Params id = {{"g", detail::str(g)}, {"seed", detail::str(seed, 0)}, {"policy", "learned"}};
      r.add(id, "success_rate", tl.final_success(window), "percent");
      r.add(id, "density", tl.rows.empty() ? 0.0 : tl.rows.back().density, "fraction");
      out.timelines.emplace_back("timeline_g" + detail::str(g) + "_s" + detail::str(seed, 0) + ".csv", std::move(tl));
    }
  }
  return out;
}

}  // namespace lgroup::bench
