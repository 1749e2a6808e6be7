// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lgroup/corevpu.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lgroup;
using namespace lgroup::vpu;

namespace {

struct Case {
  oracle::Dense w;
  std::vector<double> x;
  flgw::GroupingPair gp;
};

Case random_case(std::size_t m, std::size_t n, std::size_t g, std::mt19937_64& rng) {
  return {oracle::uniform(m, n, rng, -1, 1), [&] {
            std::vector<double> x(m);
            std::uniform_real_distribution<double> d(-1, 1);
            for (auto& v : x) v = d(rng);
            return x;
          }(),
          flgw::init_grouping(m, n, g, rng())};
}

template <typename T>
Matrix<T> cast(const oracle::Dense& d) {
  Matrix<T> m(d.size(), d.front().size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j) m(i, j) = static_cast<T>(d[i][j]);
  return m;
}

template <typename T>
std::vector<T> cast(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

double rel_err(const std::vector<float>& y, const std::vector<double>& ref) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    num = std::max(num, std::abs(y[j] - ref[j]));
    den = std::max(den, std::abs(ref[j]));
  }
  return den == 0 ? num : num / den;
}

CoreConfig fp32() {
  CoreConfig c;
  c.precision = Precision::kFp32;
  return c;
}

}  // namespace

TEST(SelectSignals, RunLengthsFollowWorkloads) {
  const std::vector<std::size_t> wl{2, 0, 1, 3};
  const auto s = generate_select_signals(wl, 264);
  ASSERT_EQ(s.beats.size(), 1u);
  EXPECT_EQ(s.beats[0], (std::vector<std::uint8_t>{0, 0, 2, 3, 3, 3}));
}

TEST(SelectSignals, WindowResolvedThroughSrm) {
  osel::SparseRowMemory srm(4, 8);
  srm.entries[1] = {BitVector::from_string("11000000"), 2, true};
  srm.entries[2] = {BitVector::from_string("00100000"), 1, true};
  srm.entries[3] = {BitVector::from_string("00011100"), 3, true};
  const std::vector<std::uint32_t> window{1, 2, 1, 3};
  const auto s = generate_select_signals(window, srm, 264);
  EXPECT_EQ(s.beats[0], (std::vector<std::uint8_t>{0, 0, 1, 2, 2, 3, 3, 3}));
  const std::vector<std::uint32_t> missing{0};
  EXPECT_THROW(generate_select_signals(missing, srm, 264), ContractError);
}

TEST(SelectSignals, SpillsIntoBeatsAndSkipsEmpty) {
  const std::vector<std::size_t> wl{200, 200, 200};
  const auto s = generate_select_signals(wl, 264);
  ASSERT_EQ(s.beats.size(), 3u);
  EXPECT_EQ(s.beats[0].size(), 264u);
  EXPECT_EQ(s.beats[2].size(), 72u);
  EXPECT_EQ(s.total(), 600u);
  const std::vector<std::size_t> zero{0, 0, 0, 0};
  EXPECT_TRUE(generate_select_signals(zero, 264).beats.empty());
  const std::vector<std::size_t> five{1, 1, 1, 1, 1};
  EXPECT_THROW(generate_select_signals(five, 264), ContractError);
}

TEST(CoreConfig, Validation) {
  CoreConfig c;
  c.rows_per_wave = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.vpu_count = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.wave_floor_cycles = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunCore, SingleRowSingleWeight) {
  osel::SparseRowMemory srm(1, 3);
  srm.entries[0] = {BitVector::from_string("010"), 1, true};
  const auto a = alloc::build_assignment(srm, osel::IndexList{1, {0}}, 1);
  Matrix<float> w(1, 3, 2.0f);
  const std::vector<float> x{1.5f};
  const auto [y, rep] = run_core(a, 0, std::span<const float>(x), w, fp32());
  EXPECT_EQ(y, (std::vector<float>{0.0f, 3.0f, 0.0f}));
  EXPECT_EQ(rep.active_macs, 1u);
  EXPECT_EQ(rep.cycles, 1u);
  EXPECT_EQ(rep.waves, 1u);
  EXPECT_THROW(run_core(a, 1, std::span<const float>(x), w, fp32()), ContractError);
  const std::vector<float> bad{1.0f, 2.0f};
  EXPECT_THROW(run_core(a, 0, std::span<const float>(bad), w, fp32()), DimensionError);
}

TEST(Aggregate, SumsInOrder) {
  const std::vector<std::vector<float>> one{{1, 2}};
  EXPECT_EQ(aggregate(one), one[0]);
  const std::vector<std::vector<float>> cancel{{1, -2}, {-1, 2}};
  EXPECT_EQ(aggregate(cancel), (std::vector<float>{0, 0}));
  const std::vector<std::vector<float>> bad{{1}, {1, 2}};
  EXPECT_THROW(aggregate(bad), DimensionError);
}

TEST(Spmv, MatchesDenseOracleFp32) {
  std::mt19937_64 rng(71);
  for (std::size_t g : {1u, 2u, 4u, 8u, 16u})
    for (std::size_t c : {1u, 2u, 3u}) {
      const auto k = random_case(48 + rng() % 40, 64 + rng() % 64, g, rng);
      const auto ref = oracle::masked_matvec(
          k.w, oracle::mask(support::to_dense(k.gp.ig()), support::to_dense(k.gp.og())), k.x);
      const auto xs = cast<float>(k.x);
      const auto r = spmv<float>(cast<float>(k.w), k.gp, xs, c, fp32());
      EXPECT_LE(rel_err(r.y, ref), 1e-5) << "G=" << g << " C=" << c;
    }
}

TEST(Spmv, IntegerModeIsExact) {
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<int> d(-50, 50);
  for (std::size_t g : {1u, 3u, 8u}) {
    const std::size_t m = 40, n = 70;
    Matrix<int> w(m, n);
    oracle::Dense wd(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) wd[i][j] = w(i, j) = d(rng);
    std::vector<int> x(m);
    std::vector<double> xd(m);
    for (std::size_t i = 0; i < m; ++i) xd[i] = x[i] = d(rng);
    const auto gp = flgw::init_grouping(m, n, g, rng());
    CoreConfig cfg;
    cfg.precision = Precision::kInteger;
    const auto r = spmv<int>(w, gp, x, 3, cfg);
    const auto ref =
        oracle::masked_matvec(wd, oracle::mask(support::to_dense(gp.ig()), support::to_dense(gp.og())), xd);
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(r.y[j], static_cast<std::int64_t>(ref[j]));
  }
}

TEST(Spmv, SingleGroupBitIdenticalToBlockedDense) {
  std::mt19937_64 rng(79);
  for (std::size_t c : {1u, 2u, 3u}) {
    const auto k = random_case(67, 90, 1, rng);
    const auto w = cast<float>(k.w);
    const auto x = cast<float>(k.x);
    const std::vector<float> flat(w.flat().begin(), w.flat().end());
    const auto ref = oracle::blocked_matvec<float, float>(flat, 67, 90, x, c);
    const auto r = spmv<float>(w, k.gp, x, c, fp32());
    EXPECT_EQ(r.y, ref) << "C=" << c;
  }
}

TEST(Spmv, BackwardMatchesTransposedOracle) {
  std::mt19937_64 rng(83);
  for (std::size_t g : {1u, 4u, 16u}) {
    const auto k = random_case(40, 60, g, rng);
    std::vector<double> delta(60);
    std::uniform_real_distribution<double> d(-1, 1);
    for (auto& v : delta) v = d(rng);
    const auto ref = oracle::masked_matvec_t(
        k.w, oracle::mask(support::to_dense(k.gp.ig()), support::to_dense(k.gp.og())), delta);
    const auto ds = cast<float>(delta);
    const auto r = spmv_backward<float>(cast<float>(k.w), k.gp, ds, 3, fp32());
    ASSERT_EQ(r.y.size(), 40u);
    EXPECT_LE(rel_err(r.y, ref), 1e-5);
  }
}

TEST(Spmv, Fp16StorageQuantizesOperands) {
  std::mt19937_64 rng(89);
  const auto k = random_case(32, 48, 2, rng);
  auto wq = k.w;
  for (auto& r : wq)
    for (auto& v : r) v = quantize_fp16(static_cast<float>(v));
  std::vector<double> xq(k.x.size());
  for (std::size_t i = 0; i < xq.size(); ++i) xq[i] = quantize_fp16(static_cast<float>(k.x[i]));
  const auto ref =
      oracle::masked_matvec(wq, oracle::mask(support::to_dense(k.gp.ig()), support::to_dense(k.gp.og())), xq);
  const auto xs = cast<float>(k.x);
  const auto r = spmv<float>(cast<float>(k.w), k.gp, xs, 2);
  EXPECT_LE(rel_err(r.y, ref), 1e-5);
}

TEST(Spmv, ReportInvariants) {
  std::mt19937_64 rng(97);
  for (std::size_t g : {1u, 2u, 16u}) {
    const auto k = random_case(128, 512, g, rng);
    const auto xs = cast<float>(k.x);
    const auto w = cast<float>(k.w);
    const auto r = spmv<float>(w, k.gp, xs, 3);
    EXPECT_EQ(r.report.active_macs(), flgw::mask_from_grouping(k.gp).popcount());
    EXPECT_GE(r.report.utilization(), 0.0);
    EXPECT_LE(r.report.utilization(), 1.0);
    for (const auto& c : r.report.cores) {
      EXPECT_LE(c.max_engaged_vpus, 264u);
      EXPECT_LE(c.cycles, r.report.total_cycles);
      EXPECT_EQ(c.cycles, c.compute_beats + c.floor_stall);
    }

    const std::vector<float> zeros(128, 0.0f);
    const auto z = spmv<float>(w, k.gp, zeros, 3);
    for (float v : z.y) EXPECT_EQ(v, 0.0f);
    EXPECT_EQ(z.report.utilization(), r.report.utilization());

    const auto again = spmv<float>(w, k.gp, xs, 3);
    EXPECT_EQ(again.y, r.y);
    EXPECT_EQ(to_json(again.report), to_json(r.report));
  }
}

TEST(Spmv, DenseCycleGolden) {
  // Cores hold 43, 43, 42 rows of 512 weights. A full wave is 2048 MACs = 8
  // beats; the 3-row and 2-row tail waves take 6 and 4.
  std::mt19937_64 rng(101);
  const auto k = random_case(128, 512, 1, rng);
  const auto xs = cast<float>(k.x);
  const auto r = spmv<float>(cast<float>(k.w), k.gp, xs, 3);
  ASSERT_EQ(r.report.cores.size(), 3u);
  EXPECT_EQ(r.report.cores[0].cycles, 10u * 8u + 6u);
  EXPECT_EQ(r.report.cores[2].cycles, 10u * 8u + 4u);
  EXPECT_EQ(r.report.total_cycles, 86u);
  EXPECT_EQ(r.report.mac_slots(), (86u + 86u + 84u) * 264u);
}

TEST(Spmv, WaveFloorStalls) {
  std::mt19937_64 rng(103);
  const auto k = random_case(16, 16, 16, rng);
  const auto xs = cast<float>(k.x);
  CoreConfig cfg = fp32();
  cfg.wave_floor_cycles = 4;
  const auto r = spmv<float>(cast<float>(k.w), k.gp, xs, 1, cfg);
  const auto& c = r.report.cores[0];
  EXPECT_EQ(c.cycles, 4u * (c.waves - c.skipped_waves));
  EXPECT_GT(c.floor_stall, 0u);
}

TEST(SimReport, JsonSchema) {
  std::mt19937_64 rng(107);
  const auto k = random_case(20, 30, 2, rng);
  const auto xs = cast<float>(k.x);
  const auto j = to_json(spmv<float>(cast<float>(k.w), k.gp, xs, 2).report);
  for (const char* key : {"cycles", "active_macs", "utilization", "breakdown"}) EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"waves", "skipped_waves", "compute_beats", "floor_stall", "mac_slots", "vpu_count",
                          "per_core_cycles"})
    EXPECT_TRUE(j["breakdown"].contains(key)) << key;
  EXPECT_EQ(j["breakdown"]["per_core_cycles"].size(), 2u);
}

TEST(Spmv, ShapeErrors) {
  const auto gp = flgw::init_grouping(4, 6, 2, 1);
  Matrix<float> w(4, 5);
  const std::vector<float> x(4, 1.0f);
  EXPECT_THROW(spmv<float>(w, gp, x, 1), DimensionError);
  Matrix<float> ok(4, 6);
  const std::vector<float> short_x(3, 1.0f);
  EXPECT_THROW(spmv<float>(ok, gp, short_x, 1), DimensionError);
}
