// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0

// Groups a 128x512 layer, encodes its mask, splits rows over three cores and
// runs one simulated forward pass.

#include <iostream>
#include <random>

#include <fmt/format.h>

#include "lgroup/alloc.hpp"
#include "lgroup/corevpu.hpp"
#include "lgroup/flgw.hpp"
#include "lgroup/osel.hpp"

int main() {
  using namespace lgroup;
  constexpr std::size_t m = 128, n = 512, g = 4, cores = 3;

  const auto gp = flgw::init_grouping(m, n, g, 42);
  const auto enc = osel::encode_forward(flgw::argmax_rows(gp.ig()), flgw::argmax_cols(gp.og()));
  fmt::print("G={}: {} misses, {} hits, {} encode cycles\n", g, enc.stats.misses, enc.stats.hits,
             enc.stats.cycles.total());

  const auto plan = alloc::build_assignment(enc.srm, enc.index, cores);
  const auto dev = alloc::deviation(plan);
  fmt::print("per-core workload:");
  for (auto w : dev.per_core) fmt::print(" {}", w);
  fmt::print(" (max deviation {:.1f})\n", dev.max_deviation);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  Matrix<float> w(m, n);
  for (float& v : w.flat()) v = uni(rng);
  std::vector<float> x(m);
  for (float& v : x) v = uni(rng);

  const auto res = vpu::spmv<float>(w, gp, x, cores);
  std::cout << vpu::to_json(res.report).dump(2) << '\n';

  const auto fp = osel::memory_footprint(m, n, g);
  fmt::print("compression {:.2f}x, sparse row memory {:.1f}% of footprint\n", fp.compression_ratio(),
             100 * fp.srm_fraction());
}
