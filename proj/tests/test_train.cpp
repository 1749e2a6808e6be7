// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lgroup/train.hpp"
#include "oracles.hpp"

using namespace lgroup;

namespace {

struct Batch {
  std::vector<train::Episode<double>> episodes;
  std::vector<std::vector<double>> adv;
};

Batch random_batch(const nn::MaskedNetwork<double>& net, std::uint64_t seed, std::size_t count) {
  env::ToyEnv e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Batch b;
  for (std::size_t k = 0; k < count; ++k) {
    b.episodes.push_back(train::rollout(net, e, rng));
    auto& a = b.adv.emplace_back();
    for (std::size_t t = 0; t < b.episodes.back().obs.size(); ++t) a.push_back(nd(rng));
  }
  return b;
}

}  // namespace

TEST(Env, MovesClampAndCatch) {
  env::ToyEnv e(5, 2, 3);
  e.reset({{0, 0}, {4, 4}}, {1, 0});
  const std::vector<std::size_t> a{static_cast<std::size_t>(env::Move::kUp), static_cast<std::size_t>(env::Move::kDown)};
  auto r = e.step(a);
  EXPECT_EQ(e.positions()[0], (env::Cell{0, 0}));
  EXPECT_EQ(e.positions()[1], (env::Cell{4, 4}));
  EXPECT_FALSE(r.done);
  const std::vector<std::size_t> right{static_cast<std::size_t>(env::Move::kRight),
                                       static_cast<std::size_t>(env::Move::kStay)};
  r = e.step(right);
  EXPECT_TRUE(r.caught);
  EXPECT_TRUE(r.done);
  EXPECT_DOUBLE_EQ(r.reward, 1.0);
}

TEST(Env, HorizonEndsEpisode) {
  env::ToyEnv e(5, 1, 2);
  e.reset({{0, 0}}, {4, 4});
  const std::vector<std::size_t> stay{4};
  EXPECT_FALSE(e.step(stay).done);
  const auto r = e.step(stay);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.caught);
  const std::vector<std::size_t> bad{7};
  EXPECT_THROW(e.step(bad), ContractError);
  const std::vector<std::size_t> two{0, 0};
  EXPECT_THROW(e.step(two), DimensionError);
  EXPECT_THROW(env::ToyEnv(1), ConfigError);
}

TEST(Env, ObservationScaling) {
  env::ToyEnv e(5, 1, 8);
  e.reset({{1, 2}}, {3, 0});
  const auto o = e.observe<double>();
  EXPECT_DOUBLE_EQ(o(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(o(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(o(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(o(0, 3), -0.5);
}

TEST(Returns, Discounting) {
  const auto g = train::discounted_returns({0, 0, 1}, 0.5);
  EXPECT_EQ(g, (std::vector<double>{0.25, 0.5, 1.0}));
}

TEST(Sample, DegenerateDistribution) {
  std::mt19937_64 rng(1);
  const std::vector<double> p{0.0, 1.0, 0.0};
  for (int k = 0; k < 20; ++k) EXPECT_EQ((train::sample<std::mt19937_64, double>(p, rng)), 1u);
}

TEST(RMSprop, HandStep) {
  std::vector<double> p{1.0}, g{0.5}, sq;
  nn::rmsprop_step(std::span<double>(p), std::span<const double>(g), sq, {});
  EXPECT_NEAR(sq[0], 0.0025, 1e-15);
  EXPECT_NEAR(p[0], 1.0 - 0.001 * 0.5 / (0.05 + 1e-8), 1e-15);
  std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(nn::rmsprop_step(std::span<double>(wrong), std::span<const double>(g), sq, {}), DimensionError);
}

TEST(Network, SingleGroupEqualsUnmaskedReference) {
  const auto net = nn::make_policy_network<double>(env::kObsDim, 6, env::kActionCount, 1, false, 5);
  const Matrix<double> obs(1, 4, 0.3);
  const auto c = nn::forward(net, obs);
  std::vector<double> h(obs.flat().begin(), obs.flat().end());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& l = net.layers[k];
    std::vector<double> next(l.out());
    for (std::size_t j = 0; j < l.out(); ++j) {
      double acc = 0;
      for (std::size_t i = 0; i < l.in(); ++i) acc += h[i] * l.w(i, j);
      next[j] = k < 2 ? std::tanh(acc + l.bias[j]) : acc + l.bias[j];
    }
    h = next;
  }
  double z = 0;
  for (double v : h) z += std::exp(v);
  for (std::size_t j = 0; j < h.size(); ++j) EXPECT_NEAR(c.probs(0, j), std::exp(h[j]) / z, 1e-12);
}

TEST(Gradients, FiniteDifferenceFp64) {
  auto net = nn::make_policy_network<double>(env::kObsDim, 8, env::kActionCount, 2, true, 11);
  const auto batch = random_batch(net, 3, 4);
  const auto grads = train::policy_gradients(net, batch.episodes, batch.adv);
  auto loss = [&] { return train::policy_loss(net, batch.episodes, batch.adv); };

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    double worst = 0, scale = 0;
    for (std::size_t i = 0; i < l.in(); ++i)
      for (std::size_t j = 0; j < l.out(); ++j) {
        const double analytic = grads.dw[k](i, j);
        if (!l.mask.at(i, j)) {
          EXPECT_EQ(analytic, 0.0);
          continue;
        }
        const double fd = oracle::central_difference(loss, l.w(i, j), 1e-6);
        worst = std::max(worst, std::abs(analytic - fd));
        scale = std::max(scale, std::abs(fd));
      }
    for (std::size_t j = 0; j < l.out(); ++j) {
      const double fd = oracle::central_difference(loss, l.bias[j], 1e-6);
      worst = std::max(worst, std::abs(grads.db[k][j] - fd));
      scale = std::max(scale, std::abs(fd));
    }
    EXPECT_LE(worst / scale, 1e-4) << "layer " << k;
  }
}

TEST(Gradients, DeterministicAcrossReruns) {
  const auto net = nn::make_policy_network<double>(env::kObsDim, 8, env::kActionCount, 2, true, 13);
  const auto a = random_batch(net, 4, 3);
  const auto b = random_batch(net, 4, 3);
  const auto ga = train::policy_gradients(net, a.episodes, a.adv);
  const auto gb = train::policy_gradients(net, b.episodes, b.adv);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(ga.dw[k], gb.dw[k]);
    EXPECT_EQ(ga.d_ig[k], gb.d_ig[k]);
    EXPECT_EQ(ga.d_og[k], gb.d_og[k]);
  }
}

TEST(Gradients, NonFiniteRejected) {
  const auto net = nn::make_policy_network<double>(env::kObsDim, 4, env::kActionCount, 1, false, 1);
  auto g = nn::Gradients<double>::zeros_like(net);
  g.dw_eff[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nn::finalize(net, g), NumericError);
}

TEST(TrainConfig, Validation) {
  train::TrainConfig c;
  c.groups = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.gamma = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainLoop, DeterministicAndMasksMove) {
  train::TrainConfig c;
  c.groups = 2;
  c.iterations = 60;
  const auto a = train::train_loop(c);
  const auto b = train::train_loop(c);
  ASSERT_EQ(a.rows.size(), 60u);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_EQ(a.rows[i].success_rate, b.rows[i].success_rate);
    EXPECT_EQ(a.rows[i].density, b.rows[i].density);
    changed += a.rows[i].mask_bits_changed;
  }
  EXPECT_GT(changed, 0u);
  EXPECT_EQ(a.rows[0].mask_bits_changed, 0u);
}

TEST(TrainLoop, TimelineCsv) {
  train::Timeline tl;
  tl.rows.push_back({0, 50.0, 0.5, 0.25, 0});
  std::ostringstream s;
  train::write_timeline_csv(s, tl);
  EXPECT_EQ(s.str(), "iteration,success_rate,mean_reward,density\n0,50.0000,0.500000,0.250000\n");
  EXPECT_DOUBLE_EQ(tl.final_success(30), 50.0);
}

TEST(RandomPolicy, WellBelowCertainty) {
  const double s = train::random_policy_success({}, 2000, 9);
  EXPECT_GT(s, 5.0);
  EXPECT_LT(s, 60.0);
}
