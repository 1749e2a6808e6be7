// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// REINFORCE training of the shared masked policy on the toy predator-prey
// task. Each iteration regenerates every layer mask from its grouping
// matrices, rolls out B episodes, and takes one RMSprop step on weights,
// biases, IG and OG. The advantage is the discounted return minus a scalar
// moving-average baseline; all agents share the team return.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "lgroup/env.hpp"
#include "lgroup/error.hpp"
#include "lgroup/nn.hpp"

namespace lgroup::train {

struct TrainConfig {
  std::size_t agents = 2;
  std::size_t grid = 5;
  std::size_t horizon = 8;
  std::size_t batch = 16;  // B episodes per update
  std::size_t iterations = 300;
  std::size_t groups = 1;
  std::size_t hidden = 32;
  bool comm = true;
  std::uint64_t seed = 1;
  double gamma = 0.95;
  double baseline_momentum = 0.9;
  nn::RMSpropConfig rmsprop;

  void validate() const {
    if (batch == 0) throw ConfigError("TrainConfig: batch must be >= 1");
    if (agents == 0) throw ConfigError("TrainConfig: agents must be >= 1");
    if (groups == 0 || groups > std::min(env::kActionCount, env::kObsDim))
      throw ConfigError("TrainConfig: groups must be in [1, 4] for the policy network shape");
    if (hidden < groups) throw ConfigError("TrainConfig: hidden must be >= groups");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("TrainConfig: gamma must be in (0, 1]");
  }
};

template <std::floating_point T>
struct Episode {
  std::vector<Matrix<T>> obs;                    // per step, A x obs_dim
  std::vector<std::vector<std::size_t>> actions;  // per step, per agent
  std::vector<double> rewards;
  bool caught = false;

  double total_reward() const {
    double s = 0;
    for (double r : rewards) s += r;
    return s;
  }
};

template <typename Rng, std::floating_point T>
std::size_t sample(std::span<const T> probs, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double acc = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += static_cast<double>(probs[k]);
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

template <std::floating_point T, typename Rng>
Episode<T> rollout(const nn::MaskedNetwork<T>& net, env::ToyEnv& e, Rng& rng) {
  Episode<T> ep;
  e.reset(rng);
  for (;;) {
    auto obs = e.observe<T>();
    const auto cache = nn::forward(net, obs);
    std::vector<std::size_t> acts(e.agents());
    for (std::size_t a = 0; a < e.agents(); ++a) acts[a] = sample<Rng, T>(cache.probs.row(a), rng);
    const auto r = e.step(acts);
    ep.obs.push_back(std::move(obs));
    ep.actions.push_back(std::move(acts));
    ep.rewards.push_back(r.reward);
    if (r.done) {
      ep.caught = r.caught;
      return ep;
    }
  }
}

inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

// L = -(1/B) sum_episodes sum_t sum_agents adv[e][t] * log pi(a | obs).
template <std::floating_point T>
double policy_loss(const nn::MaskedNetwork<T>& net, const std::vector<Episode<T>>& episodes,
                   const std::vector<std::vector<double>>& advantages) {
  double loss = 0;
  for (std::size_t e = 0; e < episodes.size(); ++e)
    for (std::size_t t = 0; t < episodes[e].obs.size(); ++t) {
      const auto c = nn::forward(net, episodes[e].obs[t]);
      for (std::size_t a = 0; a < c.probs.rows(); ++a)
        loss -= advantages[e][t] * std::log(static_cast<double>(c.probs(a, episodes[e].actions[t][a])));
    }
  return loss / static_cast<double>(episodes.size());
}

template <std::floating_point T>
nn::ParamGradients<T> policy_gradients(const nn::MaskedNetwork<T>& net, const std::vector<Episode<T>>& episodes,
                                       const std::vector<std::vector<double>>& advantages) {
  lgroup::detail::require_dims(advantages.size() == episodes.size(), "policy_gradients: advantages/episodes mismatch");
  auto g = nn::Gradients<T>::zeros_like(net);
  const double scale = 1.0 / static_cast<double>(episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    lgroup::detail::require_dims(advantages[e].size() == episodes[e].obs.size(), "policy_gradients: advantage length");
    for (std::size_t t = 0; t < episodes[e].obs.size(); ++t) {
      const double adv = advantages[e][t];
      if (adv == 0.0) continue;
      const auto c = nn::forward(net, episodes[e].obs[t]);
      Matrix<T> dlogits = c.probs;
      for (std::size_t a = 0; a < dlogits.rows(); ++a) {
        dlogits(a, episodes[e].actions[t][a]) -= T(1);
        for (T& v : dlogits.row(a)) v = static_cast<T>(static_cast<double>(v) * adv * scale);
      }
      nn::backward_step(net, c, dlogits, g);
    }
  }
  return nn::finalize(net, g);
}

struct IterationMetrics {
  std::size_t iteration = 0;
  double success_rate = 0;  // percent of the B episodes that caught the prey
  double mean_reward = 0;
  double density = 0;
  std::size_t mask_bits_changed = 0;  // vs. the previous iteration, all layers
};

struct Timeline {
  std::vector<IterationMetrics> rows;

  double final_success(std::size_t window) const {
    if (rows.empty()) return 0;
    window = std::min(window, rows.size());
    double s = 0;
    for (std::size_t i = rows.size() - window; i < rows.size(); ++i) s += rows[i].success_rate;
    return s / static_cast<double>(window);
  }
};

namespace detail {

template <std::floating_point T>
std::size_t mask_delta(const nn::MaskedNetwork<T>& net, const std::vector<flgw::MaskMatrix>& prev) {
  if (prev.size() != net.layers.size()) return 0;
  std::size_t changed = 0;
  for (std::size_t k = 0; k < prev.size(); ++k)
    for (std::size_t i = 0; i < prev[k].rows(); ++i)
      for (std::size_t j = 0; j < prev[k].cols(); ++j) changed += prev[k].at(i, j) != net.layers[k].mask.at(i, j);
  return changed;
}

}  // namespace detail

template <std::floating_point T = float>
Timeline train_loop(const TrainConfig& cfg) {
  cfg.validate();
  Timeline tl;
  if (cfg.iterations == 0) return tl;
  auto net = nn::make_policy_network<T>(env::kObsDim, cfg.hidden, env::kActionCount, cfg.groups, cfg.comm, cfg.seed);
  env::ToyEnv e(cfg.grid, cfg.agents, cfg.horizon);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  nn::RMSpropState opt;
  double baseline = 0;
  bool baseline_init = false;
  std::vector<flgw::MaskMatrix> prev;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    net.refresh_masks();
    IterationMetrics m;
    m.iteration = it;
    m.density = net.density();
    m.mask_bits_changed = detail::mask_delta(net, prev);
    prev.clear();
    for (const auto& l : net.layers) prev.push_back(l.mask);

    std::vector<Episode<T>> eps;
    eps.reserve(cfg.batch);
    std::vector<std::vector<double>> rets;
    double ret_sum = 0;
    std::size_t ret_count = 0, caught = 0;
    double reward_sum = 0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      eps.push_back(rollout(net, e, rng));
      rets.push_back(discounted_returns(eps.back().rewards, cfg.gamma));
      for (double r : rets.back()) ret_sum += r;
      ret_count += rets.back().size();
      caught += eps.back().caught ? 1 : 0;
      reward_sum += eps.back().total_reward();
    }
    const double batch_mean = ret_sum / static_cast<double>(ret_count);
    if (!baseline_init) {
      baseline = batch_mean;
      baseline_init = true;
    }
    for (auto& r : rets)
      for (double& v : r) v -= baseline;
    baseline = cfg.baseline_momentum * baseline + (1.0 - cfg.baseline_momentum) * batch_mean;

    const auto grads = policy_gradients(net, eps, rets);
    nn::apply_rmsprop(net, grads, opt, cfg.rmsprop);

    m.success_rate = 100.0 * static_cast<double>(caught) / static_cast<double>(cfg.batch);
    m.mean_reward = reward_sum / static_cast<double>(cfg.batch);
    tl.rows.push_back(m);
  }
  return tl;
}

// Success rate (percent) of uniformly random moves on the same task.
inline double random_policy_success(const TrainConfig& cfg, std::size_t episodes, std::uint64_t seed) {
  env::ToyEnv e(cfg.grid, cfg.agents, cfg.horizon);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> act(0, env::kActionCount - 1);
  std::size_t caught = 0;
  std::vector<std::size_t> acts(cfg.agents);
  for (std::size_t k = 0; k < episodes; ++k) {
    e.reset(rng);
    for (;;) {
      for (auto& a : acts) a = act(rng);
      const auto r = e.step(acts);
      if (r.done) {
        caught += r.caught ? 1 : 0;
        break;
      }
    }
  }
  return episodes == 0 ? 0.0 : 100.0 * static_cast<double>(caught) / static_cast<double>(episodes);
}

// CSV "iteration,success_rate,mean_reward,density".
inline void write_timeline_csv(std::ostream& os, const Timeline& tl) {
  os << "iteration,success_rate,mean_reward,density\n";
  for (const auto& r : tl.rows)
    os << fmt::format("{},{:.4f},{:.6f},{:.6f}\n", r.iteration, r.success_rate, r.mean_reward, r.density);
}

}  // namespace lgroup::train
