// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Small dense policy network whose layers are pruned by FLGW masks.
//
// Layout used by the trainer (comm enabled):
//   h1 = tanh(obs * W0 + b0)                     per agent
//   h2 = tanh([h1, mean_agents(h1)] * W1 + b1)   communication mixes the mean
//   logits = h2 * W2 + b2,  policy = softmax(logits)
//
// Every weight matrix is used as W ⊙ mask. Stored weights keep their values
// while masked; their gradient is zero because dL/dW = dL/dW_eff ⊙ mask.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lgroup/error.hpp"
#include "lgroup/flgw.hpp"
#include "lgroup/matrix.hpp"

namespace lgroup::nn {

enum class Activation { kTanh, kRelu, kIdentity };

template <std::floating_point T>
T activate(Activation a, T v) {
  switch (a) {
    case Activation::kTanh: return std::tanh(v);
    case Activation::kRelu: return v > T(0) ? v : T(0);
    case Activation::kIdentity: return v;
  }
  return v;
}

// Derivative expressed through the pre-activation value.
template <std::floating_point T>
T activate_grad(Activation a, T pre) {
  switch (a) {
    case Activation::kTanh: {
      const T t = std::tanh(pre);
      return T(1) - t * t;
    }
    case Activation::kRelu: return pre > T(0) ? T(1) : T(0);
    case Activation::kIdentity: return T(1);
  }
  return T(1);
}

template <std::floating_point T>
struct MaskedLayer {
  Matrix<T> w;  // in x out
  std::vector<T> bias;
  flgw::GroupingPair grouping;
  Activation activation = Activation::kTanh;
  flgw::MaskMatrix mask;

  std::size_t in() const noexcept { return w.rows(); }
  std::size_t out() const noexcept { return w.cols(); }

  void refresh_mask() { mask = flgw::mask_from_grouping(grouping); }
  Matrix<T> effective() const { return flgw::apply_mask(w, mask); }
};

template <std::floating_point T>
struct MaskedNetwork {
  std::vector<MaskedLayer<T>> layers;
  bool comm = true;  // mean-pool mixing between layer 0 and layer 1

  std::size_t groups() const noexcept { return layers.empty() ? 0 : layers.front().grouping.g(); }

  void refresh_masks() {
    for (auto& l : layers) l.refresh_mask();
  }

  double density() const {
    std::size_t on = 0, total = 0;
    for (const auto& l : layers) {
      on += l.mask.popcount();
      total += l.in() * l.out();
    }
    return total == 0 ? 0.0 : static_cast<double>(on) / static_cast<double>(total);
  }
};

// Weights and biases uniform on +-1/sqrt(in); grouping matrices as in init_grouping.
template <std::floating_point T>
MaskedLayer<T> make_layer(std::size_t in, std::size_t out, std::size_t g, Activation act, std::mt19937_64& rng) {
  const T bound = T(1) / std::sqrt(static_cast<T>(in));
  std::uniform_real_distribution<double> uni(-static_cast<double>(bound), static_cast<double>(bound));
  MaskedLayer<T> l;
  l.w = Matrix<T>(in, out);
  for (T& v : l.w.flat()) v = static_cast<T>(uni(rng));
  l.bias.resize(out);
  for (T& v : l.bias) v = static_cast<T>(uni(rng));
  l.grouping = flgw::init_grouping(in, out, g, rng());
  l.activation = act;
  l.refresh_mask();
  return l;
}

template <std::floating_point T>
MaskedNetwork<T> make_policy_network(std::size_t obs_dim, std::size_t hidden, std::size_t actions, std::size_t g,
                                     bool comm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MaskedNetwork<T> net;
  net.comm = comm;
  net.layers.push_back(make_layer<T>(obs_dim, hidden, g, Activation::kTanh, rng));
  net.layers.push_back(make_layer<T>(comm ? 2 * hidden : hidden, hidden, g, Activation::kTanh, rng));
  net.layers.push_back(make_layer<T>(hidden, actions, g, Activation::kIdentity, rng));
  return net;
}

// Activations of one forward pass over the A agents of a timestep.
template <std::floating_point T>
struct ForwardCache {
  std::vector<Matrix<T>> inputs;  // per layer, A x in
  std::vector<Matrix<T>> pre;     // per layer, A x out
  std::vector<Matrix<T>> eff;     // per layer effective weights
  Matrix<T> probs;                // A x actions
};

namespace detail {

template <std::floating_point T>
Matrix<T> affine(const Matrix<T>& in, const Matrix<T>& w, const std::vector<T>& b) {
  Matrix<T> out(in.rows(), w.cols());
  for (std::size_t a = 0; a < in.rows(); ++a)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      T acc = b[j];
      for (std::size_t i = 0; i < w.rows(); ++i) acc += in(a, i) * w(i, j);
      out(a, j) = acc;
    }
  return out;
}

template <std::floating_point T>
Matrix<T> with_mean(const Matrix<T>& h) {
  const std::size_t agents = h.rows(), width = h.cols();
  Matrix<T> out(agents, 2 * width);
  for (std::size_t j = 0; j < width; ++j) {
    T mean = 0;
    for (std::size_t a = 0; a < agents; ++a) mean += h(a, j);
    mean /= static_cast<T>(agents);
    for (std::size_t a = 0; a < agents; ++a) {
      out(a, j) = h(a, j);
      out(a, width + j) = mean;
    }
  }
  return out;
}

template <std::floating_point T>
void softmax_rows(Matrix<T>& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    T mx = row[0];
    for (T v : row) mx = std::max(mx, v);
    T sum = 0;
    for (T& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (T& v : row) v /= sum;
  }
}

}  // namespace detail

template <std::floating_point T>
ForwardCache<T> forward(const MaskedNetwork<T>& net, const Matrix<T>& obs) {
  if (net.layers.empty()) throw ConfigError("forward: empty network");
  lgroup::detail::require_dims(obs.cols() == net.layers.front().in(), "forward: observation width mismatch");
  ForwardCache<T> c;
  Matrix<T> x = obs;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& layer = net.layers[k];
    if (k == 1 && net.comm) x = detail::with_mean(x);
    lgroup::detail::require_dims(x.cols() == layer.in(), "forward: layer width mismatch");
    c.eff.push_back(layer.effective());
    c.inputs.push_back(x);
    Matrix<T> pre = detail::affine(x, c.eff.back(), layer.bias);
    x = pre;
    for (T& v : x.flat()) v = activate(layer.activation, v);
    c.pre.push_back(std::move(pre));
  }
  detail::softmax_rows(x);
  c.probs = std::move(x);
  return c;
}

template <std::floating_point T>
struct Gradients {
  std::vector<Matrix<T>> dw_eff;  // dL/d(W ⊙ mask)
  std::vector<std::vector<T>> db;

  static Gradients zeros_like(const MaskedNetwork<T>& net) {
    Gradients g;
    for (const auto& l : net.layers) {
      g.dw_eff.emplace_back(l.in(), l.out());
      g.db.emplace_back(l.out(), T(0));
    }
    return g;
  }
};

// Accumulates gradients of sum_a sum_j dlogits(a, j) * logits(a, j) into g.
template <std::floating_point T>
void backward_step(const MaskedNetwork<T>& net, const ForwardCache<T>& c, const Matrix<T>& dlogits, Gradients<T>& g) {
  Matrix<T> d = dlogits;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& layer = net.layers[k];
    const auto& pre = c.pre[k];
    for (std::size_t i = 0; i < d.size(); ++i) d.flat()[i] *= activate_grad(layer.activation, pre.flat()[i]);
    const auto& in = c.inputs[k];
    for (std::size_t a = 0; a < in.rows(); ++a)
      for (std::size_t j = 0; j < layer.out(); ++j) {
        const T dj = d(a, j);
        if (dj == T(0)) continue;
        g.db[k][j] += dj;
        for (std::size_t i = 0; i < layer.in(); ++i) g.dw_eff[k](i, j) += in(a, i) * dj;
      }
    if (k == 0) break;
    const auto& eff = c.eff[k];
    Matrix<T> din(in.rows(), layer.in());
    for (std::size_t a = 0; a < in.rows(); ++a)
      for (std::size_t i = 0; i < layer.in(); ++i) {
        T acc = 0;
        for (std::size_t j = 0; j < layer.out(); ++j) acc += d(a, j) * eff(i, j);
        din(a, i) = acc;
      }
    if (k == 1 && net.comm) {
      const std::size_t agents = din.rows(), width = din.cols() / 2;
      Matrix<T> dh(agents, width);
      for (std::size_t j = 0; j < width; ++j) {
        T dmean = 0;
        for (std::size_t a = 0; a < agents; ++a) dmean += din(a, width + j);
        dmean /= static_cast<T>(agents);
        for (std::size_t a = 0; a < agents; ++a) dh(a, j) = din(a, j) + dmean;
      }
      d = std::move(dh);
    } else {
      d = std::move(din);
    }
  }
}

// Parameter gradients after the mask and straight-through steps.
template <std::floating_point T>
struct ParamGradients {
  std::vector<Matrix<T>> dw;
  std::vector<std::vector<T>> db;
  std::vector<Matrix<double>> d_ig;
  std::vector<Matrix<double>> d_og;
};

template <std::floating_point T>
ParamGradients<T> finalize(const MaskedNetwork<T>& net, const Gradients<T>& g) {
  ParamGradients<T> out;
  out.db = g.db;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& layer = net.layers[k];
    out.dw.push_back(flgw::apply_mask(g.dw_eff[k], layer.mask));
    const auto dmask = flgw::mask_gradient(layer.w, g.dw_eff[k]);
    const auto is = flgw::build_input_selection(layer.grouping.ig());
    const auto os = flgw::build_output_selection(layer.grouping.og());
    auto gg = flgw::grouping_gradients(dmask, is, os);
    out.d_ig.push_back(std::move(gg.d_ig));
    out.d_og.push_back(std::move(gg.d_og));
  }
  auto check = [](auto span, const char* what) {
    for (auto v : span)
      if (!std::isfinite(static_cast<double>(v))) throw NumericError(std::string("backward: non-finite ") + what);
  };
  for (std::size_t k = 0; k < out.dw.size(); ++k) {
    check(out.dw[k].flat(), "weight gradient");
    check(std::span<const T>(out.db[k]), "bias gradient");
    check(out.d_ig[k].flat(), "IG gradient");
    check(out.d_og[k].flat(), "OG gradient");
  }
  return out;
}

struct RMSpropConfig {
  double lr = 0.001;
  double decay = 0.99;
  double eps = 1e-8;
};

// Per-parameter running mean of squared gradients.
struct RMSpropState {
  std::vector<std::vector<double>> sq;
};

// v = decay * v + (1 - decay) * g^2;  p -= lr * g / (sqrt(v) + eps)
template <typename P, typename G>
void rmsprop_step(std::span<P> params, std::span<const G> grads, std::vector<double>& sq, const RMSpropConfig& cfg) {
  lgroup::detail::require_dims(params.size() == grads.size(), "rmsprop_step: params/grads size mismatch");
  if (sq.empty()) sq.assign(params.size(), 0.0);
  lgroup::detail::require_dims(sq.size() == params.size(), "rmsprop_step: state size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    sq[i] = cfg.decay * sq[i] + (1.0 - cfg.decay) * g * g;
    params[i] = static_cast<P>(static_cast<double>(params[i]) - cfg.lr * g / (std::sqrt(sq[i]) + cfg.eps));
  }
}

// Updates weights, biases and both grouping matrices of every layer.
template <std::floating_point T>
void apply_rmsprop(MaskedNetwork<T>& net, const ParamGradients<T>& g, RMSpropState& state, const RMSpropConfig& cfg) {
  const std::size_t slots = net.layers.size() * 4;
  if (state.sq.size() != slots) state.sq.assign(slots, {});
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& layer = net.layers[k];
    rmsprop_step(layer.w.flat(), g.dw[k].flat(), state.sq[4 * k], cfg);
    rmsprop_step(std::span<T>(layer.bias), std::span<const T>(g.db[k]), state.sq[4 * k + 1], cfg);
    rmsprop_step(layer.grouping.ig_mut().flat(), g.d_ig[k].flat(), state.sq[4 * k + 2], cfg);
    rmsprop_step(layer.grouping.og_mut().flat(), g.d_og[k].flat(), state.sq[4 * k + 3], cfg);
    layer.grouping.check_finite();
  }
}

}  // namespace lgroup::nn
