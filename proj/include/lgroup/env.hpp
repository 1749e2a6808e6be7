// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Cooperative predator-prey on a small grid: A agents look for one
// stationary prey. Every agent sees its own position and the offset to the
// prey, both scaled to [-1, 1]. An episode ends when an agent lands on the
// prey (reward = number of agents on the prey cell) or at the horizon.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lgroup/error.hpp"
#include "lgroup/matrix.hpp"

namespace lgroup::env {

enum class Move : std::uint8_t { kUp, kDown, kLeft, kRight, kStay };
inline constexpr std::size_t kActionCount = 5;
inline constexpr std::size_t kObsDim = 4;

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct StepResult {
  double reward = 0;
  bool caught = false;
  bool done = false;
};

class ToyEnv {
 public:
  ToyEnv(std::size_t grid = 5, std::size_t agents = 2, std::size_t horizon = 8)
      : grid_(static_cast<int>(grid)), agents_(agents), horizon_(horizon) {
    if (grid < 2) throw ConfigError("ToyEnv: grid must be >= 2");
    if (agents == 0) throw ConfigError("ToyEnv: need at least one agent");
    if (horizon == 0) throw ConfigError("ToyEnv: horizon must be >= 1");
  }

  std::size_t agents() const noexcept { return agents_; }
  std::size_t horizon() const noexcept { return horizon_; }
  int grid() const noexcept { return grid_; }
  const std::vector<Cell>& positions() const noexcept { return pos_; }
  Cell prey() const noexcept { return prey_; }
  std::size_t t() const noexcept { return t_; }

  template <typename Rng>
  void reset(Rng& rng) {
    std::uniform_int_distribution<int> coord(0, grid_ - 1);
    prey_ = {coord(rng), coord(rng)};
    pos_.assign(agents_, {});
    for (auto& p : pos_) {
      do {
        p = {coord(rng), coord(rng)};
      } while (p == prey_);
    }
    t_ = 0;
  }

  // Places agents and prey explicitly (tests).
  void reset(std::vector<Cell> agents, Cell prey) {
    if (agents.size() != agents_) throw DimensionError("ToyEnv::reset: agent count mismatch");
    pos_ = std::move(agents);
    prey_ = prey;
    t_ = 0;
  }

  template <typename T>
  Matrix<T> observe() const {
    const T scale = static_cast<T>(grid_ - 1);
    Matrix<T> obs(agents_, kObsDim);
    for (std::size_t a = 0; a < agents_; ++a) {
      obs(a, 0) = static_cast<T>(pos_[a].x) / scale;
      obs(a, 1) = static_cast<T>(pos_[a].y) / scale;
      obs(a, 2) = static_cast<T>(prey_.x - pos_[a].x) / scale;
      obs(a, 3) = static_cast<T>(prey_.y - pos_[a].y) / scale;
    }
    return obs;
  }

  StepResult step(std::span<const std::size_t> actions) {
    if (actions.size() != agents_) throw DimensionError("ToyEnv::step: action count mismatch");
    StepResult r;
    for (std::size_t a = 0; a < agents_; ++a) {
      if (actions[a] >= kActionCount) throw ContractError("ToyEnv::step: invalid action");
      Cell& p = pos_[a];
      switch (static_cast<Move>(actions[a])) {
        case Move::kUp: p.y = std::max(0, p.y - 1); break;
        case Move::kDown: p.y = std::min(grid_ - 1, p.y + 1); break;
        case Move::kLeft: p.x = std::max(0, p.x - 1); break;
        case Move::kRight: p.x = std::min(grid_ - 1, p.x + 1); break;
        case Move::kStay: break;
      }
      if (p == prey_) r.reward += 1.0;
    }
    ++t_;
    r.caught = r.reward > 0;
    r.done = r.caught || t_ >= horizon_;
    return r;
  }

 private:
  int grid_;
  std::size_t agents_;
  std::size_t horizon_;
  std::vector<Cell> pos_;
  Cell prey_;
  std::size_t t_ = 0;
};

}  // namespace lgroup::env
