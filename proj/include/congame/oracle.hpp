// Copyright 2026 The congame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <vector>

#include "congame/game.hpp"
#include "congame/policy.hpp"

namespace congame {

// Ground-truth equilibrium oracle over the true mean tables. Everything here
// enumerates exhaustively and is intended for desk-scale games.

inline constexpr double kNashTolerance = 1e-12;

using ValueProfile = std::vector<double>;

/// V_i^pi for every player, exactly, by enumerating the support of pi.
inline ValueProfile policy_value(const CongestionGame& game,
                                 const ProductPolicy& pi,
                                 std::uint64_t cap = kDefaultEnumerationCap) {
  ValueProfile v(game.num_players(), 0.0);
  for_each_support(
      game, pi,
      [&](const ActionProfile& p, double prob) {
        const auto r = mean_rewards(game, game.joint_action(p));
        for (int i = 0; i < game.num_players(); ++i) v[i] += prob * r[i];
      },
      -1, cap);
  return v;
}

// Expected rewards under an explicit (possibly correlated) distribution.
inline ValueProfile policy_value(const CongestionGame& game,
                                 const ExplorationPolicy& rho) {
  ValueProfile v(game.num_players(), 0.0);
  for (const auto& [a, prob] : rho.support()) {
    const auto r = mean_rewards(game, a);
    for (int i = 0; i < game.num_players(); ++i) v[i] += prob * r[i];
  }
  return v;
}

struct BestResponse {
  double value = 0.0;
  std::size_t action = 0;  // index into the player's action space
};

/// max over a_i' of E_{a_-i ~ pi_-i} r_i(a_i', a_-i); the lowest action index
/// wins ties. Player i's own entry of pi is ignored.
inline BestResponse best_response_value(
    const CongestionGame& game, const ProductPolicy& pi, int i,
    std::uint64_t cap = kDefaultEnumerationCap) {
  if (i < 0 || i >= game.num_players())
    throw InputError("player index out of range");
  const auto actions = game.actions(i);
  std::vector<double> values(actions.size(), 0.0);
  for_each_support(
      game, pi,
      [&](const ActionProfile& p, double prob) {
        JointAction a = game.joint_action(p);
        for (std::size_t k = 0; k < actions.size(); ++k) {
          a[i] = actions[k];
          values[k] += prob *
                       detail::player_reward_with_loads(
                           game, a, i, facility_loads(game, a));
        }
      },
      i, cap);
  BestResponse best{values[0], 0};
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > best.value) best = {values[k], k};
  return best;
}

/// Gap(pi) = max_i [V_i^{dagger, pi_-i} - V_i^pi].
inline double gap(const CongestionGame& game, const ProductPolicy& pi,
                  std::uint64_t cap = kDefaultEnumerationCap) {
  const auto v = policy_value(game, pi, cap);
  double g = 0.0;
  for (int i = 0; i < game.num_players(); ++i)
    g = std::max(g, best_response_value(game, pi, i, cap).value - v[i]);
  return g;
}

// Gap of a pure joint action without building a policy.
inline double pure_gap(const CongestionGame& game, const JointAction& a) {
  const auto base = mean_rewards(game, a);
  double g = 0.0;
  JointAction dev = a;
  for (int i = 0; i < game.num_players(); ++i) {
    for (const auto& alt : game.actions(i)) {
      dev[i] = alt;
      g = std::max(g, detail::player_reward_with_loads(
                          game, dev, i, facility_loads(game, dev)) -
                          base[i]);
    }
    dev[i] = a[i];
  }
  return g;
}

inline bool is_pure_ne(const CongestionGame& game, const JointAction& a) {
  return pure_gap(game, a) <= kNashTolerance;
}

/// All pure Nash equilibria, in lexicographic profile order.
inline std::vector<JointAction> enumerate_pure_ne(
    const CongestionGame& game, std::uint64_t cap = kDefaultEnumerationCap) {
  std::vector<JointAction> out;
  for_each_joint_action(
      game,
      [&](std::uint64_t, const ActionProfile&, const JointAction& a) {
        if (is_pure_ne(game, a)) out.push_back(a);
      },
      cap);
  return out;
}

}  // namespace congame
