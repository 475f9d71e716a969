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
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "congame/estimators.hpp"
#include "congame/game.hpp"
#include "congame/oracle.hpp"
#include "congame/policy.hpp"

namespace congame {

struct ValueInterval {
  double optimistic = 0.0;   // E[rhat + b]
  double pessimistic = 0.0;  // E[rhat - b]
};

struct OptimisticResponse {
  double value = 0.0;
  std::size_t action = 0;
};

struct PlayerInterval {
  double optimistic_best_response = 0.0;
  double pessimistic_value = 0.0;
};

/// Output of surrogate minimization over deterministic product policies.
struct SurrogateCertificate {
  JointAction policy;
  ActionProfile profile;
  // max_i [optimistic best response - pessimistic value] at `policy`.
  double surrogate_gap = 0.0;
  std::vector<PlayerInterval> per_player;
};

struct SolverOptions {
  unsigned workers = 1;
  std::uint64_t cap = kDefaultEnumerationCap;
};

inline void check_compatible(const EstimatorState& est,
                             const CongestionGame& game) {
  if (est.players() != game.num_players() ||
      est.facilities() != game.num_facilities())
    throw InputError("estimator was fitted for a different game shape");
}

inline std::vector<ValueInterval> optimistic_pessimistic_values(
    const EstimatorState& est, const CongestionGame& game,
    const ProductPolicy& pi, std::uint64_t cap = kDefaultEnumerationCap) {
  check_compatible(est, game);
  std::vector<ValueInterval> out(game.num_players());
  for_each_support(
      game, pi,
      [&](const ActionProfile& p, double prob) {
        const auto e = est.evaluate_all(game.joint_action(p));
        for (int i = 0; i < game.num_players(); ++i) {
          out[i].optimistic += prob * (e[i].reward + e[i].bonus);
          out[i].pessimistic += prob * (e[i].reward - e[i].bonus);
        }
      },
      -1, cap);
  return out;
}

/// max over pure a_i' of E_{pi_-i}[rhat_i + b_i]; lowest index wins ties.
inline OptimisticResponse optimistic_best_response(
    const EstimatorState& est, const CongestionGame& game,
    const ProductPolicy& pi, int i, std::uint64_t cap = kDefaultEnumerationCap) {
  check_compatible(est, game);
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
          const auto e = est.evaluate(a, i);
          values[k] += prob * (e.reward + e.bonus);
        }
      },
      i, cap);
  OptimisticResponse best{values[0], 0};
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > best.value) best = {values[k], k};
  return best;
}

namespace detail {

// rhat and b for every (joint action, player), indexed [rank * m + i].
inline std::vector<RewardEstimate> estimate_table(const EstimatorState& est,
                                                  const CongestionGame& game,
                                                  unsigned workers) {
  const std::uint64_t total = game.joint_action_count();
  const int m = game.num_players();
  std::vector<RewardEstimate> table(total * m);
  auto fill = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t idx = lo; idx < hi; ++idx) {
      const auto e = est.evaluate_all(game.joint_action(profile_unrank(game, idx)));
      std::copy(e.begin(), e.end(), table.begin() + idx * m);
    }
  };
  if (workers <= 1 || total < 1024) {
    fill(0, total);
    return table;
  }
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (total + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = std::min<std::uint64_t>(total, w * chunk);
    const std::uint64_t hi = std::min<std::uint64_t>(total, lo + chunk);
    pool.emplace_back(fill, lo, hi);
  }
  for (auto& t : pool) t.join();
  return table;
}

struct Candidate {
  double gap = std::numeric_limits<double>::infinity();
  std::uint64_t rank = std::numeric_limits<std::uint64_t>::max();

  // Smaller gap first, then lexicographically smaller joint action.
  bool better_than(const Candidate& o) const {
    return gap < o.gap || (gap == o.gap && rank < o.rank);
  }
};

}  // namespace detail

/// Minimizes max_i [Vbar_i^{dagger, pi_-i} - Vunder_i^pi] over all joint
/// actions. Candidates may be split across workers; the reduction keeps the
/// smallest gap and, among equal gaps, the lowest joint-action rank, so the
/// result does not depend on the worker count.
inline SurrogateCertificate surrogate_minimize(const EstimatorState& est,
                                               const CongestionGame& game,
                                               const SolverOptions& opts = {}) {
  check_compatible(est, game);
  const std::uint64_t total = game.joint_action_count();
  require_enumerable(total, opts.cap, "surrogate minimization");
  const int m = game.num_players();
  const auto table = detail::estimate_table(est, game, opts.workers);

  // Stride of player i's digit in the mixed-radix rank.
  std::vector<std::uint64_t> stride(m, 1);
  for (int i = m - 2; i >= 0; --i) stride[i] = stride[i + 1] * game.actions(i + 1).size();

  auto player_terms = [&](std::uint64_t rank, const ActionProfile& p, int i) {
    const auto& here = table[rank * m + i];
    const std::uint64_t base = rank - p[i] * stride[i];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < game.actions(i).size(); ++k) {
      const auto& e = table[(base + k * stride[i]) * m + i];
      best = std::max(best, e.reward + e.bonus);
    }
    return PlayerInterval{best, here.reward - here.bonus};
  };

  auto scan = [&](std::uint64_t lo, std::uint64_t hi) {
    detail::Candidate best;
    for (std::uint64_t rank = lo; rank < hi; ++rank) {
      const auto p = profile_unrank(game, rank);
      double g = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const auto t = player_terms(rank, p, i);
        g = std::max(g, t.optimistic_best_response - t.pessimistic_value);
        // Ranks ascend within a chunk, so ties cannot win either.
        if (g >= best.gap) break;
      }
      detail::Candidate c{g, rank};
      if (c.better_than(best)) best = c;
    }
    return best;
  };

  detail::Candidate best;
  if (opts.workers <= 1 || total < 1024) {
    best = scan(0, total);
  } else {
    std::vector<detail::Candidate> partial(opts.workers);
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (total + opts.workers - 1) / opts.workers;
    for (unsigned w = 0; w < opts.workers; ++w) {
      const std::uint64_t lo = std::min<std::uint64_t>(total, w * chunk);
      const std::uint64_t hi = std::min<std::uint64_t>(total, lo + chunk);
      pool.emplace_back([&, w, lo, hi] { partial[w] = scan(lo, hi); });
    }
    for (auto& t : pool) t.join();
    for (const auto& c : partial)
      if (c.better_than(best)) best = c;
  }

  SurrogateCertificate cert;
  cert.profile = profile_unrank(game, best.rank);
  cert.policy = game.joint_action(cert.profile);
  cert.surrogate_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    cert.per_player.push_back(player_terms(best.rank, cert.profile, i));
    cert.surrogate_gap =
        std::max(cert.surrogate_gap, cert.per_player.back().optimistic_best_response -
                                         cert.per_player.back().pessimistic_value);
  }
  return cert;
}

/// Right-hand side of the deviation-bonus gap bound for a pure equilibrium a*:
/// 2 max_i [max_{a_i'} b_i(a_i', a*_-i) + b_i(a*)].
inline double deviation_bonus_bound(const EstimatorState& est,
                                    const CongestionGame& game,
                                    const JointAction& ne) {
  check_compatible(est, game);
  game.validate(ne);
  double worst = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const double at_ne = est.evaluate(ne, i).bonus;
    double dev = 0.0;
    JointAction a = ne;
    for (const auto& alt : game.actions(i)) {
      a[i] = alt;
      dev = std::max(dev, est.evaluate(a, i).bonus);
    }
    worst = std::max(worst, dev + at_ne);
  }
  return 2.0 * worst;
}

}  // namespace congame
