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

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "congame/error.hpp"
#include "congame/game.hpp"

namespace congame {

inline constexpr double kProbabilityTolerance = 1e-12;

/// Product policy: one distribution over action indices per player.
class ProductPolicy {
 public:
  ProductPolicy(const CongestionGame& game,
                std::vector<std::vector<double>> weights)
      : weights_(std::move(weights)) {
    if (static_cast<int>(weights_.size()) != game.num_players())
      throw InputError("policy needs one distribution per player");
    for (int i = 0; i < game.num_players(); ++i) {
      const auto& w = weights_[i];
      if (w.size() != game.actions(i).size())
        throw InputError("player " + std::to_string(i) +
                         " distribution has wrong length");
      double total = 0.0;
      for (double p : w) {
        if (!(p >= 0.0)) throw InputError("negative policy weight");
        total += p;
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance)
        throw InputError("player " + std::to_string(i) +
                         " weights do not sum to 1");
    }
  }

  static ProductPolicy pure(const CongestionGame& game,
                            const ActionProfile& profile) {
    std::vector<std::vector<double>> w(game.num_players());
    for (int i = 0; i < game.num_players(); ++i) {
      w[i].assign(game.actions(i).size(), 0.0);
      w[i].at(profile.at(i)) = 1.0;
    }
    return ProductPolicy(game, std::move(w));
  }

  static ProductPolicy pure(const CongestionGame& game, const JointAction& a) {
    return pure(game, game.profile_of(a));
  }

  static ProductPolicy uniform(const CongestionGame& game) {
    std::vector<std::vector<double>> w(game.num_players());
    for (int i = 0; i < game.num_players(); ++i) {
      const auto k = game.actions(i).size();
      w[i].assign(k, 1.0 / static_cast<double>(k));
    }
    return ProductPolicy(game, std::move(w));
  }

  int num_players() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& player(int i) const { return weights_.at(i); }

  // Same policy with player i replaced by the pure action `action`.
  ProductPolicy deviate(const CongestionGame& game, int i,
                        std::size_t action) const {
    auto w = weights_;
    w.at(i).assign(game.actions(i).size(), 0.0);
    w[i].at(action) = 1.0;
    return ProductPolicy(game, std::move(w));
  }

  bool is_pure() const {
    for (const auto& w : weights_) {
      int nonzero = 0;
      for (double p : w) nonzero += p > 0.0 ? 1 : 0;
      if (nonzero != 1) return false;
    }
    return true;
  }

  // Requires is_pure().
  ActionProfile pure_profile() const {
    if (!is_pure()) throw InputError("policy is not pure");
    ActionProfile p;
    for (const auto& w : weights_)
      for (std::size_t k = 0; k < w.size(); ++k)
        if (w[k] > 0.0) p.push_back(k);
    return p;
  }

  std::uint64_t support_size() const {
    std::uint64_t total = 1;
    for (const auto& w : weights_) {
      std::uint64_t k = 0;
      for (double p : w) k += p > 0.0 ? 1 : 0;
      total *= k;
    }
    return total;
  }

  friend bool operator==(const ProductPolicy&, const ProductPolicy&) = default;

 private:
  std::vector<std::vector<double>> weights_;
};

/// Visits the support of a product policy, skipping player `skip` (its slot
/// holds action 0) when skip >= 0. fn(profile, probability).
template <typename Fn>
void for_each_support(const CongestionGame& game, const ProductPolicy& pi,
                      Fn&& fn, int skip = -1,
                      std::uint64_t cap = kDefaultEnumerationCap) {
  const int m = game.num_players();
  std::vector<std::vector<std::size_t>> supp(m);
  std::uint64_t total = 1;
  for (int i = 0; i < m; ++i) {
    if (i == skip) {
      supp[i] = {0};
      continue;
    }
    const auto& w = pi.player(i);
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k] > 0.0) supp[i].push_back(k);
    total *= supp[i].size();
    require_enumerable(total, cap, "policy support");
  }
  std::vector<std::size_t> pos(m, 0);
  ActionProfile profile(m);
  for (std::uint64_t n = 0; n < total; ++n) {
    double prob = 1.0;
    for (int i = 0; i < m; ++i) {
      profile[i] = supp[i][pos[i]];
      if (i != skip) prob *= pi.player(i)[profile[i]];
    }
    fn(static_cast<const ActionProfile&>(profile), prob);
    for (int i = m - 1; i >= 0; --i) {
      if (++pos[i] < supp[i].size()) break;
      pos[i] = 0;
    }
  }
}

/// Explicitly supported distribution over joint actions, e.g. the policy that
/// generated an offline dataset.
class ExplorationPolicy {
 public:
  using Entry = std::pair<JointAction, double>;

  ExplorationPolicy() = default;

  ExplorationPolicy(const CongestionGame& game, std::vector<Entry> support)
      : support_(std::move(support)) {
    if (support_.empty()) throw InputError("exploration policy is empty");
    double total = 0.0;
    for (const auto& [a, p] : support_) {
      game.validate(a);
      if (!(p > 0.0))
        throw InputError("exploration probabilities must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw InputError("exploration probabilities do not sum to 1");
  }

  // Expands a product policy into explicit support.
  static ExplorationPolicy from_product(
      const CongestionGame& game, const ProductPolicy& pi,
      std::uint64_t cap = kDefaultEnumerationCap) {
    std::vector<Entry> support;
    for_each_support(
        game, pi,
        [&](const ActionProfile& p, double prob) {
          support.emplace_back(game.joint_action(p), prob);
        },
        -1, cap);
    return ExplorationPolicy(game, std::move(support));
  }

  // Uniform over the given distinct joint actions.
  static ExplorationPolicy uniform(const CongestionGame& game,
                                   std::vector<JointAction> actions) {
    std::vector<Entry> support;
    const double p = 1.0 / static_cast<double>(actions.size());
    for (auto& a : actions) support.emplace_back(std::move(a), p);
    return ExplorationPolicy(game, std::move(support));
  }

  const std::vector<Entry>& support() const { return support_; }
  std::size_t size() const { return support_.size(); }

  double probability(const JointAction& a) const {
    double p = 0.0;
    for (const auto& [b, q] : support_)
      if (b == a) p += q;
    return p;
  }

 private:
  std::vector<Entry> support_;
};

}  // namespace congame
