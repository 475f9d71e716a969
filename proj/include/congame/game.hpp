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
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "congame/error.hpp"
#include "congame/rng.hpp"

namespace congame {

// Facilities are indexed 0..F-1; action sets are stored as bitmasks.
inline constexpr int kMaxFacilities = 63;

// Default limit on the number of joint actions any exhaustive routine visits.
inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// A player action: a subset of the facility set.
class ActionSet {
 public:
  ActionSet() = default;
  ActionSet(std::initializer_list<int> facilities) {
    for (int f : facilities) insert(f);
  }

  static ActionSet from_mask(std::uint64_t mask) {
    ActionSet a;
    a.mask_ = mask;
    return a;
  }

  static ActionSet from_facilities(std::span<const int> facilities) {
    ActionSet a;
    for (int f : facilities) {
      if (f < 0 || f >= kMaxFacilities)
        throw InputError("facility index out of range: " + std::to_string(f));
      if (a.contains(f))
        throw InputError("duplicate facility in action: " + std::to_string(f));
      a.insert(f);
    }
    return a;
  }

  bool contains(int f) const { return (mask_ >> f) & 1U; }
  void insert(int f) { mask_ |= std::uint64_t{1} << f; }
  void erase(int f) { mask_ &= ~(std::uint64_t{1} << f); }
  int size() const { return std::popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  std::uint64_t mask() const { return mask_; }

  // Highest facility index + 1, 0 for the empty set.
  int extent() const { return 64 - std::countl_zero(mask_); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) fn(std::countr_zero(m));
  }

  std::vector<int> facilities() const {
    std::vector<int> out;
    for_each([&](int f) { out.push_back(f); });
    return out;
  }

  // "{0,2}" / "{}"
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for_each([&](int f) {
      if (!first) s += ',';
      s += std::to_string(f);
      first = false;
    });
    return s + "}";
  }

  friend bool operator==(const ActionSet&, const ActionSet&) = default;
  friend auto operator<=>(const ActionSet&, const ActionSet&) = default;

 private:
  std::uint64_t mask_ = 0;
};

/// One action per player.
struct JointAction {
  std::vector<ActionSet> actions;

  std::size_t size() const { return actions.size(); }
  const ActionSet& operator[](std::size_t i) const { return actions[i]; }
  ActionSet& operator[](std::size_t i) { return actions[i]; }

  // Union of all players' facilities.
  ActionSet used_facilities() const {
    std::uint64_t m = 0;
    for (const auto& a : actions) m |= a.mask();
    return ActionSet::from_mask(m);
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (i) s += ',';
      s += actions[i].to_string();
    }
    return s + ")";
  }

  friend bool operator==(const JointAction&, const JointAction&) = default;
  friend auto operator<=>(const JointAction&, const JointAction&) = default;
};

// Per-player indices into the action spaces.
using ActionProfile = std::vector<std::size_t>;

struct NoiseSpec {
  enum class Kind { None, Bounded };
  Kind kind = Kind::None;
  // Half-width of the zero-mean uniform perturbation.
  double amplitude = 0.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec bounded(double amplitude) {
    return {Kind::Bounded, amplitude};
  }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Atomic congestion game with per-facility mean reward tables r^f(n),
/// n in [1, m], all in [-1, 1]. Immutable after construction.
class CongestionGame {
 public:
  // mean_rewards is indexed [f * m + (n - 1)]. noise may be empty (no noise)
  // or hold one spec per facility.
  CongestionGame(int players, int facilities,
                 std::vector<std::vector<ActionSet>> action_spaces,
                 std::vector<double> mean_rewards,
                 std::vector<NoiseSpec> noise = {})
      : m_(players),
        f_(facilities),
        action_spaces_(std::move(action_spaces)),
        means_(std::move(mean_rewards)),
        noise_(std::move(noise)) {
    if (m_ < 1) throw InputError("game needs at least one player");
    if (f_ < 1 || f_ > kMaxFacilities)
      throw InputError("facility count must be in [1, " +
                       std::to_string(kMaxFacilities) + "]");
    if (static_cast<int>(action_spaces_.size()) != m_)
      throw InputError("expected one action space per player");
    for (int i = 0; i < m_; ++i) {
      const auto& space = action_spaces_[i];
      if (space.empty())
        throw InputError("player " + std::to_string(i) +
                         " has an empty action space");
      auto sorted = space;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("player " + std::to_string(i) +
                         " has duplicate actions");
      for (const auto& a : space)
        if (a.extent() > f_)
          throw InputError("player " + std::to_string(i) +
                           " action " + a.to_string() +
                           " references an unknown facility");
    }
    if (means_.size() != static_cast<std::size_t>(m_) * f_)
      throw InputError("reward table must have F*m entries");
    for (double r : means_)
      if (!(r >= -1.0 && r <= 1.0))
        throw InputError("mean rewards must lie in [-1, 1]");
    if (noise_.empty()) noise_.assign(f_, NoiseSpec::none());
    if (static_cast<int>(noise_.size()) != f_)
      throw InputError("noise spec must be empty or per facility");
    for (const auto& n : noise_)
      if (n.kind == NoiseSpec::Kind::Bounded && !(n.amplitude >= 0.0))
        throw InputError("noise amplitude must be nonnegative");
  }

  // Every player may choose any subset of the facilities; actions are ordered
  // by bitmask, so {} < {0} < {1} < {0,1} < ...
  static CongestionGame with_full_action_spaces(
      int players, int facilities, std::vector<double> mean_rewards,
      std::vector<NoiseSpec> noise = {}) {
    if (facilities < 1 || facilities > 20)
      throw InputError("full action spaces need 1 <= F <= 20");
    std::vector<ActionSet> space;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << facilities);
         ++mask)
      space.push_back(ActionSet::from_mask(mask));
    return CongestionGame(players, facilities,
                          std::vector<std::vector<ActionSet>>(
                              static_cast<std::size_t>(players), space),
                          std::move(mean_rewards), std::move(noise));
  }

  int num_players() const { return m_; }
  int num_facilities() const { return f_; }

  std::span<const ActionSet> actions(int player) const {
    return action_spaces_.at(player);
  }
  const std::vector<std::vector<ActionSet>>& action_spaces() const {
    return action_spaces_;
  }
  std::span<const double> mean_table() const { return means_; }
  std::span<const NoiseSpec> noise() const { return noise_; }

  double mean_reward(int f, int n) const {
    return means_[static_cast<std::size_t>(f) * m_ + (n - 1)];
  }

  bool deterministic() const {
    return std::all_of(noise_.begin(), noise_.end(), [](const NoiseSpec& n) {
      return n.kind == NoiseSpec::Kind::None || n.amplitude == 0.0;
    });
  }

  std::size_t action_index(int player, const ActionSet& a) const {
    const auto& space = action_spaces_.at(player);
    auto it = std::find(space.begin(), space.end(), a);
    if (it == space.end())
      throw InputError("action " + a.to_string() +
                       " is not available to player " +
                       std::to_string(player));
    return static_cast<std::size_t>(it - space.begin());
  }

  void validate(const JointAction& a) const {
    if (static_cast<int>(a.size()) != m_)
      throw InputError("joint action has " + std::to_string(a.size()) +
                       " entries, game has " + std::to_string(m_) +
                       " players");
    for (int i = 0; i < m_; ++i) (void)action_index(i, a[i]);
  }

  ActionProfile profile_of(const JointAction& a) const {
    validate(a);
    ActionProfile p(m_);
    for (int i = 0; i < m_; ++i) p[i] = action_index(i, a[i]);
    return p;
  }

  JointAction joint_action(const ActionProfile& p) const {
    JointAction a;
    a.actions.reserve(m_);
    for (int i = 0; i < m_; ++i) a.actions.push_back(action_spaces_[i].at(p[i]));
    return a;
  }

  // Product of action-space sizes, saturating at uint64 max.
  std::uint64_t joint_action_count() const {
    std::uint64_t total = 1;
    for (const auto& s : action_spaces_) {
      if (total > std::numeric_limits<std::uint64_t>::max() / s.size())
        return std::numeric_limits<std::uint64_t>::max();
      total *= s.size();
    }
    return total;
  }

 private:
  int m_;
  int f_;
  std::vector<std::vector<ActionSet>> action_spaces_;
  std::vector<double> means_;
  std::vector<NoiseSpec> noise_;
};

inline void require_enumerable(std::uint64_t count, std::uint64_t cap,
                               const char* what) {
  if (count > cap)
    throw ResourceError(std::string(what) + ": " + std::to_string(count) +
                        " joint actions exceed the enumeration cap of " +
                        std::to_string(cap));
}

/// Visits every joint action in lexicographic profile order (player 0 most
/// significant). fn(index, profile, joint_action).
template <typename Fn>
void for_each_joint_action(const CongestionGame& game, Fn&& fn,
                           std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t total = game.joint_action_count();
  require_enumerable(total, cap, "joint action enumeration");
  const int m = game.num_players();
  ActionProfile profile(m, 0);
  JointAction joint = game.joint_action(profile);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    fn(idx, static_cast<const ActionProfile&>(profile),
       static_cast<const JointAction&>(joint));
    for (int i = m - 1; i >= 0; --i) {
      if (++profile[i] < game.actions(i).size()) {
        joint[i] = game.actions(i)[profile[i]];
        break;
      }
      profile[i] = 0;
      joint[i] = game.actions(i)[0];
    }
  }
}

// Mixed-radix rank of a profile in the order used by for_each_joint_action.
inline std::uint64_t profile_rank(const CongestionGame& game,
                                  const ActionProfile& p) {
  std::uint64_t idx = 0;
  for (int i = 0; i < game.num_players(); ++i)
    idx = idx * game.actions(i).size() + p[i];
  return idx;
}

inline ActionProfile profile_unrank(const CongestionGame& game,
                                    std::uint64_t idx) {
  ActionProfile p(game.num_players());
  for (int i = game.num_players() - 1; i >= 0; --i) {
    const auto k = game.actions(i).size();
    p[i] = idx % k;
    idx /= k;
  }
  return p;
}

// n^f(a) for every facility.
inline std::vector<int> facility_loads(const CongestionGame& game,
                                       const JointAction& a) {
  std::vector<int> loads(game.num_facilities(), 0);
  for (const auto& ai : a.actions) ai.for_each([&](int f) { ++loads[f]; });
  return loads;
}

inline int facility_load(const CongestionGame& game, const JointAction& a,
                         int f) {
  if (f < 0 || f >= game.num_facilities())
    throw InputError("facility index out of range: " + std::to_string(f));
  game.validate(a);
  int n = 0;
  for (const auto& ai : a.actions) n += ai.contains(f) ? 1 : 0;
  return n;
}

namespace detail {

inline double player_reward_with_loads(const CongestionGame& game,
                                       const JointAction& a, int i,
                                       const std::vector<int>& loads) {
  double r = 0.0;
  a[i].for_each([&](int f) { r += game.mean_reward(f, loads[f]); });
  return r;
}

}  // namespace detail

/// Mean reward r_i(a) = sum over f in a_i of r^f(n^f(a)), summed in
/// increasing facility order.
inline double player_mean_reward(const CongestionGame& game,
                                 const JointAction& a, int i) {
  game.validate(a);
  if (i < 0 || i >= game.num_players())
    throw InputError("player index out of range: " + std::to_string(i));
  return detail::player_reward_with_loads(game, a, i, facility_loads(game, a));
}

inline std::vector<double> mean_rewards(const CongestionGame& game,
                                        const JointAction& a) {
  const auto loads = facility_loads(game, a);
  std::vector<double> r(game.num_players());
  for (int i = 0; i < game.num_players(); ++i)
    r[i] = detail::player_reward_with_loads(game, a, i, loads);
  return r;
}

/// Rosenthal potential: sum_f sum_{k=1}^{n^f(a)} r^f(k).
inline double potential(const CongestionGame& game, const JointAction& a) {
  game.validate(a);
  const auto loads = facility_loads(game, a);
  double phi = 0.0;
  for (int f = 0; f < game.num_facilities(); ++f)
    for (int k = 1; k <= loads[f]; ++k) phi += game.mean_reward(f, k);
  return phi;
}

/// One reward draw per facility in the union of the players' actions.
///
/// Bounded noise is a uniform perturbation on [-w, w] with
/// w = min(amplitude, 1 - |mean|), so the draw stays in [-1, 1] and keeps the
/// table entry as its mean; the result is clipped to [-1, 1] regardless.
/// Exactly one uniform is consumed per used facility, in increasing facility
/// order, whatever the noise kind.
inline std::map<int, double> sample_rewards(const CongestionGame& game,
                                            const JointAction& a, Rng& rng) {
  game.validate(a);
  const auto loads = facility_loads(game, a);
  std::map<int, double> out;
  a.used_facilities().for_each([&](int f) {
    const double u = rng.uniform();
    const double mean = game.mean_reward(f, loads[f]);
    double r = mean;
    const auto& noise = game.noise()[f];
    if (noise.kind == NoiseSpec::Kind::Bounded) {
      const double w = std::min(noise.amplitude, 1.0 - std::abs(mean));
      r = mean + w * (2.0 * u - 1.0);
    }
    out.emplace(f, std::clamp(r, -1.0, 1.0));
  });
  return out;
}

}  // namespace congame
