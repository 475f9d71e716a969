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
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "congame/coverage.hpp"
#include "congame/dataset.hpp"
#include "congame/format.hpp"
#include "congame/game.hpp"
#include "congame/oracle.hpp"
#include "congame/policy.hpp"
#include "congame/rng.hpp"

namespace congame {

struct NamedInstance {
  std::string id;
  CongestionGame game;
  ExplorationPolicy rho;
  std::vector<JointAction> known_ne;
  std::optional<double> claimed_lower_bound;
  FeedbackLevel level = FeedbackLevel::Facility;
};

namespace detail {

inline JointAction joint(std::initializer_list<std::vector<int>> per_player) {
  JointAction a;
  for (const auto& fs : per_player) a.actions.push_back(ActionSet::from_facilities(fs));
  return a;
}

// Player i selects f iff i < loads[f].
inline JointAction first_selectors(int players, const std::vector<int>& loads) {
  JointAction a;
  a.actions.resize(players);
  for (std::size_t f = 0; f < loads.size(); ++f)
    for (int i = 0; i < loads[f]; ++i) a[i].insert(static_cast<int>(f));
  return a;
}

inline bool has_full_action_spaces(const CongestionGame& game) {
  const auto full = std::uint64_t{1} << game.num_facilities();
  for (int i = 0; i < game.num_players(); ++i)
    if (game.actions(i).size() != full) return false;
  return true;
}

inline std::vector<JointAction> distinct(std::vector<JointAction> v) {
  std::vector<JointAction> out;
  std::set<JointAction> seen;
  for (auto& a : v)
    if (seen.insert(a).second) out.push_back(std::move(a));
  return out;
}

// Single facility, five players, actions {} and {f}.
inline NamedInstance single_facility_instance(std::string id,
                                              std::vector<double> table,
                                              std::vector<int> ne_loads) {
  auto game = CongestionGame::with_full_action_spaces(5, 1, std::move(table));
  std::vector<JointAction> support;
  for_each_joint_action(game, [&](std::uint64_t, const ActionProfile&,
                                  const JointAction& a) {
    const int n = facility_load(game, a, 0);
    if (n == 1 || n == 3 || n == 4) support.push_back(a);
  });
  std::vector<JointAction> ne;
  for_each_joint_action(game, [&](std::uint64_t, const ActionProfile&,
                                  const JointAction& a) {
    if (std::count(ne_loads.begin(), ne_loads.end(), facility_load(game, a, 0)))
      ne.push_back(a);
  });
  auto rho = ExplorationPolicy::uniform(game, std::move(support));
  return {std::move(id), std::move(game), std::move(rho), std::move(ne), 0.5,
          FeedbackLevel::Facility};
}

// Two facilities, two players, full action spaces. Table rows are
// {r1(1), r1(2), r2(1), r2(2)}.
inline NamedInstance two_facility_instance(std::string id,
                                           std::vector<double> table,
                                           std::vector<JointAction> support,
                                           std::vector<JointAction> ne,
                                           double bound, FeedbackLevel level) {
  auto game = CongestionGame::with_full_action_spaces(2, 2, std::move(table));
  auto rho = ExplorationPolicy::uniform(game, std::move(support));
  return {std::move(id), std::move(game), std::move(rho), std::move(ne), bound, level};
}

}  // namespace detail

/// Full action spaces; facility 0 pays 1/2 at every load, every other
/// facility pays 1 to a lone selector and -1/2 when shared. Any unilateral
/// deviation from a pure NE loses at least 1/2.
inline CongestionGame remark_game(int players, int facilities) {
  if (players < 1 || facilities < 1 || facilities > 20)
    throw InputError("remark game needs m >= 1 and 1 <= F <= 20");
  std::vector<double> t(static_cast<std::size_t>(players) * facilities);
  for (int f = 0; f < facilities; ++f)
    for (int n = 1; n <= players; ++n)
      t[static_cast<std::size_t>(f) * players + (n - 1)] =
          f == 0 ? 0.5 : (n == 1 ? 1.0 : -0.5);
  return CongestionGame::with_full_action_spaces(players, facilities, std::move(t));
}

/// Uniform over the NE and every action where one player toggles one facility.
inline ExplorationPolicy single_toggle_rho(const CongestionGame& game,
                                           const JointAction& ne) {
  if (!detail::has_full_action_spaces(game))
    throw InputError("single-facility toggles need full action spaces");
  game.validate(ne);
  std::vector<JointAction> support{ne};
  for (int i = 0; i < game.num_players(); ++i)
    for (int f = 0; f < game.num_facilities(); ++f) {
      JointAction a = ne;
      if (a[i].contains(f)) a[i].erase(f);
      else a[i].insert(f);
      support.push_back(std::move(a));
    }
  return ExplorationPolicy::uniform(game, detail::distinct(std::move(support)));
}

/// Uniform over the NE and, per facility, the actions with that facility's
/// load moved to 0, n-1 and n+1 (other loads unchanged). The load is lowered
/// by removing the facility from the highest-index selector and raised by
/// adding it to the lowest-index non-selector. Out-of-range and repeated
/// actions are dropped, leaving at most 3F + 1.
inline ExplorationPolicy configuration_rho(const CongestionGame& game,
                                           const JointAction& ne) {
  if (!detail::has_full_action_spaces(game))
    throw InputError("configuration moves need full action spaces");
  game.validate(ne);
  const int m = game.num_players();
  std::vector<JointAction> support{ne};
  for (int f = 0; f < game.num_facilities(); ++f) {
    JointAction zero = ne;
    for (int i = 0; i < m; ++i) zero[i].erase(f);
    support.push_back(std::move(zero));
    for (int i = m - 1; i >= 0; --i)
      if (ne[i].contains(f)) {
        JointAction down = ne;
        down[i].erase(f);
        support.push_back(std::move(down));
        break;
      }
    for (int i = 0; i < m; ++i)
      if (!ne[i].contains(f)) {
        JointAction up = ne;
        up[i].insert(f);
        support.push_back(std::move(up));
        break;
      }
  }
  return ExplorationPolicy::uniform(game, detail::distinct(std::move(support)));
}

/// 1/3 each on the NE, the action with every load raised by one (capped at
/// m) and the action with every load lowered by one (floored at 0); the
/// latter two assign each facility to its first selectors. Every
/// configuration a unilateral deviation can reach is covered.
inline ExplorationPolicy one_unit_deviation_rho(const CongestionGame& game,
                                                const JointAction& ne) {
  if (!detail::has_full_action_spaces(game))
    throw InputError("one-unit deviation policy needs full action spaces");
  game.validate(ne);
  const int m = game.num_players();
  auto up = facility_loads(game, ne);
  auto down = up;
  for (auto& n : up) n = std::min(n + 1, m);
  for (auto& n : down) n = std::max(n - 1, 0);
  return ExplorationPolicy::uniform(
      game, detail::distinct({ne, detail::first_selectors(m, up),
                              detail::first_selectors(m, down)}));
}

inline NamedInstance remark44(int players = 2, int facilities = 3) {
  auto game = remark_game(players, facilities);
  auto ne = enumerate_pure_ne(game).at(0);
  auto rho = single_toggle_rho(game, ne);
  return {"remark44", std::move(game), std::move(rho), {std::move(ne)},
          std::nullopt, FeedbackLevel::Agent};
}

inline NamedInstance remark54(int players = 2, int facilities = 3) {
  auto game = remark_game(players, facilities);
  auto ne = enumerate_pure_ne(game).at(0);
  auto rho = configuration_rho(game, ne);
  return {"remark54", std::move(game), std::move(rho), {std::move(ne)},
          std::nullopt, FeedbackLevel::Game};
}

// n >= 8 log((mF + 1) / delta) (mF + 1)
inline std::size_t remark44_sample_size(int players, int facilities, double delta) {
  const double k = static_cast<double>(players) * facilities + 1.0;
  return static_cast<std::size_t>(std::ceil(8.0 * std::log(k / delta) * k));
}

// n >= 8 log((3F + 1) / delta) (3F + 1)
inline std::size_t remark54_sample_size(int facilities, double delta) {
  const double k = 3.0 * facilities + 1.0;
  return static_cast<std::size_t>(std::ceil(8.0 * std::log(k / delta) * k));
}

inline double remark44_threshold(int players, int facilities) {
  return 1.0 / (2.0 * players * std::pow(facilities, 4));
}

inline double remark54_threshold(int facilities) {
  return 1.0 / (24.0 * std::pow(facilities, 3));
}

inline const std::vector<std::string>& builtin_ids() {
  static const std::vector<std::string> ids{"game1", "game2", "game3", "game4",
                                            "game5", "game6", "remark44", "remark54"};
  return ids;
}

/// Built-in instance by id. The remark ids accept an optional ":M,F" suffix.
inline NamedInstance build(std::string_view id) {
  using detail::joint;
  if (id == "game1")
    return detail::single_facility_instance("game1", {1, -1, 1, 1, 1}, {1, 5});
  if (id == "game2")
    return detail::single_facility_instance("game2", {1, 1, 1, 1, -1}, {4});

  const std::vector<JointAction> rho34{joint({{0, 1}, {0, 1}}), joint({{0, 1}, {}}),
                                       joint({{}, {0, 1}})};
  if (id == "game3")
    return detail::two_facility_instance(
        "game3", {1, 0.5, 1, -1}, rho34,
        {joint({{0}, {0, 1}}), joint({{0, 1}, {0}})}, 0.125, FeedbackLevel::Agent);
  if (id == "game4")
    return detail::two_facility_instance(
        "game4", {1, -0.25, 1, -0.25}, rho34,
        {joint({{0}, {1}}), joint({{1}, {0}})}, 0.125, FeedbackLevel::Agent);

  const std::vector<JointAction> rho56{joint({{1}, {1}}), joint({{0}, {}}),
                                       joint({{}, {0}}), joint({{0, 1}, {0}}),
                                       joint({{0}, {0, 1}})};
  if (id == "game5")
    return detail::two_facility_instance("game5", {1, 0.5, -1, -1}, rho56,
                                         {joint({{0}, {0}})}, 0.25,
                                         FeedbackLevel::Game);
  if (id == "game6")
    return detail::two_facility_instance(
        "game6", {1, -0.5, 1, -1}, rho56,
        {joint({{0}, {1}}), joint({{1}, {0}})}, 0.25, FeedbackLevel::Game);

  for (std::string_view base : {"remark44", "remark54"}) {
    if (id.substr(0, base.size()) != base) continue;
    auto rest = id.substr(base.size());
    int m = 2, F = 3;
    if (!rest.empty()) {
      const auto comma = rest.find(',');
      const bool ok = rest[0] == ':' && comma != std::string_view::npos &&
                      try_parse_int(rest.substr(1, comma - 1), m) &&
                      try_parse_int(rest.substr(comma + 1), F);
      if (!ok) throw InputError("expected " + std::string(base) + ":M,F");
      if (m < 1 || m > 6 || F < 1 || F > 6)
        throw InputError("remark sizes must satisfy 1 <= M, F <= 6");
    }
    auto inst = base == "remark44" ? remark44(m, F) : remark54(m, F);
    inst.id = std::string(id);
    return inst;
  }
  throw InputError("unknown instance id '" + std::string(id) + "'");
}

/// Same instance with bounded noise of the given amplitude on every facility.
inline NamedInstance noisy_variant(const NamedInstance& inst, double amplitude) {
  const auto& g = inst.game;
  auto table = std::vector<double>(g.mean_table().begin(), g.mean_table().end());
  CongestionGame noisy(g.num_players(), g.num_facilities(), g.action_spaces(),
                       std::move(table),
                       std::vector<NoiseSpec>(g.num_facilities(),
                                              NoiseSpec::bounded(amplitude)));
  return {inst.id, std::move(noisy), inst.rho, inst.known_ne,
          inst.claimed_lower_bound, inst.level};
}

/// Exact noiseless feedback for each joint action in rho's support.
inline std::map<JointAction, FeedbackRecord> sufficient_statistics(
    const CongestionGame& game, const ExplorationPolicy& rho, FeedbackLevel level) {
  if (!game.deterministic())
    throw InputError("sufficient statistics need deterministic rewards");
  std::map<JointAction, FeedbackRecord> out;
  for (const auto& [a, p] : rho.support()) {
    FacilityFeedback fac;
    const auto loads = facility_loads(game, a);
    a.used_facilities().for_each(
        [&](int f) { fac.rewards[f] = game.mean_reward(f, loads[f]); });
    out.emplace(a, project_record(a, fac, level));
  }
  return out;
}

inline std::map<JointAction, FeedbackRecord> sufficient_statistics(
    const NamedInstance& inst, FeedbackLevel level) {
  return sufficient_statistics(inst.game, inst.rho, level);
}

struct SeparationResult {
  bool same_statistics = false;
  bool disjoint_equilibria = false;
  bool stronger_level_distinguishes = false;
  bool passed() const {
    return same_statistics && disjoint_equilibria && stronger_level_distinguishes;
  }
};

/// Two instances on the same exploration policy are a separation at `level`
/// when that level's exact feedback agrees on both, their pure NE sets are
/// disjoint, and the next more informative level (facility feedback, or the
/// full reward tables above it) tells them apart.
inline SeparationResult separation_check(const NamedInstance& a,
                                         const NamedInstance& b,
                                         FeedbackLevel level) {
  if (a.game.action_spaces() != b.game.action_spaces())
    throw InputError("separation needs identical action spaces");
  std::map<JointAction, double> ra, rb;
  for (const auto& [x, p] : a.rho.support()) ra[x] += p;
  for (const auto& [x, p] : b.rho.support()) rb[x] += p;
  if (ra != rb) throw InputError("separation needs the same exploration policy");

  SeparationResult r;
  r.same_statistics = sufficient_statistics(a, level) == sufficient_statistics(b, level);
  const auto na = enumerate_pure_ne(a.game);
  const auto nb = enumerate_pure_ne(b.game);
  r.disjoint_equilibria = std::none_of(na.begin(), na.end(), [&](const JointAction& x) {
    return std::find(nb.begin(), nb.end(), x) != nb.end();
  });
  if (level == FeedbackLevel::Facility) {
    r.stronger_level_distinguishes = !std::equal(
        a.game.mean_table().begin(), a.game.mean_table().end(),
        b.game.mean_table().begin(), b.game.mean_table().end());
  } else {
    const auto stronger = static_cast<FeedbackLevel>(static_cast<int>(level) - 1);
    r.stronger_level_distinguishes =
        sufficient_statistics(a, stronger) != sufficient_statistics(b, stronger);
  }
  return r;
}

struct MinimaxResult {
  double value = 0.0;
  JointAction argmin;  // first joint action attaining the value
};

/// min over pure joint actions of max(gap in a, gap in b).
inline MinimaxResult pure_minimax_gap(const CongestionGame& a, const CongestionGame& b) {
  if (a.action_spaces() != b.action_spaces())
    throw InputError("minimax gap needs identical action spaces");
  MinimaxResult best{std::numeric_limits<double>::infinity(), {}};
  for_each_joint_action(a, [&](std::uint64_t, const ActionProfile&, const JointAction& x) {
    const double v = std::max(pure_gap(a, x), pure_gap(b, x));
    if (v < best.value) best = {v, x};
  });
  return best;
}

/// Covariance-domination coefficient at the instance's recorded NE for
/// `trials` independent datasets of size n (seed mix_seed(seed, t)).
inline std::vector<double> remark_coefficients(const NamedInstance& inst,
                                               std::size_t n, int trials,
                                               std::uint64_t seed) {
  if (inst.level == FeedbackLevel::Facility)
    throw InputError("remark coefficients are for agent or game level instances");
  if (trials < 1) throw InputError("trials must be >= 1");
  std::vector<double> out;
  out.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    const auto ds = collect(inst.game, inst.rho, n, inst.level,
                            mix_seed(seed, static_cast<std::uint64_t>(t)));
    out.push_back(covariance_domination_coefficient(inst.game, ds, inst.known_ne.at(0),
                                                    inst.level)
                      .coefficient);
  }
  return out;
}

}  // namespace congame
