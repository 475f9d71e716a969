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

#include <gtest/gtest.h>

#include "congame.hpp"
#include "oracles.hpp"

using namespace congame;

namespace {

// Facility estimate holding the true means, with every cell seen `count`
// times. iota = 0 makes every bonus vanish.
FacilityEstimate exact_estimate(const CongestionGame& g, long long count, double iota) {
  FacilityEstimate est;
  est.players = g.num_players();
  est.facilities = g.num_facilities();
  est.counts.assign(static_cast<std::size_t>(est.facilities) * (est.players + 1), count);
  est.means.assign(est.counts.size(), 0.0);
  for (int f = 0; f < est.facilities; ++f)
    for (int n = 1; n <= est.players; ++n) est.means[est.cell(f, n)] = g.mean_reward(f, n);
  est.delta = 0.1;
  est.iota = iota;
  return est;
}

int selectors(const JointAction& a) {
  int k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) k += a[i].contains(0) ? 1 : 0;
  return k;
}

}  // namespace

TEST(Values, ZeroBonusCollapsesInterval) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const auto ds = collect(g, ref::random_rho(rng, g), 200, FeedbackLevel::Facility, trial);
    const auto est = EstimatorState::fit(ds, {0.1, 0.0});
    const auto pi = ref::random_policy(rng, g);
    for (const auto& v : optimistic_pessimistic_values(est, g, pi))
      EXPECT_NEAR(v.optimistic, v.pessimistic, 1e-12);
  }
}

TEST(Values, PurePolicyIntervalIsTwiceTheBonus) {
  Rng rng(42);
  const auto g = ref::random_game(rng, 3, 2);
  for (auto level : {FeedbackLevel::Facility, FeedbackLevel::Agent, FeedbackLevel::Game}) {
    const auto est = EstimatorState::fit(collect(g, ref::random_rho(rng, g), 150, level, 4), {});
    for (const auto& a : ref::all_joint(g)) {
      const auto v = optimistic_pessimistic_values(est, g, ProductPolicy::pure(g, a));
      for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(v[i].optimistic - v[i].pessimistic, 2 * est.evaluate(a, i).bonus, 1e-12);
    }
  }
}

TEST(Values, ExactFacilityEstimateGivesTrueValues) {
  const auto inst = build("game1");
  const EstimatorState est(exact_estimate(inst.game, 1000000, 0.0));
  Rng rng(43);
  for (int k = 0; k < 10; ++k) {
    const auto pi = ref::random_policy(rng, inst.game);
    const auto v = optimistic_pessimistic_values(est, inst.game, pi);
    const auto truth = ref::values(inst.game, pi);
    for (int i = 0; i < 5; ++i) {
      EXPECT_NEAR(v[i].optimistic, truth[i], 1e-12);
      EXPECT_NEAR(v[i].pessimistic, truth[i], 1e-12);
    }
  }
}

TEST(Values, LargeSampleFacilityEstimateApproachesTruth) {
  const auto inst = build("game3");
  const auto est = EstimatorState::fit(
      collect(inst.game, ExplorationPolicy::uniform(inst.game, ref::all_joint(inst.game)),
              200000, FeedbackLevel::Facility, 5),
      {});
  const auto pi = ProductPolicy::uniform(inst.game);
  const auto v = optimistic_pessimistic_values(est, inst.game, pi);
  const auto truth = ref::values(inst.game, pi);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(v[i].optimistic, truth[i], 0.05);
    EXPECT_NEAR(v[i].pessimistic, truth[i], 0.05);
  }
}

TEST(BestResponse, ZeroBonusMatchesOracle) {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const EstimatorState est(exact_estimate(g, 10, 0.0));
    const auto pi = ref::random_policy(rng, g);
    for (int i = 0; i < 3; ++i) {
      const auto ours = optimistic_best_response(est, g, pi, i);
      const auto oracle = best_response_value(g, pi, i);
      EXPECT_NEAR(ours.value, oracle.value, 1e-12);
      EXPECT_NEAR(ours.value, ref::best_response(g, pi, i), 1e-12);
      EXPECT_EQ(ours.action, oracle.action);
    }
  }
}

TEST(BestResponse, SingleActionPlayer) {
  const std::vector<ActionSet> full{ActionSet::from_mask(0), ActionSet::from_mask(1),
                                    ActionSet::from_mask(2), ActionSet::from_mask(3)};
  const CongestionGame g(2, 2, {{ActionSet::from_mask(2)}, full},
                         {0.3, -0.7, 0.9, 0.1});
  Rng rng(45);
  for (int k = 0; k < 5; ++k) {
    const auto ds = collect(g, ref::random_rho(rng, g, 0.6), 50, FeedbackLevel::Facility, k);
    const auto r = optimistic_best_response(EstimatorState::fit(ds, {}), g, ProductPolicy::uniform(g), 0);
    EXPECT_EQ(r.action, 0u);
  }
}

TEST(BestResponse, UniformBonusLeavesArgmaxUnchanged) {
  // Only equal-size actions: each player picks exactly one of three facilities.
  std::vector<ActionSet> singles;
  for (int f = 0; f < 3; ++f) singles.push_back(ActionSet::from_mask(std::uint64_t{1} << f));
  Rng rng(46);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> table(9);
    for (auto& r : table) r = std::round((rng.uniform() * 2 - 1) * 8) / 8;
    const CongestionGame g(3, 3, {singles, singles, singles}, table);
    const EstimatorState plain(exact_estimate(g, 7, 0.0));
    const EstimatorState shifted(exact_estimate(g, 7, 2.5));
    const auto pi = ref::random_policy(rng, g, 0.0);
    for (int i = 0; i < 3; ++i) {
      const auto a = optimistic_best_response(plain, g, pi, i);
      const auto b = optimistic_best_response(shifted, g, pi, i);
      EXPECT_EQ(a.action, b.action);
      EXPECT_NEAR(b.value - a.value, std::sqrt(2.5 / 7.0), 1e-12);
    }
  }
}

TEST(Surrogate, ZeroBonusExactEstimateReturnsNash) {
  Rng rng(47);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const EstimatorState est(exact_estimate(g, 10, 0.0));
    const auto cert = surrogate_minimize(est, g);
    EXPECT_NEAR(cert.surrogate_gap, 0.0, 1e-12);
    EXPECT_NEAR(ref::pure_gap(g, cert.policy), 0.0, 1e-12);
    // Lexicographically first NE.
    EXPECT_EQ(cert.policy, ref::pure_ne(g).front());
  }
}

TEST(Surrogate, MatchesBruteForceMinimizer) {
  Rng rng(48);
  for (int trial = 0; trial < 15; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const auto level = static_cast<FeedbackLevel>(trial % 3);
    const auto est = EstimatorState::fit(collect(g, ref::random_rho(rng, g), 80, level, trial), {});
    double best = std::numeric_limits<double>::infinity();
    JointAction arg;
    for (const auto& a : ref::all_joint(g)) {
      const auto pi = ProductPolicy::pure(g, a);
      const auto v = optimistic_pessimistic_values(est, g, pi);
      double s = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i)
        s = std::max(s, optimistic_best_response(est, g, pi, i).value - v[i].pessimistic);
      if (s < best - 1e-12) {
        best = s;
        arg = a;
      }
    }
    const auto cert = surrogate_minimize(est, g);
    EXPECT_NEAR(cert.surrogate_gap, best, 1e-9);
    EXPECT_EQ(cert.policy, arg);
    EXPECT_GE(cert.surrogate_gap, 0.0);
    double recorded = -std::numeric_limits<double>::infinity();
    for (const auto& p : cert.per_player)
      recorded = std::max(recorded, p.optimistic_best_response - p.pessimistic_value);
    EXPECT_EQ(recorded, cert.surrogate_gap);
  }
}

TEST(Surrogate, WorkerCountDoesNotChangeCertificate) {
  Rng rng(49);
  // 4 players on 3 facilities: 8^4 = 4096 joint actions, enough to split.
  const auto g = ref::random_quarter_game(rng, 4, 3);
  for (auto level : {FeedbackLevel::Facility, FeedbackLevel::Agent}) {
    const auto est = EstimatorState::fit(collect(g, ref::random_rho(rng, g, 0.05), 300, level, 9), {});
    const auto one = surrogate_minimize(est, g, {1});
    for (unsigned w : {2u, 3u, 7u}) {
      const auto many = surrogate_minimize(est, g, {w});
      EXPECT_EQ(many.policy, one.policy);
      EXPECT_EQ(many.surrogate_gap, one.surrogate_gap);
    }
  }
  // Zero-bonus ties everywhere: the tie-break must still pick the same action.
  const EstimatorState flat(exact_estimate(
      CongestionGame::with_full_action_spaces(4, 3, std::vector<double>(12, 0.0)), 5, 0.0));
  const auto zero = CongestionGame::with_full_action_spaces(4, 3, std::vector<double>(12, 0.0));
  for (unsigned w : {1u, 4u})
    EXPECT_EQ(surrogate_minimize(flat, zero, {w}).profile, ActionProfile(4, 0));
}

TEST(Surrogate, AgentLevelCannotTellGame3FromGame4) {
  const auto g3 = build("game3");
  const auto g4 = build("game4");
  for (std::size_t n : {10u, 1000u, 20000u}) {
    const auto ds = collect(g3.game, g3.rho, n, FeedbackLevel::Agent, n);
    const auto est = EstimatorState::fit(ds, {});
    const auto c3 = surrogate_minimize(est, g3.game);
    const auto c4 = surrogate_minimize(est, g4.game);
    EXPECT_EQ(c3.policy, c4.policy);
    EXPECT_EQ(c3.surrogate_gap, c4.surrogate_gap);
    // The two hard instances also produce the same data distribution.
    EXPECT_EQ(ds.records, collect(g4.game, g4.rho, n, FeedbackLevel::Agent, n).records);
  }
}

// Built-in exploration of the single-facility instance leaves load 5 unseen,
// so the optimistic join of a fifth player cannot be ruled out and a
// three-selector wins. The one-unit deviation policy reaches the four-selector.
TEST(Surrogate, SingleFacilityInstanceOutputs) {
  const auto inst = build("game2");
  const auto est_builtin =
      EstimatorState::fit(collect(inst.game, inst.rho, 100000, FeedbackLevel::Facility, 1), {});
  const auto c1 = surrogate_minimize(est_builtin, inst.game);
  EXPECT_EQ(selectors(c1.policy), 3);
  EXPECT_EQ(ref::pure_gap(inst.game, c1.policy), 1.0);

  const auto rho = one_unit_deviation_rho(inst.game, inst.known_ne.front());
  const auto est_dev =
      EstimatorState::fit(collect(inst.game, rho, 100000, FeedbackLevel::Facility, 1), {});
  const auto c2 = surrogate_minimize(est_dev, inst.game);
  EXPECT_EQ(selectors(c2.policy), 4);
  EXPECT_EQ(ref::pure_gap(inst.game, c2.policy), 0.0);
}

TEST(Surrogate, DominationAndDeviationBoundWhenBonusValid) {
  Rng rng(50);
  int valid = 0;
  int dominated = 0;
  int bounded = 0;
  const int runs = 150;
  for (int trial = 0; trial < runs; ++trial) {
    auto g = ref::random_game(rng, 3, 2);
    std::vector<NoiseSpec> noise(2, NoiseSpec::bounded(0.3));
    const auto t = g.mean_table();
    g = CongestionGame(3, 2, g.action_spaces(), {t.begin(), t.end()}, noise);
    const auto level = static_cast<FeedbackLevel>(trial % 3);
    const auto ds = collect(g, ExplorationPolicy::uniform(g, ref::all_joint(g)), 400, level, trial);
    const auto est = EstimatorState::fit(ds, {0.1, std::nullopt});
    if (!bonus_valid(g, est)) continue;
    ++valid;
    const auto cert = surrogate_minimize(est, g);
    const double truth = ref::pure_gap(g, cert.policy);
    dominated += truth <= cert.surrogate_gap + 1e-12;
    bool all = true;
    for (const auto& ne : ref::pure_ne(g))
      all = all && truth <= deviation_bonus_bound(est, g, ne) + 1e-12;
    bounded += all;
  }
  EXPECT_GE(valid, static_cast<int>(std::ceil((1 - 0.1 - 0.03) * runs)));
  EXPECT_EQ(dominated, valid);
  EXPECT_EQ(bounded, valid);
}

TEST(Surrogate, FacilityGapShrinksWithMoreData) {
  const auto inst = build("game3");
  const auto rho = ExplorationPolicy::uniform(inst.game, ref::all_joint(inst.game));
  std::vector<double> ns;
  std::vector<double> gaps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto full = collect(inst.game, rho, 3200, FeedbackLevel::Facility, seed);
    for (std::size_t n : {50u, 200u, 800u, 3200u}) {
      Dataset prefix = full;
      prefix.records.resize(n);
      const auto cert = surrogate_minimize(EstimatorState::fit(prefix, {}), inst.game);
      ns.push_back(static_cast<double>(n));
      gaps.push_back(cert.surrogate_gap);
    }
  }
  const double r = ref::spearman(ns, gaps);
  EXPECT_LT(r * std::sqrt(static_cast<double>(ns.size()) - 1), -1.645);
}

TEST(Surrogate, ErrorsOnShapeMismatchAndCap) {
  const auto g = build("game3").game;
  const auto est = EstimatorState::fit(collect(g, build("game3").rho, 10, FeedbackLevel::Agent, 1), {});
  EXPECT_THROW(surrogate_minimize(est, build("game1").game), InputError);
  EXPECT_THROW(surrogate_minimize(est, g, {1, 3}), ResourceError);
  EXPECT_THROW(optimistic_pessimistic_values(est, g, ProductPolicy::uniform(g), 3), ResourceError);
}
