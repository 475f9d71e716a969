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

#include <algorithm>
#include <set>

#include "congame.hpp"
#include "oracles.hpp"

using namespace congame;

namespace {

JointAction J(std::initializer_list<std::vector<int>> per_player) {
  JointAction a;
  for (const auto& fs : per_player) a.actions.push_back(ActionSet::from_facilities(fs));
  return a;
}

std::set<JointAction> as_set(const std::vector<JointAction>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Instances, KnownEquilibriaHaveZeroGap) {
  for (const auto& id : builtin_ids()) {
    const auto inst = build(id);
    EXPECT_EQ(inst.id, id);
    ASSERT_FALSE(inst.known_ne.empty()) << id;
    for (const auto& a : inst.known_ne) {
      EXPECT_EQ(pure_gap(inst.game, a), 0.0) << id << " " << a.to_string();
      EXPECT_EQ(ref::pure_gap(inst.game, a), 0.0) << id << " " << a.to_string();
    }
  }
}

TEST(Instances, SingleFacilityEquilibria) {
  const auto g1 = build("game1");
  std::set<JointAction> expect;
  for (int i = 0; i < 5; ++i) {
    JointAction a;
    a.actions.assign(5, ActionSet{});
    a[i] = ActionSet::from_mask(1);
    expect.insert(a);
  }
  JointAction all;
  all.actions.assign(5, ActionSet::from_mask(1));
  expect.insert(all);
  EXPECT_EQ(as_set(enumerate_pure_ne(g1.game)), expect);
  EXPECT_EQ(as_set(g1.known_ne), expect);

  const auto g2 = build("game2");
  const auto ne2 = enumerate_pure_ne(g2.game);
  EXPECT_EQ(ne2.size(), 5u);
  for (const auto& a : ne2) EXPECT_EQ(facility_load(g2.game, a, 0), 4);
}

TEST(Instances, TwoFacilityEquilibria) {
  EXPECT_EQ(as_set(enumerate_pure_ne(build("game3").game)),
            (std::set<JointAction>{J({{0}, {0, 1}}), J({{0, 1}, {0}})}));
  EXPECT_EQ(as_set(enumerate_pure_ne(build("game5").game)), (std::set<JointAction>{J({{0}, {0}})}));
  // Beyond the two split actions, one player taking both facilities while the
  // other stays out is also an equilibrium of games 4 and 6.
  for (const char* id : {"game4", "game6"}) {
    const auto inst = build(id);
    const auto found = as_set(enumerate_pure_ne(inst.game));
    for (const auto& a : inst.known_ne) EXPECT_TRUE(found.count(a)) << id;
    EXPECT_EQ(found, (std::set<JointAction>{J({{0}, {1}}), J({{1}, {0}}), J({{}, {0, 1}}),
                                            J({{0, 1}, {}})}))
        << id;
  }
}

TEST(Instances, ExplorationPolicies) {
  const auto g1 = build("game1");
  EXPECT_EQ(g1.rho.size(), 20u);
  for (const auto& [a, p] : g1.rho.support()) {
    EXPECT_DOUBLE_EQ(p, 1.0 / 20);
    const int n = facility_load(g1.game, a, 0);
    EXPECT_TRUE(n == 1 || n == 3 || n == 4);
  }
  for (const char* id : {"game3", "game4"}) {
    const auto inst = build(id);
    EXPECT_EQ(inst.rho.size(), 3u);
    EXPECT_DOUBLE_EQ(inst.rho.probability(J({{0, 1}, {0, 1}})), 1.0 / 3);
  }
  for (const char* id : {"game5", "game6"}) {
    const auto inst = build(id);
    EXPECT_EQ(inst.rho.size(), 5u);
    EXPECT_DOUBLE_EQ(inst.rho.probability(J({{1}, {1}})), 1.0 / 5);
  }
  EXPECT_EQ(build("game3").claimed_lower_bound, 0.125);
  EXPECT_EQ(build("game5").claimed_lower_bound, 0.25);
  EXPECT_EQ(build("game1").claimed_lower_bound, 0.5);
  EXPECT_THROW(build("game7"), InputError);
  EXPECT_THROW(build("remark44:9,9"), InputError);
  EXPECT_THROW(build("remark44:2"), InputError);
}

TEST(SufficientStatistics, AgentAndGameLevelExamples) {
  const auto s3 = sufficient_statistics(build("game3"), FeedbackLevel::Agent);
  EXPECT_EQ(std::get<AgentFeedback>(s3.at(J({{0, 1}, {0, 1}}))).rewards,
            (std::vector<double>{-0.5, -0.5}));
  EXPECT_EQ(std::get<AgentFeedback>(s3.at(J({{0, 1}, {}}))).rewards, (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(s3, sufficient_statistics(build("game4"), FeedbackLevel::Agent));

  const auto s5 = sufficient_statistics(build("game5"), FeedbackLevel::Game);
  EXPECT_EQ(std::get<GameFeedback>(s5.at(J({{1}, {1}}))).total, -2.0);
  EXPECT_EQ(std::get<GameFeedback>(s5.at(J({{0}, {}}))).total, 1.0);
  EXPECT_EQ(std::get<GameFeedback>(s5.at(J({{0, 1}, {0}}))).total, 0.0);
  EXPECT_EQ(s5, sufficient_statistics(build("game6"), FeedbackLevel::Game));

  const auto f3 = sufficient_statistics(build("game3"), FeedbackLevel::Facility);
  EXPECT_NE(f3, sufficient_statistics(build("game4"), FeedbackLevel::Facility));
  EXPECT_THROW(sufficient_statistics(noisy_variant(build("game3"), 0.1), FeedbackLevel::Agent),
               InputError);
}

TEST(SufficientStatistics, MatchCollectedData) {
  for (const auto& id : {"game1", "game3", "game5"}) {
    const auto inst = build(id);
    for (auto level : {FeedbackLevel::Facility, FeedbackLevel::Agent, FeedbackLevel::Game}) {
      const auto stats = sufficient_statistics(inst, level);
      EXPECT_EQ(stats.size(), inst.rho.size());
      for (const auto& r : collect(inst.game, inst.rho, 200, level, 5).records)
        EXPECT_EQ(stats.at(r.action), r.feedback);
    }
  }
}

TEST(Separation, TheThreePairs) {
  const auto r34 = separation_check(build("game3"), build("game4"), FeedbackLevel::Agent);
  EXPECT_TRUE(r34.passed());
  EXPECT_FALSE(separation_check(build("game3"), build("game4"), FeedbackLevel::Facility).same_statistics);

  const auto r56 = separation_check(build("game5"), build("game6"), FeedbackLevel::Game);
  EXPECT_TRUE(r56.passed());
  EXPECT_FALSE(separation_check(build("game5"), build("game6"), FeedbackLevel::Agent).same_statistics);

  const auto r12 = separation_check(build("game1"), build("game2"), FeedbackLevel::Facility);
  EXPECT_TRUE(r12.passed());
  EXPECT_THROW(separation_check(build("game1"), build("game3"), FeedbackLevel::Facility), InputError);
}

TEST(Separation, MinimaxGapsMeetClaimedBounds) {
  const auto m34 = pure_minimax_gap(build("game3").game, build("game4").game);
  EXPECT_DOUBLE_EQ(m34.value, 0.25);
  EXPECT_GE(m34.value, 0.125);
  const auto m56 = pure_minimax_gap(build("game5").game, build("game6").game);
  EXPECT_DOUBLE_EQ(m56.value, 1.0);
  EXPECT_GE(m56.value, 0.25);
  const auto m12 = pure_minimax_gap(build("game1").game, build("game2").game);
  EXPECT_DOUBLE_EQ(m12.value, 1.0);
  // Brute force against the reference gap.
  for (const auto& [x, y] : {std::pair{"game3", "game4"}, std::pair{"game5", "game6"}}) {
    const auto a = build(x).game;
    const auto b = build(y).game;
    double v = std::numeric_limits<double>::infinity();
    for (const auto& j : ref::all_joint(a)) v = std::min(v, std::max(ref::pure_gap(a, j), ref::pure_gap(b, j)));
    EXPECT_EQ(pure_minimax_gap(a, b).value, v);
  }
}

TEST(Remarks, GameAndPolicies) {
  for (int m = 1; m <= 3; ++m)
    for (int F = 1; F <= 3; ++F) {
      const auto g = remark_game(m, F);
      for (const auto& ne : enumerate_pure_ne(g)) {
        // Every unilateral deviation costs at least 1/2.
        for (int i = 0; i < m; ++i) {
          JointAction a = ne;
          const double base = player_mean_reward(g, ne, i);
          for (const auto& alt : g.actions(i)) {
            if (alt == ne[i]) continue;
            a[i] = alt;
            EXPECT_LE(player_mean_reward(g, a, i), base - 0.5 + 1e-12);
          }
        }
      }
    }
  const auto r44 = build("remark44:2,3");
  EXPECT_EQ(r44.level, FeedbackLevel::Agent);
  EXPECT_EQ(r44.rho.size(), 2u * 3 + 1);
  EXPECT_GT(r44.rho.probability(r44.known_ne.front()), 0.0);
  const auto r54 = build("remark54:2,3");
  EXPECT_EQ(r54.level, FeedbackLevel::Game);
  EXPECT_LE(r54.rho.size(), 3u * 3 + 1);
  EXPECT_GT(r54.rho.probability(r54.known_ne.front()), 0.0);
  EXPECT_EQ(r44.known_ne.front(), enumerate_pure_ne(r44.game).front());
}

TEST(Remarks, SampleSizesAndThresholds) {
  EXPECT_EQ(remark44_sample_size(2, 3, 0.05),
            static_cast<std::size_t>(std::ceil(8 * std::log(7 / 0.05) * 7)));
  EXPECT_EQ(remark54_sample_size(3, 0.05),
            static_cast<std::size_t>(std::ceil(8 * std::log(10 / 0.05) * 10)));
  EXPECT_DOUBLE_EQ(remark44_threshold(2, 3), 1.0 / 324);
  EXPECT_DOUBLE_EQ(remark54_threshold(2), 1.0 / 192);
}

TEST(Remarks, CoefficientsClearThresholds) {
  for (const auto& [m, F] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 3}}) {
    const auto inst = build("remark44:" + std::to_string(m) + "," + std::to_string(F));
    const auto c = remark_coefficients(inst, remark44_sample_size(m, F, 0.05), 20, 11);
    const auto pass = std::count_if(c.begin(), c.end(),
                                    [&](double x) { return x >= remark44_threshold(m, F); });
    EXPECT_GE(pass, 19);
  }
  for (int F : {2, 3}) {
    const auto inst = build("remark54:2," + std::to_string(F));
    const auto c = remark_coefficients(inst, remark54_sample_size(F, 0.05), 20, 12);
    const auto pass = std::count_if(c.begin(), c.end(),
                                    [&](double x) { return x >= remark54_threshold(F); });
    EXPECT_GE(pass, 19);
  }
}

TEST(Instances, NoisyVariantKeepsMeans) {
  const auto base = build("game3");
  const auto noisy = noisy_variant(base, 0.3);
  EXPECT_FALSE(noisy.game.deterministic());
  EXPECT_TRUE(std::equal(base.game.mean_table().begin(), base.game.mean_table().end(),
                         noisy.game.mean_table().begin(), noisy.game.mean_table().end()));
  EXPECT_EQ(noisy.known_ne, base.known_ne);
  const auto ds = collect(noisy.game, noisy.rho, 20000, FeedbackLevel::Facility, 3);
  const auto est = fit_facility(ds, 0.1);
  EXPECT_NEAR(est.mean(0, 2), 0.5, 0.03);
  EXPECT_NEAR(est.mean(1, 2), -1.0, 1e-12);  // clipped at the boundary: no room for noise
}
