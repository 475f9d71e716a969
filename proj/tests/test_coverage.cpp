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

#include <set>

#include "congame.hpp"
#include "oracles.hpp"

using namespace congame;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Joint actions reachable from a by one player's change, deduplicated.
std::vector<JointAction> unilateral_reach(const CongestionGame& g, const JointAction& a) {
  std::set<JointAction> out;
  for (int i = 0; i < g.num_players(); ++i) {
    JointAction b = a;
    for (const auto& alt : g.actions(i)) {
      b[i] = alt;
      out.insert(b);
    }
  }
  return {out.begin(), out.end()};
}

double binding_value(const Eigen::MatrixXd& V, double n, const Eigen::VectorXd& u) {
  return ref::domination(V, n, u * u.transpose());
}

}  // namespace

TEST(Unilateral, UniformOverReachIsReachSize) {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ref::random_game(rng, 2 + trial % 2, 2);
    const auto all = ref::all_joint(g);
    const auto a = all[static_cast<std::size_t>(rng.uniform() * all.size())];
    const auto reach = unilateral_reach(g, a);
    const auto r = unilateral_coefficient(g, ExplorationPolicy::uniform(g, reach),
                                          ProductPolicy::pure(g, a));
    EXPECT_TRUE(r.feasible);
    EXPECT_NEAR(r.coefficient, static_cast<double>(reach.size()), 1e-9);
    EXPECT_EQ(to_string(r.kind), std::string("unilateral"));
  }
}

TEST(Unilateral, MatchedDistributionGivesOne) {
  const std::vector<ActionSet> one{ActionSet::from_mask(1)};
  const CongestionGame g(3, 1, {one, one, one}, {0.1, 0.2, 0.3});
  const JointAction a{{one[0], one[0], one[0]}};
  const auto r = unilateral_coefficient(g, ExplorationPolicy(g, {{a, 1.0}}), ProductPolicy::pure(g, a));
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.coefficient, 1.0);
}

TEST(Unilateral, MissingReachableActionIsInfeasible) {
  Rng rng(62);
  const auto g = ref::random_game(rng, 2, 2);
  const auto a = ref::all_joint(g)[5];
  auto reach = unilateral_reach(g, a);
  reach.erase(reach.begin() + 2);
  const auto r = unilateral_coefficient(g, ExplorationPolicy::uniform(g, reach), ProductPolicy::pure(g, a));
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.coefficient, kInf);
}

TEST(Unilateral, MatchesBruteForceAndIsAtLeastOne) {
  Rng rng(63);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = ref::random_game(rng, 2, 2);
    const auto rho = ref::random_rho(rng, g, trial % 2 ? 1.0 : 0.7);
    const auto pi = ref::random_policy(rng, g, 0.6);
    const auto r = unilateral_coefficient(g, rho, pi);
    const double expect = ref::unilateral(g, rho, pi);
    if (std::isinf(expect)) {
      EXPECT_FALSE(r.feasible);
    } else {
      EXPECT_TRUE(r.feasible);
      EXPECT_NEAR(r.coefficient, expect, 1e-9 * expect);
      EXPECT_GE(r.coefficient, 1.0 - 1e-12);
    }
  }
}

TEST(Density, Examples) {
  const auto inst = build("game1");
  EXPECT_NEAR(facility_density(inst.game, inst.rho, 0, 1), 0.25, 1e-12);
  EXPECT_EQ(facility_density(inst.game, inst.rho, 0, 2), 0.0);
  EXPECT_EQ(facility_density(inst.game, inst.rho, 0, 5), 0.0);
  const auto a = inst.known_ne.front();
  const int load = facility_load(inst.game, a, 0);
  for (int n = 0; n <= 5; ++n)
    EXPECT_EQ(facility_density(inst.game, ProductPolicy::pure(inst.game, a), 0, n), n == load ? 1.0 : 0.0);
}

TEST(Density, IsDistributionAndMatchesBruteForce) {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const auto pi = ref::random_policy(rng, g);
    const auto rho = ref::random_rho(rng, g);
    const auto dist = ref::expand(g, pi);
    for (int f = 0; f < 2; ++f) {
      double s_pi = 0.0, s_rho = 0.0;
      for (int n = 0; n <= 3; ++n) {
        const double d = facility_density(g, pi, f, n);
        EXPECT_NEAR(d, ref::density(g, dist, f, n), 1e-12);
        EXPECT_NEAR(facility_density(g, rho, f, n), ref::density(g, rho.support(), f, n), 1e-12);
        s_pi += d;
        s_rho += facility_density(g, rho, f, n);
      }
      EXPECT_NEAR(s_pi, 1.0, 1e-12);
      EXPECT_NEAR(s_rho, 1.0, 1e-12);
    }
  }
}

TEST(FacilityCoefficient, HalfOnAllSelectIsTwo) {
  for (int m = 2; m <= 5; ++m) {
    const auto g = CongestionGame::with_full_action_spaces(m, 1, std::vector<double>(m, 1.0));
    JointAction all;
    all.actions.assign(m, ActionSet::from_mask(1));
    JointAction drop = all;
    drop[0] = ActionSet::from_mask(0);
    const ExplorationPolicy rho(g, {{drop, 0.5}, {all, 0.5}});
    const auto r = facility_unilateral_coefficient(g, rho, ProductPolicy::pure(g, all));
    EXPECT_TRUE(r.feasible);
    EXPECT_DOUBLE_EQ(r.coefficient, 2.0);
    EXPECT_EQ(to_string(r.kind), std::string("facility"));
  }
}

TEST(FacilityCoefficient, OneUnitDeviationPolicyIsAtMostThree) {
  Rng rng(65);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + trial % 3;
    const auto g = ref::random_quarter_game(rng, m, 2);
    for (const auto& ne : ref::pure_ne(g)) {
      const auto rho = one_unit_deviation_rho(g, ne);
      const auto pi = ProductPolicy::pure(g, ne);
      const auto r = facility_unilateral_coefficient(g, rho, pi);
      EXPECT_TRUE(r.feasible);
      EXPECT_LE(r.coefficient, 3.0 + 1e-12);
      EXPECT_NEAR(r.coefficient, ref::facility_coefficient(g, rho, pi), 1e-12);
      EXPECT_TRUE(one_unit_deviation_check(g, rho, pi).holds);
    }
  }
}

TEST(FacilityCoefficient, MatchesBruteForceOnRandomPolicies) {
  Rng rng(66);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = ref::random_game(rng, 3, 2);
    const auto rho = ref::random_rho(rng, g, 0.4);
    const auto pi = ref::random_policy(rng, g, 0.5);
    const auto r = facility_unilateral_coefficient(g, rho, pi);
    const double expect = ref::facility_coefficient(g, rho, pi);
    if (std::isinf(expect)) {
      EXPECT_FALSE(r.feasible);
      EXPECT_FALSE(r.uncovered.empty());
    } else {
      EXPECT_NEAR(r.coefficient, expect, 1e-9 * expect);
    }
  }
}

TEST(FacilityCoefficient, PointMassIsInfeasible) {
  Rng rng(67);
  const auto g = ref::random_game(rng, 3, 2);
  const auto ne = ref::pure_ne(g).front();
  const auto r = facility_unilateral_coefficient(g, ExplorationPolicy(g, {{ne, 1.0}}),
                                                 ProductPolicy::pure(g, ne));
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.coefficient, kInf);
}

TEST(OneUnitCheck, HardInstances) {
  const auto g1 = build("game1");
  for (const auto& ne : g1.known_ne) {
    if (facility_load(g1.game, ne, 0) != 1) continue;
    const auto c = one_unit_deviation_check(g1.game, g1.rho, ProductPolicy::pure(g1.game, ne));
    EXPECT_FALSE(c.holds);
    EXPECT_EQ(c.uncovered, (std::vector<std::pair<int, int>>{{0, 2}}));
  }
  const auto g2 = build("game2");
  const auto ne = g2.known_ne.front();
  ASSERT_EQ(facility_load(g2.game, ne, 0), 4);
  const auto c = one_unit_deviation_check(g2.game, g2.rho, ProductPolicy::pure(g2.game, ne));
  EXPECT_FALSE(c.holds);
  EXPECT_EQ(c.uncovered, (std::vector<std::pair<int, int>>{{0, 5}}));

  const auto full = ExplorationPolicy::uniform(g2.game, ref::all_joint(g2.game));
  EXPECT_TRUE(one_unit_deviation_check(g2.game, full, ProductPolicy::pure(g2.game, ne)).holds);
  EXPECT_THROW(one_unit_deviation_check(g2.game, full, ProductPolicy::uniform(g2.game)), InputError);
}

TEST(Covariance, IdentityGivesZero) {
  Rng rng(68);
  const auto g = ref::random_game(rng, 2, 2);
  const auto ne = ref::pure_ne(g).front();
  for (auto level : {FeedbackLevel::Agent, FeedbackLevel::Game}) {
    const auto r = covariance_domination_coefficient(g, Eigen::MatrixXd::Identity(4, 4), 10.0, ne, level);
    EXPECT_EQ(r.coefficient, 0.0);
    EXPECT_FALSE(r.feasible);
  }
  EXPECT_EQ(to_string(covariance_domination_coefficient(g, Eigen::MatrixXd::Identity(4, 4), 1.0, ne,
                                                        FeedbackLevel::Game).kind),
            std::string("strong"));
  EXPECT_THROW(covariance_domination_coefficient(g, Eigen::MatrixXd::Identity(4, 4), 1.0, ne,
                                                 FeedbackLevel::Facility),
               InputError);
}

TEST(Covariance, RankOneDatasetApproachesOne) {
  const auto g = CongestionGame::with_full_action_spaces(1, 1, {0.5});
  const JointAction on{{ActionSet::from_mask(1)}};
  for (std::size_t n : {1u, 10u, 1000u}) {
    Dataset ds;
    ds.level = FeedbackLevel::Agent;
    ds.players = 1;
    ds.facilities = 1;
    for (std::size_t k = 0; k < n; ++k) ds.records.push_back({on, AgentFeedback{{0.5}}});
    const auto r = covariance_domination_coefficient(g, ds, on, FeedbackLevel::Agent);
    EXPECT_GE(r.coefficient, 1.0 - 2.0 / static_cast<double>(n));
    EXPECT_NEAR(r.coefficient, 1.0, 1e-9);
    EXPECT_EQ(r.witness.player, 0);
    EXPECT_EQ(r.witness.deviation, ActionSet::from_mask(1));
  }
}

TEST(Covariance, DuplicatingRecordsLeavesCoefficientUnchanged) {
  Rng rng(69);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ref::random_game(rng, 2, 2);
    const auto level = trial % 2 ? FeedbackLevel::Agent : FeedbackLevel::Game;
    const auto ds = collect(g, ExplorationPolicy::uniform(g, ref::all_joint(g)), 60, level, trial);
    Dataset twice = ds;
    twice.records.insert(twice.records.end(), ds.records.begin(), ds.records.end());
    for (const auto& ne : ref::pure_ne(g)) {
      const auto a = covariance_domination_coefficient(g, ds, ne, level);
      const auto b = covariance_domination_coefficient(g, twice, ne, level);
      EXPECT_NEAR(a.coefficient, b.coefficient, 1e-12 * a.coefficient);
      EXPECT_EQ(a.witness.player, b.witness.player);
    }
  }
}

TEST(Covariance, MatchesEigenvalueBisection) {
  Rng rng(70);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ref::random_game(rng, 2, 2);
    const auto level = trial % 2 ? FeedbackLevel::Agent : FeedbackLevel::Game;
    // Sparse support so that some deviations fall outside the range.
    const auto ds = collect(g, ref::random_rho(rng, g, 0.15), 40, level, trial);
    const auto V = dataset_covariance(ds, level);
    const double n = static_cast<double>(ds.size());
    const FeatureMap map(2, 2);
    for (const auto& ne : ref::pure_ne(g)) {
      double expect = kInf;
      for (int i = 0; i < 2; ++i) {
        JointAction a = ne;
        for (const auto& alt : g.actions(i)) {
          a[i] = alt;
          const auto u = map.player(a, i);
          if (!u.isZero()) expect = std::min(expect, binding_value(V, n, u));
        }
      }
      const auto r = covariance_domination_coefficient(g, V, n, ne, level);
      EXPECT_NEAR(r.coefficient, expect, 1e-6 * std::max(1.0, expect));
    }
  }
}

// The constraint of a mixed deviation is never tighter than the tightest pure
// deviation in its support.
TEST(Covariance, PureDeviationsSuffice) {
  Rng rng(71);
  const FeatureMap map(2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ref::random_game(rng, 2, 2);
    const auto ds = collect(g, ref::random_rho(rng, g, 0.5), 50, FeedbackLevel::Agent, trial);
    const auto V = dataset_covariance(ds, FeedbackLevel::Agent);
    const double n = 50.0;
    const auto ne = ref::pure_ne(g).front();
    for (int i = 0; i < 2; ++i) {
      const auto pi = ref::random_policy(rng, g, 0.3);
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(4, 4);
      double pure_min = kInf;
      JointAction a = ne;
      for (std::size_t k = 0; k < g.actions(i).size(); ++k) {
        const double p = pi.player(i)[k];
        if (p <= 0.0) continue;
        a[i] = g.actions(i)[k];
        const auto u = map.player(a, i);
        S += p * u * u.transpose();
        if (!u.isZero()) pure_min = std::min(pure_min, binding_value(V, n, u));
      }
      if (std::isinf(pure_min)) continue;
      EXPECT_GE(ref::domination(V, n, S), pure_min - 1e-6 * std::max(1.0, pure_min));
    }
  }
}

TEST(Covariance, PopulationMatrixMatchesLargeSample) {
  Rng rng(72);
  const auto g = ref::random_game(rng, 2, 2);
  const auto rho = ref::random_rho(rng, g, 0.6);
  for (auto level : {FeedbackLevel::Agent, FeedbackLevel::Game}) {
    const std::size_t n = 200000;
    const auto V = dataset_covariance(collect(g, rho, n, level, 3), level);
    const auto P = population_covariance(g, rho, static_cast<double>(n), level);
    EXPECT_LT((V - P).cwiseAbs().maxCoeff() / static_cast<double>(n), 0.01);
  }
}
