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
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "congame/dataset.hpp"
#include "congame/estimators.hpp"
#include "congame/game.hpp"
#include "congame/oracle.hpp"
#include "congame/policy.hpp"

namespace congame {

enum class CoverageKind { Unilateral, Facility, WeakCovariance, StrongCovariance };

inline const char* to_string(CoverageKind k) {
  switch (k) {
    case CoverageKind::Unilateral: return "unilateral";
    case CoverageKind::Facility: return "facility";
    case CoverageKind::WeakCovariance: return "weak";
    case CoverageKind::StrongCovariance: return "strong";
  }
  return "?";
}

// The deviation attaining the reported extremum (or the first uncovered one).
struct CoverageWitness {
  int player = -1;
  ActionSet deviation;
  int facility = -1;  // facility kind only
  int load = -1;      // facility kind only
  JointAction action;  // unilateral kind only
};

struct CoverageReport {
  CoverageKind kind = CoverageKind::Unilateral;
  bool feasible = false;
  // +inf when infeasible (unilateral / facility kinds); 0 when infeasible
  // (covariance kinds, where larger is better).
  double coefficient = 0.0;
  CoverageWitness witness;
  std::vector<std::pair<int, int>> uncovered;  // (f, n), facility kind only
};

/// Unilateral coefficient: max over players i, pure deviations a_i' and joint
/// actions a in the support of (a_i', pi_-i) of (a_i', pi_-i)(a) / rho(a).
/// Infeasible as soon as such an a has rho(a) = 0.
inline CoverageReport unilateral_coefficient(
    const CongestionGame& game, const ExplorationPolicy& rho,
    const ProductPolicy& pi, std::uint64_t cap = kDefaultEnumerationCap) {
  std::map<JointAction, double> rho_mass;
  for (const auto& [a, p] : rho.support()) rho_mass[a] += p;

  CoverageReport report;
  report.kind = CoverageKind::Unilateral;
  report.feasible = true;
  report.coefficient = 0.0;
  for (int i = 0; i < game.num_players() && report.feasible; ++i) {
    const auto actions = game.actions(i);
    for (std::size_t k = 0; k < actions.size() && report.feasible; ++k) {
      for_each_support(
          game, pi,
          [&](const ActionProfile& p, double prob) {
            if (!report.feasible) return;
            auto profile = p;
            profile[i] = k;
            auto a = game.joint_action(profile);
            auto it = rho_mass.find(a);
            if (it == rho_mass.end()) {
              report.feasible = false;
              report.coefficient = std::numeric_limits<double>::infinity();
              report.witness = {i, actions[k], -1, -1, std::move(a)};
              return;
            }
            const double ratio = prob / it->second;
            if (ratio > report.coefficient) {
              report.coefficient = ratio;
              report.witness = {i, actions[k], -1, -1, std::move(a)};
            }
          },
          i, cap);
    }
  }
  return report;
}

// d(f, n) table indexed [f * (m + 1) + n].
template <typename Visit>
std::vector<double> density_table(const CongestionGame& game, Visit&& visit) {
  const int m = game.num_players();
  std::vector<double> d(static_cast<std::size_t>(game.num_facilities()) * (m + 1), 0.0);
  visit([&](const JointAction& a, double prob) {
    const auto loads = facility_loads(game, a);
    for (int f = 0; f < game.num_facilities(); ++f)
      d[static_cast<std::size_t>(f) * (m + 1) + loads[f]] += prob;
  });
  return d;
}

inline std::vector<double> density_table(const CongestionGame& game,
                                         const ExplorationPolicy& rho) {
  return density_table(game, [&](auto&& add) {
    for (const auto& [a, p] : rho.support()) add(a, p);
  });
}

inline std::vector<double> density_table(const CongestionGame& game,
                                         const ProductPolicy& pi,
                                         std::uint64_t cap = kDefaultEnumerationCap) {
  return density_table(game, [&](auto&& add) {
    for_each_support(
        game, pi,
        [&](const ActionProfile& p, double prob) { add(game.joint_action(p), prob); },
        -1, cap);
  });
}

/// d_f^pi(n): probability that exactly n players select f.
inline double facility_density(const CongestionGame& game,
                               const ProductPolicy& pi, int f, int n) {
  if (f < 0 || f >= game.num_facilities() || n < 0 || n > game.num_players())
    throw InputError("configuration (f, n) out of range");
  return density_table(game, pi)[static_cast<std::size_t>(f) * (game.num_players() + 1) + n];
}

inline double facility_density(const CongestionGame& game,
                               const ExplorationPolicy& rho, int f, int n) {
  if (f < 0 || f >= game.num_facilities() || n < 0 || n > game.num_players())
    throw InputError("configuration (f, n) out of range");
  return density_table(game, rho)[static_cast<std::size_t>(f) * (game.num_players() + 1) + n];
}

/// Facility unilateral coefficient: max over players, pure deviations,
/// facilities and configurations n >= 1 covered by rho of the density ratio
/// d_f^{(a_i', pi_-i)}(n) / d_f^rho(n). A configuration with n >= 1 reached by
/// a deviation but not covered by rho makes the report infeasible and is
/// listed in `uncovered`. Load 0 carries no reward and is never required.
inline CoverageReport facility_unilateral_coefficient(
    const CongestionGame& game, const ExplorationPolicy& rho,
    const ProductPolicy& pi, std::uint64_t cap = kDefaultEnumerationCap) {
  const int m = game.num_players();
  const auto rho_d = density_table(game, rho);
  CoverageReport report;
  report.kind = CoverageKind::Facility;
  report.coefficient = 0.0;
  std::set<std::pair<int, int>> uncovered;
  for (int i = 0; i < m; ++i) {
    const auto actions = game.actions(i);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      const auto dev = density_table(game, pi.deviate(game, i, k), cap);
      for (int f = 0; f < game.num_facilities(); ++f) {
        for (int n = 1; n <= m; ++n) {
          const auto c = static_cast<std::size_t>(f) * (m + 1) + n;
          if (dev[c] <= 0.0) continue;
          if (rho_d[c] <= 0.0) {
            if (uncovered.empty()) report.witness = {i, actions[k], f, n, {}};
            uncovered.insert({f, n});
            continue;
          }
          const double ratio = dev[c] / rho_d[c];
          if (ratio > report.coefficient && uncovered.empty()) {
            report.coefficient = ratio;
            report.witness = {i, actions[k], f, n, {}};
          }
        }
      }
    }
  }
  report.uncovered.assign(uncovered.begin(), uncovered.end());
  report.feasible = uncovered.empty();
  if (!report.feasible) report.coefficient = std::numeric_limits<double>::infinity();
  return report;
}

struct DeviationCoverage {
  bool holds = false;
  std::vector<std::pair<int, int>> uncovered;  // (f, n)
};

/// One-unit deviation coverage: every configuration (f, n), n >= 1, reachable
/// by a unilateral deviation from pi_star has positive density under rho.
/// pi_star must be a Nash equilibrium.
inline DeviationCoverage one_unit_deviation_check(const CongestionGame& game,
                                                  const ExplorationPolicy& rho,
                                                  const ProductPolicy& pi_star) {
  if (gap(game, pi_star) > kNashTolerance)
    throw InputError("supplied policy is not a Nash equilibrium");
  const auto report = facility_unilateral_coefficient(game, rho, pi_star);
  return {report.feasible, report.uncovered};
}

/// I + sum_k sum_i A_i A_i^T (agent) or I + sum_k A A^T (game) for a dataset;
/// facility data is projected to the requested level first.
inline Eigen::MatrixXd dataset_covariance(const Dataset& ds, FeedbackLevel level) {
  if (level == FeedbackLevel::Facility)
    throw InputError("covariance domination is defined for agent or game level");
  const Dataset proj = ds.level == level ? ds : project(ds, level);
  const auto est = EstimatorState::fit(proj, ConfidenceParams{0.5, 1.0});
  return est.linear()->covariance();
}

/// Population analogue I + n E_rho[...] of dataset_covariance.
inline Eigen::MatrixXd population_covariance(const CongestionGame& game,
                                             const ExplorationPolicy& rho,
                                             double n, FeedbackLevel level) {
  if (level == FeedbackLevel::Facility)
    throw InputError("covariance domination is defined for agent or game level");
  const FeatureMap map(game.num_players(), game.num_facilities());
  const int d = map.dim();
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [a, p] : rho.support()) {
    if (level == FeedbackLevel::Agent) {
      const auto loads = map.loads(a);
      for (int i = 0; i < game.num_players(); ++i) {
        const auto u = map.player(a, i, loads);
        V.noalias() += p * (u * u.transpose());
      }
    } else {
      const auto u = map.aggregate(a);
      V.noalias() += p * (u * u.transpose());
    }
  }
  return Eigen::MatrixXd::Identity(d, d) + n * V;
}

// Relative eigenvalue cutoff for the pseudo-inverse and the absolute residual
// tolerance for range membership.
inline constexpr double kRangeTolerance = 1e-9;

/// Largest C >= 0 with V >= I + n C E_{(pi_i, a*_-i)}[A_i A_i^T] for every
/// player i and every pi_i. Pure deviations suffice; each nonzero feature
/// u = A_i(a_i', a*_-i) binds at 1 / (n u^T (V - I)^+ u) when u lies in the
/// range of V - I and at 0 otherwise.
inline CoverageReport covariance_domination_coefficient(
    const CongestionGame& game, const Eigen::MatrixXd& V, double n,
    const JointAction& ne, FeedbackLevel level) {
  if (level == FeedbackLevel::Facility)
    throw InputError("covariance domination is defined for agent or game level");
  if (!(n > 0)) throw InputError("sample count must be positive");
  game.validate(ne);
  const FeatureMap map(game.num_players(), game.num_facilities());
  const int d = map.dim();
  if (V.rows() != d || V.cols() != d)
    throw InputError("covariance matrix has the wrong dimension");

  const Eigen::MatrixXd M = V - Eigen::MatrixXd::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.info() != Eigen::Success)
    throw InputError("eigendecomposition of V - I failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& Q = eig.eigenvectors();
  const double cutoff = kRangeTolerance * std::max(1.0, lambda.cwiseAbs().maxCoeff());

  CoverageReport report;
  report.kind = level == FeedbackLevel::Agent ? CoverageKind::WeakCovariance
                                              : CoverageKind::StrongCovariance;
  report.coefficient = std::numeric_limits<double>::infinity();
  JointAction a = ne;
  for (int i = 0; i < game.num_players(); ++i) {
    a[i] = ne[i];
    for (const auto& alt : game.actions(i)) {
      a[i] = alt;
      const Eigen::VectorXd u = map.player(a, i);
      if (u.isZero()) continue;
      const Eigen::VectorXd c = Q.transpose() * u;
      double quad = 0.0, residual2 = 0.0;
      for (int k = 0; k < d; ++k) {
        if (lambda[k] > cutoff) quad += c[k] * c[k] / lambda[k];
        else residual2 += c[k] * c[k];
      }
      const double value =
          std::sqrt(residual2) > kRangeTolerance ? 0.0 : 1.0 / (n * quad);
      if (value < report.coefficient) {
        report.coefficient = value;
        report.witness = {i, alt, -1, -1, {}};
      }
    }
    a[i] = ne[i];
  }
  report.feasible = report.coefficient > 0.0;
  return report;
}

inline CoverageReport covariance_domination_coefficient(
    const CongestionGame& game, const Dataset& ds, const JointAction& ne,
    FeedbackLevel level) {
  return covariance_domination_coefficient(
      game, dataset_covariance(ds, level), static_cast<double>(ds.size()), ne, level);
}

}  // namespace congame
