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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "congame/dataset.hpp"
#include "congame/error.hpp"
#include "congame/game.hpp"

namespace congame {

/// Indicator features of a joint action.
///
/// Coordinate index(f, n) = m*f + (n - 1) for n in [1, m], so d = m*F and the
/// packed mean table of a CongestionGame is exactly the parameter vector.
class FeatureMap {
 public:
  FeatureMap(int players, int facilities) : m_(players), f_(facilities) {
    if (m_ < 1 || f_ < 1) throw InputError("feature map needs m, F >= 1");
  }

  int players() const { return m_; }
  int facilities() const { return f_; }
  int dim() const { return m_ * f_; }
  int index(int f, int n) const { return m_ * f + (n - 1); }

  // A_i(a): ones at index(f, n^f(a)) for f in a_i.
  Eigen::VectorXd player(const JointAction& a, int i) const {
    return player(a, i, loads(a));
  }

  Eigen::VectorXd player(const JointAction& a, int i,
                         const std::vector<int>& loads) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim());
    a[i].for_each([&](int f) { u[index(f, loads[f])] = 1.0; });
    return u;
  }

  // A(a) = sum_i A_i(a): value n^f(a) at index(f, n^f(a)).
  Eigen::VectorXd aggregate(const JointAction& a) const {
    const auto l = loads(a);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim());
    for (int f = 0; f < f_; ++f)
      if (l[f] > 0) u[index(f, l[f])] = static_cast<double>(l[f]);
    return u;
  }

  std::vector<int> loads(const JointAction& a) const {
    if (static_cast<int>(a.size()) != m_)
      throw InputError("joint action does not match the feature map");
    std::vector<int> l(f_, 0);
    for (const auto& ai : a.actions) {
      if (ai.extent() > f_) throw InputError("unknown facility in action");
      ai.for_each([&](int f) { ++l[f]; });
    }
    return l;
  }

  // theta packed from a game's mean table.
  static Eigen::VectorXd pack(const CongestionGame& game) {
    const auto t = game.mean_table();
    return Eigen::Map<const Eigen::VectorXd>(t.data(),
                                             static_cast<Eigen::Index>(t.size()));
  }

 private:
  int m_;
  int f_;
};

inline Eigen::VectorXd feature_vector(const FeatureMap& map,
                                      const JointAction& a, int i) {
  return map.player(a, i);
}

// iota = 2 log(4 (m + 1) F / delta)
inline double default_iota(int players, int facilities, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw InputError("delta must lie in (0, 1)");
  return 2.0 * std::log(4.0 * (players + 1) * facilities / delta);
}

struct ConfidenceParams {
  double delta = 0.1;
  std::optional<double> iota;  // overrides default_iota when set

  double resolve_iota(int players, int facilities) const {
    const double base = default_iota(players, facilities, delta);
    return iota ? *iota : base;
  }
};

struct RewardEstimate {
  double reward = 0.0;
  double bonus = 0.0;
};

/// Per-configuration empirical means for facility-level data.
struct FacilityEstimate {
  int players = 0;
  int facilities = 0;
  // Indexed [f * (m + 1) + n], n in [0, m]; counts at n = 0 record the
  // samples in which nobody used f.
  std::vector<long long> counts;
  std::vector<double> means;
  double delta = 0.0;
  double iota = 0.0;

  std::size_t cell(int f, int n) const {
    return static_cast<std::size_t>(f) * (players + 1) + n;
  }
  long long count(int f, int n) const { return counts[cell(f, n)]; }
  double mean(int f, int n) const { return means[cell(f, n)]; }
};

inline FacilityEstimate fit_facility(const Dataset& ds,
                                     const ConfidenceParams& conf) {
  if (ds.level != FeedbackLevel::Facility)
    throw InputError("facility estimator needs facility-level feedback");
  FacilityEstimate est;
  est.players = ds.players;
  est.facilities = ds.facilities;
  est.delta = conf.delta;
  est.iota = conf.resolve_iota(ds.players, ds.facilities);
  const auto cells = static_cast<std::size_t>(ds.facilities) * (ds.players + 1);
  est.counts.assign(cells, 0);
  std::vector<double> sums(cells, 0.0);
  std::vector<int> loads(ds.facilities);
  for (const auto& rec : ds.records) {
    std::fill(loads.begin(), loads.end(), 0);
    for (const auto& ai : rec.action.actions) ai.for_each([&](int f) { ++loads[f]; });
    const auto& fb = std::get<FacilityFeedback>(rec.feedback);
    for (int f = 0; f < ds.facilities; ++f) {
      ++est.counts[est.cell(f, loads[f])];
      if (loads[f] > 0) sums[est.cell(f, loads[f])] += fb.rewards.at(f);
    }
  }
  est.means.assign(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c)
    if (est.counts[c] > 0) est.means[c] = sums[c] / static_cast<double>(est.counts[c]);
  return est;
}

inline FacilityEstimate fit_facility(const Dataset& ds, double delta) {
  return fit_facility(ds, ConfidenceParams{delta, std::nullopt});
}

/// r_i(a) = sum_{f in a_i} rhat^f(n^f(a)),
/// b_i(a) = sum_{f in a_i} sqrt(iota / max(N^f(n^f(a)), 1)).
inline RewardEstimate facility_reward_and_bonus(const FacilityEstimate& est,
                                                const JointAction& a, int i) {
  std::vector<int> loads(est.facilities, 0);
  for (const auto& aj : a.actions) aj.for_each([&](int f) { ++loads[f]; });
  RewardEstimate out;
  a[i].for_each([&](int f) {
    const auto c = est.cell(f, loads[f]);
    out.reward += est.means[c];
    out.bonus += std::sqrt(est.iota / static_cast<double>(std::max(est.counts[c], 1LL)));
  });
  return out;
}

/// Ridge-regression reward model over the indicator features.
///
/// V = I + sum of outer products; theta solves V theta = sum of
/// feature * reward. V is factored once (LLT) and every quadratic form
/// u^T V^{-1} u is evaluated as |L^{-1} u|^2.
class LinearModel {
 public:
  LinearModel(FeedbackLevel level, FeatureMap map, Eigen::MatrixXd V,
              Eigen::VectorXd rhs, double beta, double delta, double iota,
              std::size_t samples)
      : level_(level),
        map_(map),
        V_(std::move(V)),
        llt_(V_),
        beta_(beta),
        delta_(delta),
        iota_(iota),
        samples_(samples) {
    if (llt_.info() != Eigen::Success)
      throw InputError("covariance matrix is not positive definite");
    theta_ = llt_.solve(rhs);
  }

  FeedbackLevel level() const { return level_; }
  const FeatureMap& features() const { return map_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::MatrixXd& covariance() const { return V_; }
  double beta() const { return beta_; }
  double delta() const { return delta_; }
  double iota() const { return iota_; }
  std::size_t samples() const { return samples_; }

  // u^T V^{-1} u
  double quad_form(const Eigen::VectorXd& u) const {
    return llt_.matrixL().solve(u).squaredNorm();
  }

  double predict(const Eigen::VectorXd& u) const { return u.dot(theta_); }

 private:
  FeedbackLevel level_;
  FeatureMap map_;
  Eigen::MatrixXd V_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd theta_;
  double beta_;
  double delta_;
  double iota_;
  std::size_t samples_;
};

// sqrt(beta) = 2 sqrt(d) + sqrt(d log(1 + m n F / d) + iota)
inline double agent_beta(int m, int F, std::size_t n, double iota) {
  const double d = static_cast<double>(m) * F;
  const double root = 2.0 * std::sqrt(d) +
                      std::sqrt(d * std::log(1.0 + m * static_cast<double>(n) * F / d) + iota);
  return root * root;
}

// sqrt(beta) = 2 sqrt(d) + sqrt(d log(1 + n m) + iota)
inline double game_beta(int m, int F, std::size_t n, double iota) {
  const double d = static_cast<double>(m) * F;
  const double root = 2.0 * std::sqrt(d) +
                      std::sqrt(d * std::log(1.0 + static_cast<double>(n) * m) + iota);
  return root * root;
}

inline LinearModel fit_agent_ridge(const Dataset& ds, const FeatureMap& map,
                                   const ConfidenceParams& conf) {
  if (ds.level != FeedbackLevel::Agent)
    throw InputError("agent ridge regression needs agent-level feedback");
  if (map.players() != ds.players || map.facilities() != ds.facilities)
    throw InputError("feature map does not match the dataset");
  const int d = map.dim();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (const auto& rec : ds.records) {
    const auto loads = map.loads(rec.action);
    const auto& fb = std::get<AgentFeedback>(rec.feedback);
    for (int i = 0; i < ds.players; ++i) {
      // Indicator features: the outer product only touches the ones.
      rec.action[i].for_each([&](int f) {
        const int r = map.index(f, loads[f]);
        rhs[r] += fb.rewards[i];
        rec.action[i].for_each([&](int g) { V(r, map.index(g, loads[g])) += 1.0; });
      });
    }
  }
  const double iota = conf.resolve_iota(ds.players, ds.facilities);
  return LinearModel(FeedbackLevel::Agent, map, std::move(V), std::move(rhs),
                     agent_beta(ds.players, ds.facilities, ds.size(), iota),
                     conf.delta, iota, ds.size());
}

inline LinearModel fit_game_ridge(const Dataset& ds, const FeatureMap& map,
                                  const ConfidenceParams& conf) {
  if (ds.level != FeedbackLevel::Game)
    throw InputError("game ridge regression needs game-level feedback");
  if (map.players() != ds.players || map.facilities() != ds.facilities)
    throw InputError("feature map does not match the dataset");
  const int d = map.dim();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (const auto& rec : ds.records) {
    const Eigen::VectorXd u = map.aggregate(rec.action);
    V.noalias() += u * u.transpose();
    rhs += u * std::get<GameFeedback>(rec.feedback).total;
  }
  const double iota = conf.resolve_iota(ds.players, ds.facilities);
  return LinearModel(FeedbackLevel::Game, map, std::move(V), std::move(rhs),
                     game_beta(ds.players, ds.facilities, ds.size(), iota),
                     conf.delta, iota, ds.size());
}

/// r_i = <A_i(a), theta>, b_i = |A_i(a)|_{V^{-1}} sqrt(beta).
inline RewardEstimate agent_reward_and_bonus(const LinearModel& model,
                                             const JointAction& a, int i) {
  const auto u = model.features().player(a, i);
  return {model.predict(u), std::sqrt(model.quad_form(u) * model.beta())};
}

/// r_i = <A_i(a), theta>, b_i = max_j |A_j(a)|_{V^{-1}} sqrt(beta); the
/// bonus is the same for every player at a given joint action.
inline RewardEstimate game_reward_and_bonus(const LinearModel& model,
                                            const JointAction& a, int i) {
  const auto& map = model.features();
  const auto loads = map.loads(a);
  double worst = 0.0;
  for (int j = 0; j < map.players(); ++j)
    worst = std::max(worst, model.quad_form(map.player(a, j, loads)));
  return {model.predict(map.player(a, i, loads)),
          std::sqrt(worst * model.beta())};
}

/// Fitted estimator for any feedback level.
class EstimatorState {
 public:
  explicit EstimatorState(FacilityEstimate est) : impl_(std::move(est)) {}
  explicit EstimatorState(LinearModel model) : impl_(std::move(model)) {}

  // Fits the estimator matching the dataset's feedback level.
  static EstimatorState fit(const Dataset& ds, const ConfidenceParams& conf) {
    switch (ds.level) {
      case FeedbackLevel::Facility:
        return EstimatorState(fit_facility(ds, conf));
      case FeedbackLevel::Agent:
        return EstimatorState(
            fit_agent_ridge(ds, FeatureMap(ds.players, ds.facilities), conf));
      case FeedbackLevel::Game:
        return EstimatorState(
            fit_game_ridge(ds, FeatureMap(ds.players, ds.facilities), conf));
    }
    throw InputError("unknown feedback level");
  }

  FeedbackLevel level() const {
    if (std::holds_alternative<FacilityEstimate>(impl_))
      return FeedbackLevel::Facility;
    return std::get<LinearModel>(impl_).level();
  }

  int players() const {
    if (const auto* f = std::get_if<FacilityEstimate>(&impl_)) return f->players;
    return std::get<LinearModel>(impl_).features().players();
  }

  int facilities() const {
    if (const auto* f = std::get_if<FacilityEstimate>(&impl_)) return f->facilities;
    return std::get<LinearModel>(impl_).features().facilities();
  }

  const FacilityEstimate* facility() const {
    return std::get_if<FacilityEstimate>(&impl_);
  }
  const LinearModel* linear() const { return std::get_if<LinearModel>(&impl_); }

  RewardEstimate evaluate(const JointAction& a, int i) const {
    if (const auto* f = std::get_if<FacilityEstimate>(&impl_))
      return facility_reward_and_bonus(*f, a, i);
    const auto& lin = std::get<LinearModel>(impl_);
    return lin.level() == FeedbackLevel::Agent ? agent_reward_and_bonus(lin, a, i)
                                               : game_reward_and_bonus(lin, a, i);
  }

  // All players at once; shares the per-action work of the game-level bonus.
  std::vector<RewardEstimate> evaluate_all(const JointAction& a) const {
    const int m = players();
    std::vector<RewardEstimate> out(m);
    const auto* lin = linear();
    if (lin == nullptr || lin->level() == FeedbackLevel::Agent) {
      for (int i = 0; i < m; ++i) out[i] = evaluate(a, i);
      return out;
    }
    const auto& map = lin->features();
    const auto loads = map.loads(a);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto u = map.player(a, i, loads);
      out[i].reward = lin->predict(u);
      worst = std::max(worst, lin->quad_form(u));
    }
    const double bonus = std::sqrt(worst * lin->beta());
    for (auto& e : out) e.bonus = bonus;
    return out;
  }

 private:
  std::variant<FacilityEstimate, LinearModel> impl_;
};

/// True iff |r_i(a) - rhat_i(a)| <= b_i(a) for every player and joint action.
inline bool bonus_valid(const CongestionGame& game, const EstimatorState& est,
                        std::uint64_t cap = kDefaultEnumerationCap) {
  bool ok = true;
  for_each_joint_action(
      game,
      [&](std::uint64_t, const ActionProfile&, const JointAction& a) {
        if (!ok) return;
        const auto truth = mean_rewards(game, a);
        const auto est_all = est.evaluate_all(a);
        for (int i = 0; i < game.num_players(); ++i)
          if (std::abs(truth[i] - est_all[i].reward) > est_all[i].bonus) ok = false;
      },
      cap);
  return ok;
}

}  // namespace congame
