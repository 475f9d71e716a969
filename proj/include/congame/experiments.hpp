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
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "congame/coverage.hpp"
#include "congame/dataset.hpp"
#include "congame/estimators.hpp"
#include "congame/format.hpp"
#include "congame/game_io.hpp"
#include "congame/instances.hpp"
#include "congame/oracle.hpp"
#include "congame/rng.hpp"
#include "congame/solver.hpp"

namespace congame {

/// Coverage at the requested level fails for every pure NE.
class CoverageRefusal : public std::runtime_error {
 public:
  CoverageRefusal(const std::string& what, std::vector<CoverageReport> reports)
      : std::runtime_error(what), reports_(std::move(reports)) {}
  const std::vector<CoverageReport>& reports() const { return reports_; }

 private:
  std::vector<CoverageReport> reports_;
};

/// Exploration policy by name, built around the game's first pure NE, or
/// the instance's own policy for "instance".
inline ExplorationPolicy named_rho(const CongestionGame& game, std::string_view name,
                                   const NamedInstance* inst = nullptr) {
  if (name == "instance") {
    if (!inst) throw InputError("rho 'instance' needs a built-in instance");
    return inst->rho;
  }
  const auto ne = enumerate_pure_ne(game);
  if (ne.empty()) throw InputError("game has no pure NE");
  if (name == "one-unit-deviation") return one_unit_deviation_rho(game, ne.front());
  if (name == "single-toggle") return single_toggle_rho(game, ne.front());
  if (name == "configuration") return configuration_rho(game, ne.front());
  throw InputError("unknown exploration policy '" + std::string(name) + "'");
}

struct SweepSpec {
  std::string label;
  CongestionGame game;
  ExplorationPolicy rho;
  FeedbackLevel level = FeedbackLevel::Facility;
  std::vector<std::size_t> n_grid;
  int trials = 1;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

inline void validate(const SweepSpec& spec) {
  if (spec.n_grid.empty()) throw InputError("n_grid is empty");
  if (spec.n_grid.front() < 1) throw InputError("n_grid entries must be >= 1");
  for (std::size_t k = 1; k < spec.n_grid.size(); ++k)
    if (spec.n_grid[k] <= spec.n_grid[k - 1])
      throw InputError("n_grid must be strictly increasing");
  if (spec.trials < 1) throw InputError("trials must be >= 1");
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) throw InputError("delta must lie in (0, 1)");
}

// {"instance": "game2" | "game": {...}, "rho": "instance" | name | {...},
//  "noise": 0.2, "level": "facility", "n_grid": [...], "trials": 20,
//  "delta": 0.1, "seed": 7}
inline SweepSpec sweep_spec_from_json(const json& j) {
  std::optional<NamedInstance> inst;
  std::optional<CongestionGame> game;
  if (j.contains("instance")) {
    inst = build(j.at("instance").get<std::string>());
    game = inst->game;
  } else if (j.contains("game")) {
    game = game_from_json(j.at("game"));
  } else {
    throw InputError("sweep spec needs \"instance\" or \"game\"");
  }
  if (j.contains("noise")) {
    const double amp = detail::json_number(j.at("noise"), "noise");
    if (inst) {
      inst = noisy_variant(*inst, amp);
      game = inst->game;
    } else {
      auto t = std::vector<double>(game->mean_table().begin(), game->mean_table().end());
      game = CongestionGame(game->num_players(), game->num_facilities(),
                            game->action_spaces(), std::move(t),
                            std::vector<NoiseSpec>(game->num_facilities(),
                                                   NoiseSpec::bounded(amp)));
    }
  }
  const json rho_j = j.value("rho", json(inst ? "instance" : ""));
  auto rho = rho_j.is_string()
                 ? named_rho(*game, rho_j.get<std::string>(), inst ? &*inst : nullptr)
                 : exploration_from_json(*game, rho_j);
  FeedbackLevel level = inst ? inst->level : FeedbackLevel::Facility;
  if (j.contains("level")) level = parse_level(j.at("level").get<std::string>());
  SweepSpec spec{inst ? inst->id : std::string("game"), std::move(*game), std::move(rho),
                 level, {}, 1, 0.1, 0};
  for (const auto& n : detail::require(j, "n_grid")) {
    if (!n.is_number_integer() || n.get<long long>() < 1)
      throw InputError("n_grid entries must be integers >= 1");
    spec.n_grid.push_back(n.get<std::size_t>());
  }
  spec.trials = j.value("trials", 1);
  spec.delta = j.contains("delta") ? detail::json_number(j.at("delta"), "delta") : 0.1;
  spec.seed = j.value("seed", std::uint64_t{0});
  validate(spec);
  return spec;
}

struct SweepRow {
  std::size_t n = 0;
  int trial = 0;
  double true_gap = 0.0;
  double surrogate_gap = 0.0;
  double theory_bound = 0.0;
  double coefficient = 0.0;
  bool bonus_valid = false;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  friend bool operator==(const SweepTable&, const SweepTable&) = default;
};

struct FeasibilitySummary {
  bool feasible = false;
  double coefficient = 0.0;  // facility: smallest feasible C; else largest population C
  std::vector<CoverageReport> reports;  // one per pure NE
};

/// Coverage check run before a sweep. Facility level uses the facility
/// unilateral coefficient; agent and game levels use the population
/// covariance, for which the coefficient does not depend on n.
inline FeasibilitySummary check_feasibility(const CongestionGame& game,
                                            const ExplorationPolicy& rho,
                                            FeedbackLevel level) {
  FeasibilitySummary s;
  const auto nes = enumerate_pure_ne(game);
  if (level == FeedbackLevel::Facility) {
    s.coefficient = std::numeric_limits<double>::infinity();
    for (const auto& ne : nes) {
      s.reports.push_back(
          facility_unilateral_coefficient(game, rho, ProductPolicy::pure(game, ne)));
      if (s.reports.back().feasible) {
        s.feasible = true;
        s.coefficient = std::min(s.coefficient, s.reports.back().coefficient);
      }
    }
  } else {
    const auto V = population_covariance(game, rho, 1.0, level);
    for (const auto& ne : nes) {
      s.reports.push_back(covariance_domination_coefficient(game, V, 1.0, ne, level));
      if (s.reports.back().feasible) {
        s.feasible = true;
        s.coefficient = std::max(s.coefficient, s.reports.back().coefficient);
      }
    }
  }
  return s;
}

// 8 sqrt(m + 1) C iota F / sqrt(n)
inline double facility_theory_bound(int m, int F, double C, double iota, std::size_t n) {
  return 8.0 * std::sqrt(m + 1.0) * C * iota * F / std::sqrt(static_cast<double>(n));
}

// 4 sqrt(m F beta / (C n)); infinite when C = 0.
inline double linear_theory_bound(int m, int F, double beta, double C, std::size_t n) {
  if (!(C > 0.0)) return std::numeric_limits<double>::infinity();
  return 4.0 * std::sqrt(m * static_cast<double>(F) * beta / (C * static_cast<double>(n)));
}

/// CONGAME_WORKERS if set to a positive integer, else 1.
inline unsigned env_workers() {
  const char* v = std::getenv("CONGAME_WORKERS");
  unsigned w = 0;
  if (v && try_parse_int(std::string_view(v), w) && w > 0) return w;
  return 1;
}

/// For each trial one dataset of the largest n is drawn from seed
/// mix_seed(seed, trial); each grid point uses its first n records.
inline SweepTable run_sweep(const SweepSpec& spec, unsigned workers = 1) {
  validate(spec);
  const auto& game = spec.game;
  const int m = game.num_players();
  const int F = game.num_facilities();
  require_enumerable(game.joint_action_count(), kDefaultEnumerationCap, "sweep");
  const auto feas = check_feasibility(game, spec.rho, spec.level);
  if (!feas.feasible)
    throw CoverageRefusal(std::string("coverage is infeasible at ") +
                              to_string(spec.level) + " level for every pure NE",
                          feas.reports);
  const auto nes = enumerate_pure_ne(game);
  const ConfidenceParams conf{spec.delta, std::nullopt};
  const double iota = conf.resolve_iota(m, F);
  const std::size_t g = spec.n_grid.size();

  std::vector<SweepRow> rows(g * spec.trials);
  auto run_trial = [&](int t) {
    const auto full = collect(game, spec.rho, spec.n_grid.back(), spec.level,
                              mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
    for (std::size_t k = 0; k < g; ++k) {
      const std::size_t n = spec.n_grid[k];
      Dataset ds = full;
      ds.records.resize(n);
      const auto est = EstimatorState::fit(ds, conf);
      const auto cert = surrogate_minimize(est, game);
      SweepRow row;
      row.n = n;
      row.trial = t;
      row.true_gap = pure_gap(game, cert.policy);
      row.surrogate_gap = cert.surrogate_gap;
      row.bonus_valid = bonus_valid(game, est);
      if (spec.level == FeedbackLevel::Facility) {
        row.coefficient = feas.coefficient;
        row.theory_bound = facility_theory_bound(m, F, feas.coefficient, iota, n);
      } else {
        const auto& V = est.linear()->covariance();
        for (const auto& ne : nes)
          row.coefficient = std::max(
              row.coefficient,
              covariance_domination_coefficient(game, V, static_cast<double>(n), ne,
                                                spec.level)
                  .coefficient);
        row.theory_bound = linear_theory_bound(m, F, est.linear()->beta(),
                                               row.coefficient, n);
      }
      rows[k * spec.trials + t] = row;
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, spec.trials));
  if (workers == 1) {
    for (int t = 0; t < spec.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int t; (t = next.fetch_add(1)) < spec.trials;) {
          try {
            run_trial(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return {std::move(rows)};
}

inline constexpr const char* kSweepCsvHeader =
    "n,trial,true_gap,surrogate_gap,theory_bound,coefficient,bonus_valid";

inline void write_csv(std::ostream& out, const SweepTable& table) {
  if (table.rows.empty()) throw InputError("sweep table is empty");
  out << kSweepCsvHeader << '\n';
  for (const auto& r : table.rows)
    out << r.n << ',' << r.trial << ',' << format_double(r.true_gap) << ','
        << format_double(r.surrogate_gap) << ',' << format_double(r.theory_bound) << ','
        << format_double(r.coefficient) << ',' << (r.bonus_valid ? 1 : 0) << '\n';
}

inline SweepTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader)
    throw FormatError(1, "expected sweep CSV header");
  SweepTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 7) throw FormatError(lineno, "expected 7 fields");
    SweepRow r;
    const bool ok = try_parse_int(f[0], r.n) && try_parse_int(f[1], r.trial) &&
                    try_parse_double(f[2], r.true_gap) &&
                    try_parse_double(f[3], r.surrogate_gap) &&
                    try_parse_double(f[4], r.theory_bound) &&
                    try_parse_double(f[5], r.coefficient) && (f[6] == "0" || f[6] == "1");
    if (!ok) throw FormatError(lineno, "malformed sweep row");
    r.bonus_valid = f[6] == "1";
    table.rows.push_back(r);
  }
  if (table.rows.empty()) throw FormatError(lineno, "sweep CSV has no rows");
  return table;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

struct MedianPoint {
  std::size_t n = 0;
  double true_gap = 0.0;
  double theory_bound = 0.0;
};

/// Per-n medians over trials, in increasing n.
inline std::vector<MedianPoint> medians(const SweepTable& table) {
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_n;
  for (const auto& r : table.rows) {
    by_n[r.n].first.push_back(r.true_gap);
    by_n[r.n].second.push_back(r.theory_bound);
  }
  std::vector<MedianPoint> out;
  for (auto& [n, v] : by_n) out.push_back({n, median(v.first), median(v.second)});
  return out;
}

/// Log-log plot of the median true gap and median bound against n. Zero
/// gaps sit on the bottom edge; infinite bounds are left out.
inline void write_svg(std::ostream& out, const SweepTable& table) {
  if (table.rows.empty()) throw InputError("sweep table is empty");
  const auto pts = medians(table);
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;

  double ylo = std::numeric_limits<double>::infinity(), yhi = 0.0;
  for (const auto& p : pts)
    for (double y : {p.true_gap, p.theory_bound})
      if (y > 0.0 && std::isfinite(y)) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
      }
  if (!(yhi > 0.0)) ylo = yhi = 1.0;
  const double y0 = std::floor(std::log10(ylo)) - (ylo == yhi ? 1 : 0);
  const double y1 = std::ceil(std::log10(yhi)) + (std::ceil(std::log10(yhi)) == y0 ? 1 : 0);
  const double x0 = std::floor(std::log10(static_cast<double>(pts.front().n)));
  double x1 = std::ceil(std::log10(static_cast<double>(pts.back().n)));
  if (x1 <= x0) x1 = x0 + 1;

  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto px = [&](double n) { return L + (std::log10(n) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) {
    const double ly = y > 0.0 ? std::log10(y) : y0;
    return T + (y1 - ly) / (y1 - y0) * (H - T - B);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
    const auto x = num(px(std::pow(10.0, e)));
    out << "<line x1=\"" << x << "\" y1=\"" << H - B << "\" x2=\"" << x << "\" y2=\""
        << H - B + 5 << "\" stroke=\"black\"/>"
        << "<text x=\"" << x << "\" y=\"" << H - B + 20
        << "\" text-anchor=\"middle\" font-size=\"12\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const auto y = num(py(std::pow(10.0, e)));
    out << "<line x1=\"" << L - 5 << "\" y1=\"" << y << "\" x2=\"" << L << "\" y2=\"" << y
        << "\" stroke=\"black\"/>"
        << "<text x=\"" << L - 8 << "\" y=\"" << y
        << "\" text-anchor=\"end\" font-size=\"12\">1e" << e << "</text>\n";
  }
  out << "<text x=\"" << num(L + (W - L - R) / 2) << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">n</text>\n";

  auto series = [&](const char* id, const char* color, auto value) {
    out << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& p : pts) {
      const double v = value(p);
      if (!std::isfinite(v)) continue;
      out << (first ? "" : " ") << num(px(static_cast<double>(p.n))) << ',' << num(py(v));
      first = false;
    }
    out << "\"/>\n";
  };
  series("median-gap", "#1f77b4", [](const MedianPoint& p) { return p.true_gap; });
  series("theory-bound", "#d62728", [](const MedianPoint& p) { return p.theory_bound; });
  out << "<text x=\"" << L + 10 << "\" y=\"" << T + 16
      << "\" font-size=\"12\" fill=\"#1f77b4\">median true gap</text>\n";
  out << "<text x=\"" << L + 10 << "\" y=\"" << T + 32
      << "\" font-size=\"12\" fill=\"#d62728\">median bound</text>\n";
  out << "</svg>\n";
}

inline void emit_csv(const SweepTable& table, const std::string& path) {
  std::ostringstream buf;
  write_csv(buf, table);
  std::ofstream out(path, std::ios::binary);
  if (!(out << buf.str())) throw InputError("cannot write " + path);
}

inline void emit_svg(const SweepTable& table, const std::string& path) {
  std::ostringstream buf;
  write_svg(buf, table);
  std::ofstream out(path, std::ios::binary);
  if (!(out << buf.str())) throw InputError("cannot write " + path);
}

}  // namespace congame
