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

// congame: command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 infeasible coverage,
// 3 enumeration cap exceeded.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "congame.hpp"

namespace {

using namespace congame;

struct GameArg {
  CongestionGame game;
  std::optional<NamedInstance> instance;
};

// Built-in id or JSON file.
GameArg resolve_game(const std::string& spec) {
  if (std::filesystem::is_regular_file(spec)) return {game_from_json(read_json_file(spec)), {}};
  auto inst = build(spec);
  auto game = inst.game;
  return {std::move(game), std::move(inst)};
}

// Built-in instance policy, a named policy, or a JSON file.
ExplorationPolicy resolve_rho(const GameArg& g, const std::string& spec) {
  if (std::filesystem::is_regular_file(spec))
    return exploration_from_json(g.game, read_json_file(spec));
  if (g.instance && (spec == g.instance->id || spec == "instance")) return g.instance->rho;
  return named_rho(g.game, spec, g.instance ? &*g.instance : nullptr);
}

Dataset load_dataset(const std::string& path, const CongestionGame& game) {
  auto loaded = load(path, &game);
  if (loaded.game_hash_mismatch)
    std::cerr << "warning: " << path << " was collected from a different game\n";
  return std::move(loaded.dataset);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!(out << text)) throw InputError("cannot write " + path);
}

std::string fmt(double x) { return format_double(x); }

int cmd_validate(const std::string& game_spec, const std::string& rho_spec) {
  const auto g = resolve_game(game_spec);
  const auto& game = g.game;
  std::cout << "players=" << game.num_players() << "\n"
            << "facilities=" << game.num_facilities() << "\n"
            << "joint_actions=" << game.joint_action_count() << "\n"
            << "deterministic=" << (game.deterministic() ? "true" : "false") << "\n"
            << "game_hash=" << hash_hex(game_hash(game)) << "\n";
  const auto ne = enumerate_pure_ne(game);
  std::cout << "pure_ne=" << ne.size() << "\n";
  for (const auto& a : ne) std::cout << "ne " << a.to_string() << "\n";
  if (!rho_spec.empty()) {
    const auto rho = resolve_rho(g, rho_spec);
    std::cout << "rho_support=" << rho.size() << "\n";
  }
  return 0;
}

int cmd_collect(const std::string& game_spec, const std::string& rho_spec,
                std::size_t n, const std::string& level, std::uint64_t seed,
                const std::string& out) {
  const auto g = resolve_game(game_spec);
  const auto rho = resolve_rho(g, rho_spec);
  const auto ds = collect(g.game, rho, n, parse_level(level), seed);
  std::ostringstream buf;
  write_dataset(buf, ds);
  write_text(out, buf.str());
  return 0;
}

int cmd_fit(const std::string& game_spec, const std::string& dataset, double delta,
            const std::string& out) {
  Dataset ds;
  if (game_spec.empty()) {
    ds = load(dataset).dataset;
  } else {
    ds = load_dataset(dataset, resolve_game(game_spec).game);
  }
  const auto est = EstimatorState::fit(ds, ConfidenceParams{delta, std::nullopt});
  std::ostringstream buf;
  buf << "level=" << to_string(est.level()) << "\n"
      << "samples=" << ds.size() << "\n";
  if (const auto* fac = est.facility()) {
    buf << "iota=" << fmt(fac->iota) << "\n";
    buf << "f,n,count,mean,bonus\n";
    for (int f = 0; f < fac->facilities; ++f)
      for (int n = 1; n <= fac->players; ++n) {
        const auto c = fac->count(f, n);
        buf << f << ',' << n << ',' << c << ',' << fmt(fac->mean(f, n)) << ','
            << fmt(std::sqrt(fac->iota / static_cast<double>(std::max<long long>(c, 1))))
            << "\n";
      }
  } else {
    const auto* lin = est.linear();
    buf << "iota=" << fmt(lin->iota()) << "\n"
        << "beta=" << fmt(lin->beta()) << "\n";
    buf << "f,n,theta,width\n";
    const auto& map = lin->features();
    for (int f = 0; f < map.facilities(); ++f)
      for (int n = 1; n <= map.players(); ++n) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(map.dim());
        e[map.index(f, n)] = 1.0;
        buf << f << ',' << n << ',' << fmt(lin->theta()[map.index(f, n)]) << ','
            << fmt(std::sqrt(lin->quad_form(e) * lin->beta())) << "\n";
      }
  }
  write_text(out, buf.str());
  return 0;
}

int cmd_solve(const std::string& game_spec, const std::string& dataset, double delta,
              const std::string& out, bool oracle) {
  const auto g = resolve_game(game_spec);
  const auto ds = load_dataset(dataset, g.game);
  const auto est = EstimatorState::fit(ds, ConfidenceParams{delta, std::nullopt});
  SolverOptions opts;
  opts.workers = env_workers();
  const auto cert = surrogate_minimize(est, g.game, opts);
  json j;
  j["level"] = to_string(ds.level);
  j["samples"] = ds.size();
  j["delta"] = delta;
  j["policy"] = joint_action_to_json(cert.policy);
  j["surrogate_gap"] = cert.surrogate_gap;
  j["per_player"] = json::array();
  for (const auto& p : cert.per_player)
    j["per_player"].push_back({{"optimistic_best_response", p.optimistic_best_response},
                               {"pessimistic_value", p.pessimistic_value}});
  if (oracle) j["true_gap"] = pure_gap(g.game, cert.policy);
  write_text(out, j.dump(2) + "\n");
  return 0;
}

void print_report(std::ostream& os, const CoverageReport& r) {
  os << "kind=" << to_string(r.kind) << "\n"
     << "feasible=" << (r.feasible ? "true" : "false") << "\n"
     << "coefficient=" << fmt(r.coefficient) << "\n";
  if (r.witness.player >= 0)
    os << "witness_player=" << r.witness.player << "\n"
       << "witness_deviation=" << r.witness.deviation.to_string() << "\n";
  if (r.witness.facility >= 0)
    os << "witness_configuration=(" << r.witness.facility << "," << r.witness.load << ")\n";
  if (!r.witness.action.actions.empty())
    os << "witness_action=" << r.witness.action.to_string() << "\n";
  if (!r.uncovered.empty()) {
    os << "uncovered=";
    for (std::size_t k = 0; k < r.uncovered.size(); ++k)
      os << (k ? ";" : "") << "(" << r.uncovered[k].first << "," << r.uncovered[k].second << ")";
    os << "\n";
  }
}

int cmd_coverage(const std::string& game_spec, const std::string& rho_spec,
                 const std::string& dataset, const std::string& kind,
                 const std::string& ne_spec) {
  const auto g = resolve_game(game_spec);
  const auto& game = g.game;
  std::vector<JointAction> nes;
  if (ne_spec == "auto") {
    nes = enumerate_pure_ne(game);
  } else {
    nes.push_back(joint_action_from_json(read_json_file(ne_spec)));
    game.validate(nes.back());
    if (!is_pure_ne(game, nes.back()))
      throw InputError("supplied joint action is not a Nash equilibrium");
  }

  std::optional<ExplorationPolicy> rho;
  if (!rho_spec.empty()) rho = resolve_rho(g, rho_spec);
  const bool covariance = kind == "weak" || kind == "strong";
  const auto level = kind == "weak" ? FeedbackLevel::Agent : FeedbackLevel::Game;
  if (!rho && !(covariance && !dataset.empty()))
    throw InputError("--rho is required for kind " + kind);

  std::optional<Dataset> ds;
  Eigen::MatrixXd V;
  double n = 1.0;
  if (covariance) {
    if (!dataset.empty()) {
      ds = load_dataset(dataset, game);
      V = dataset_covariance(*ds, level);
      n = static_cast<double>(ds->size());
    } else {
      V = population_covariance(game, *rho, 1.0, level);
    }
  }

  std::ostringstream buf;
  buf << "mode=" << (covariance ? (ds ? "dataset" : "population") : "exact") << "\n";
  std::optional<CoverageReport> best;
  JointAction best_ne;
  for (const auto& ne : nes) {
    CoverageReport r;
    if (kind == "unilateral")
      r = unilateral_coefficient(game, *rho, ProductPolicy::pure(game, ne));
    else if (kind == "facility")
      r = facility_unilateral_coefficient(game, *rho, ProductPolicy::pure(game, ne));
    else
      r = covariance_domination_coefficient(game, V, n, ne, level);
    buf << "[ne " << ne.to_string() << "]\n";
    print_report(buf, r);
    // Smaller is better for density ratios, larger for covariance domination.
    const bool better =
        !best || (r.feasible && !best->feasible) ||
        (r.feasible == best->feasible &&
         (covariance ? r.coefficient > best->coefficient : r.coefficient < best->coefficient));
    if (better) {
      best = r;
      best_ne = ne;
    }
  }
  buf << "[selected]\n"
      << "ne=" << best_ne.to_string() << "\n";
  print_report(buf, *best);
  std::cout << buf.str();
  return 0;
}

int cmd_reproduce_separation(const std::string& which) {
  const auto level = parse_level(which);
  const char* ids[3][2] = {{"game1", "game2"}, {"game3", "game4"}, {"game5", "game6"}};
  const auto& pair = ids[static_cast<int>(level)];
  const auto a = build(pair[0]);
  const auto b = build(pair[1]);
  const auto r = separation_check(a, b, level);
  const auto mm = pure_minimax_gap(a.game, b.game);
  const double claimed = a.claimed_lower_bound.value_or(0.0);
  // The facility pair has no pure-output bound to check; see README.
  const bool bound_ok = level == FeedbackLevel::Facility || mm.value >= claimed;
  std::cout << "pair=" << pair[0] << "," << pair[1] << "\n"
            << "level=" << to_string(level) << "\n"
            << "same_statistics=" << (r.same_statistics ? "true" : "false") << "\n"
            << "disjoint_equilibria=" << (r.disjoint_equilibria ? "true" : "false") << "\n"
            << "stronger_level_distinguishes="
            << (r.stronger_level_distinguishes ? "true" : "false") << "\n"
            << "pure_minimax_gap=" << fmt(mm.value) << "\n"
            << "minimax_argmin=" << mm.argmin.to_string() << "\n"
            << "claimed_lower_bound=" << fmt(claimed) << "\n"
            << "result=" << (r.passed() && bound_ok ? "pass" : "fail") << "\n";
  return 0;
}

int cmd_reproduce_remark(int remark, int trials, double delta, std::uint64_t seed,
                         int players, int facilities, const std::string& csv) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  std::optional<NamedInstance> inst;
  std::size_t n = 0;
  double threshold = 0.0;
  if (remark == 44) {
    inst = remark44(players, facilities);
    n = remark44_sample_size(players, facilities, delta);
    threshold = remark44_threshold(players, facilities);
  } else if (remark == 54) {
    inst = remark54(players, facilities);
    n = remark54_sample_size(facilities, delta);
    threshold = remark54_threshold(facilities);
  } else {
    throw InputError("--remark must be 44 or 54");
  }
  const auto coeffs = remark_coefficients(*inst, n, trials, seed);
  int holds = 0;
  std::ostringstream rows;
  rows << "trial,seed,coefficient,threshold,holds\n";
  for (int t = 0; t < trials; ++t) {
    const bool ok = coeffs[t] >= threshold;
    holds += ok;
    rows << t << ',' << mix_seed(seed, static_cast<std::uint64_t>(t)) << ','
         << fmt(coeffs[t]) << ',' << fmt(threshold) << ',' << (ok ? 1 : 0) << "\n";
  }
  const double rate = static_cast<double>(holds) / trials;
  std::cout << "remark=" << remark << "\n"
            << "players=" << players << "\n"
            << "facilities=" << facilities << "\n"
            << "ne=" << inst->known_ne.at(0).to_string() << "\n"
            << "samples=" << n << "\n"
            << "threshold=" << fmt(threshold) << "\n"
            << "holds=" << holds << "/" << trials << "\n"
            << "result=" << (rate >= 0.95 ? "pass" : "fail") << "\n";
  if (!csv.empty()) write_text(csv, rows.str());
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_csv,
              const std::string& out_plot) {
  const auto spec = sweep_spec_from_json(read_json_file(spec_path));
  const auto table = run_sweep(spec, env_workers());
  if (!out_csv.empty()) emit_csv(table, out_csv);
  if (!out_plot.empty()) emit_svg(table, out_plot);
  std::cout << "n,median_true_gap,median_theory_bound\n";
  for (const auto& p : medians(table))
    std::cout << p.n << ',' << fmt(p.true_gap) << ',' << fmt(p.theory_bound) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline Nash equilibrium learning in congestion games"};
  app.require_subcommand(1);

  std::string game, rho, dataset, out, level = "facility", kind, ne = "auto";
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double delta = 0.1;
  bool oracle = false;

  auto* validate = app.add_subcommand("validate", "Check a game (and policy) and list its pure NEs");
  validate->add_option("--game", game, "Built-in id or game JSON")->required();
  validate->add_option("--rho", rho, "Exploration policy");

  auto* collect_cmd = app.add_subcommand("collect", "Sample an offline dataset");
  collect_cmd->add_option("--game", game)->required();
  collect_cmd->add_option("--rho", rho)->required();
  collect_cmd->add_option("--n", n, "Number of records")->required()->check(CLI::PositiveNumber);
  collect_cmd->add_option("--level", level)->check(CLI::IsMember({"facility", "agent", "game"}));
  collect_cmd->add_option("--seed", seed);
  collect_cmd->add_option("--out", out, "Output path (default stdout)");

  auto* fit = app.add_subcommand("fit", "Fit the estimator for a dataset");
  fit->add_option("--game", game, "Checked against the dataset's game hash");
  fit->add_option("--dataset", dataset)->required();
  fit->add_option("--delta", delta);
  fit->add_option("--out", out);

  auto* solve = app.add_subcommand("solve", "Run surrogate minimization");
  solve->add_option("--game", game)->required();
  solve->add_option("--dataset", dataset)->required();
  solve->add_option("--delta", delta);
  solve->add_option("--out", out);
  solve->add_flag("--oracle", oracle, "Also report the true gap");

  auto* coverage = app.add_subcommand("coverage", "Coverage coefficients");
  coverage->add_option("--game", game)->required();
  coverage->add_option("--rho", rho);
  coverage->add_option("--dataset", dataset);
  coverage->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"unilateral", "facility", "weak", "strong"}));
  coverage->add_option("--ne", ne, "auto or a joint-action JSON file");

  auto* reproduce = app.add_subcommand("reproduce", "Separation and coverage examples");
  std::string separation, csv;
  int remark = 0, trials = 100, players = 2, facilities = 3;
  auto* sep_opt = reproduce->add_option("--separation", separation)
                      ->check(CLI::IsMember({"facility", "agent", "game"}));
  auto* rem_opt = reproduce->add_option("--remark", remark)->check(CLI::IsMember({44, 54}));
  sep_opt->excludes(rem_opt);
  reproduce->add_option("--trials", trials)->check(CLI::PositiveNumber);
  reproduce->add_option("--delta", delta);
  reproduce->add_option("--seed", seed);
  reproduce->add_option("--players", players)->check(CLI::Range(1, 6));
  reproduce->add_option("--facilities", facilities)->check(CLI::Range(1, 6));
  reproduce->add_option("--csv", csv, "Per-seed coefficients");

  auto* sweep = app.add_subcommand("sweep", "Convergence sweep");
  std::string spec, out_csv, out_plot;
  sweep->add_option("--spec", spec)->required();
  sweep->add_option("--out-csv", out_csv);
  sweep->add_option("--out-plot", out_plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(game, rho);
    if (*collect_cmd) return cmd_collect(game, rho, n, level, seed, out);
    if (*fit) return cmd_fit(game, dataset, delta, out);
    if (*solve) return cmd_solve(game, dataset, delta, out, oracle);
    if (*coverage) return cmd_coverage(game, rho, dataset, kind, ne);
    if (*reproduce) {
      if (!separation.empty()) return cmd_reproduce_separation(separation);
      if (remark != 0)
        return cmd_reproduce_remark(remark, trials, delta, seed, players, facilities, csv);
      throw InputError("reproduce needs --separation or --remark");
    }
    if (*sweep) return cmd_sweep(spec, out_csv, out_plot);
  } catch (const CoverageRefusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    for (const auto& r : e.reports()) print_report(std::cerr, r);
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
