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
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "congame/error.hpp"
#include "congame/format.hpp"
#include "congame/game.hpp"
#include "congame/game_io.hpp"
#include "congame/policy.hpp"
#include "congame/rng.hpp"

namespace congame {

// Information order: Facility reveals the most, Game the least.
enum class FeedbackLevel { Facility = 0, Agent = 1, Game = 2 };

inline const char* to_string(FeedbackLevel level) {
  switch (level) {
    case FeedbackLevel::Facility: return "facility";
    case FeedbackLevel::Agent: return "agent";
    case FeedbackLevel::Game: return "game";
  }
  return "?";
}

inline FeedbackLevel parse_level(std::string_view s) {
  if (s == "facility") return FeedbackLevel::Facility;
  if (s == "agent") return FeedbackLevel::Agent;
  if (s == "game") return FeedbackLevel::Game;
  throw InputError("unknown feedback level: " + std::string(s));
}

struct FacilityFeedback {
  std::map<int, double> rewards;  // f -> r^{f,k} for f in the union of a^k
  friend bool operator==(const FacilityFeedback&,
                         const FacilityFeedback&) = default;
};

struct AgentFeedback {
  std::vector<double> rewards;  // r_i^k
  friend bool operator==(const AgentFeedback&, const AgentFeedback&) = default;
};

struct GameFeedback {
  double total = 0.0;  // sum_i r_i^k
  friend bool operator==(const GameFeedback&, const GameFeedback&) = default;
};

using FeedbackRecord = std::variant<FacilityFeedback, AgentFeedback, GameFeedback>;

inline FeedbackLevel level_of(const FeedbackRecord& r) {
  return static_cast<FeedbackLevel>(r.index());
}

struct Record {
  JointAction action;
  FeedbackRecord feedback;
  friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
  FeedbackLevel level = FeedbackLevel::Facility;
  int players = 0;
  int facilities = 0;
  std::uint64_t seed = 0;
  std::uint64_t game_hash = 0;
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Coarsens one record. Agent totals sum facility rewards in increasing
/// facility order; the game total sums agent totals in player order.
inline FeedbackRecord project_record(const JointAction& a,
                                     const FeedbackRecord& r,
                                     FeedbackLevel target) {
  const auto from = level_of(r);
  if (static_cast<int>(target) < static_cast<int>(from))
    throw InputError(std::string("cannot project ") + to_string(from) +
                     " feedback to the more informative " +
                     to_string(target) + " level");
  if (target == from) return r;
  AgentFeedback agent;
  if (const auto* fac = std::get_if<FacilityFeedback>(&r)) {
    agent.rewards.assign(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i].for_each([&](int f) { agent.rewards[i] += fac->rewards.at(f); });
    if (target == FeedbackLevel::Agent) return agent;
  } else {
    agent = std::get<AgentFeedback>(r);
  }
  GameFeedback total;
  for (double x : agent.rewards) total.total += x;
  return total;
}

inline Dataset project(const Dataset& ds, FeedbackLevel target) {
  Dataset out = ds;
  out.level = target;
  for (auto& rec : out.records)
    rec.feedback = project_record(rec.action, rec.feedback, target);
  return out;
}

/// n i.i.d. joint actions from rho with sampled rewards, projected to
/// `level`. The random stream per record is one uniform for the action
/// (inverse CDF over rho's support in order) followed by the draws of
/// sample_rewards, so the stream does not depend on the level.
inline Dataset collect(const CongestionGame& game,
                       const ExplorationPolicy& rho, std::size_t n,
                       FeedbackLevel level, std::uint64_t seed) {
  if (n < 1) throw InputError("dataset size must be at least 1");
  if (rho.size() == 0) throw InputError("exploration policy is empty");
  for (const auto& [a, p] : rho.support()) game.validate(a);
  std::vector<double> cdf;
  double acc = 0.0;
  for (const auto& entry : rho.support()) cdf.push_back(acc += entry.second);

  Dataset ds;
  ds.level = level;
  ds.players = game.num_players();
  ds.facilities = game.num_facilities();
  ds.seed = seed;
  ds.game_hash = game_hash(game);
  ds.records.reserve(n);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto& a = rho.support()[static_cast<std::size_t>(it - cdf.begin())].first;
    FacilityFeedback fb{sample_rewards(game, a, rng)};
    ds.records.push_back({a, project_record(a, fb, level)});
  }
  return ds;
}

// Text format, one record per line:
//
//   congame-dataset 1
//   level=facility n=3 seed=7 game_hash=0123456789abcdef players=2 facilities=2
//   0,1|0 : 0=0.5 1=-1          (facility: f=reward pairs)
//   0,1|0 : -0.5 0.5            (agent: one reward per player)
//   0,1|0 : 0                   (game: the total)
//
// Players are separated by '|', facilities by ','; '-' is the empty action.
// Rewards use the shortest decimal form that round-trips exactly.

namespace detail {

inline std::string action_token(const ActionSet& a) {
  if (a.empty()) return "-";
  std::string s;
  a.for_each([&](int f) {
    if (!s.empty()) s += ',';
    s += std::to_string(f);
  });
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

inline void write_dataset(std::ostream& out, const Dataset& ds) {
  out << "congame-dataset 1\n";
  out << "level=" << to_string(ds.level) << " n=" << ds.size()
      << " seed=" << ds.seed << " game_hash=" << hash_hex(ds.game_hash)
      << " players=" << ds.players << " facilities=" << ds.facilities << "\n";
  for (const auto& rec : ds.records) {
    for (std::size_t i = 0; i < rec.action.size(); ++i) {
      if (i) out << '|';
      out << detail::action_token(rec.action[i]);
    }
    out << " :";
    std::visit(
        [&](const auto& fb) {
          using T = std::decay_t<decltype(fb)>;
          if constexpr (std::is_same_v<T, FacilityFeedback>) {
            for (const auto& [f, r] : fb.rewards)
              out << ' ' << f << '=' << format_double(r);
          } else if constexpr (std::is_same_v<T, AgentFeedback>) {
            for (double r : fb.rewards) out << ' ' << format_double(r);
          } else {
            out << ' ' << format_double(fb.total);
          }
        },
        rec.feedback);
    out << '\n';
  }
}

inline void save(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  write_dataset(out, ds);
  if (!out) throw InputError("write failed: " + path);
}

inline Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != "congame-dataset 1")
    throw FormatError(lineno == 0 ? 1 : lineno, "missing dataset header");
  if (!next_line()) throw FormatError(2, "missing dataset metadata line");

  Dataset ds;
  std::size_t n = 0;
  bool have[6] = {};
  for (auto tok : detail::split_ws(line)) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(lineno, "expected key=value, got '" +
                                    std::string(tok) + "'");
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    bool ok = true;
    if (key == "level") {
      try {
        ds.level = parse_level(val);
      } catch (const InputError&) {
        ok = false;
      }
      have[0] = true;
    } else if (key == "n") {
      ok = try_parse_int(val, n);
      have[1] = true;
    } else if (key == "seed") {
      ok = try_parse_int(val, ds.seed);
      have[2] = true;
    } else if (key == "game_hash") {
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(),
                                     ds.game_hash, 16);
      ok = ec == std::errc() && p == val.data() + val.size() && !val.empty();
      have[3] = true;
    } else if (key == "players") {
      ok = try_parse_int(val, ds.players) && ds.players >= 1;
      have[4] = true;
    } else if (key == "facilities") {
      ok = try_parse_int(val, ds.facilities) && ds.facilities >= 1 &&
           ds.facilities <= kMaxFacilities;
      have[5] = true;
    } else {
      throw FormatError(lineno, "unknown key '" + std::string(key) + "'");
    }
    if (!ok)
      throw FormatError(lineno, "bad value for '" + std::string(key) + "'");
  }
  for (bool h : have)
    if (!h) throw FormatError(lineno, "metadata line is incomplete");

  ds.records.reserve(n);
  while (ds.records.size() < n) {
    if (!next_line())
      throw FormatError(lineno + 1,
                        "truncated dataset: expected " + std::to_string(n) +
                            " records, found " +
                            std::to_string(ds.records.size()));
    const std::string_view sv(line);
    const auto colon = sv.find(" :");
    if (colon == std::string_view::npos)
      throw FormatError(lineno, "record needs 'actions : feedback'");
    Record rec;
    const auto players = detail::split(sv.substr(0, colon), '|');
    if (static_cast<int>(players.size()) != ds.players)
      throw FormatError(lineno, "record has " +
                                    std::to_string(players.size()) +
                                    " actions, expected " +
                                    std::to_string(ds.players));
    for (auto tok : players) {
      ActionSet a;
      if (tok != "-") {
        for (auto ftok : detail::split(tok, ',')) {
          int f = -1;
          if (!try_parse_int(ftok, f) || f < 0 || f >= ds.facilities ||
              a.contains(f))
            throw FormatError(lineno, "bad facility '" + std::string(ftok) +
                                          "'");
          a.insert(f);
        }
      }
      rec.action.actions.push_back(a);
    }
    const auto fields = detail::split_ws(sv.substr(colon + 2));
    switch (ds.level) {
      case FeedbackLevel::Facility: {
        FacilityFeedback fb;
        for (auto tok : fields) {
          const auto eq = tok.find('=');
          int f = -1;
          double r = 0.0;
          if (eq == std::string_view::npos ||
              !try_parse_int(tok.substr(0, eq), f) ||
              !try_parse_double(tok.substr(eq + 1), r))
            throw FormatError(lineno, "bad facility reward '" +
                                          std::string(tok) + "'");
          fb.rewards[f] = r;
        }
        const auto used = rec.action.used_facilities();
        if (static_cast<int>(fb.rewards.size()) != used.size())
          throw FormatError(lineno, "facility rewards must cover exactly the "
                                    "used facilities");
        for (const auto& [f, r] : fb.rewards)
          if (!used.contains(f))
            throw FormatError(lineno, "reward for unused facility " +
                                          std::to_string(f));
        rec.feedback = std::move(fb);
        break;
      }
      case FeedbackLevel::Agent: {
        AgentFeedback fb;
        for (auto tok : fields) {
          double r = 0.0;
          if (!try_parse_double(tok, r))
            throw FormatError(lineno, "bad reward '" + std::string(tok) + "'");
          fb.rewards.push_back(r);
        }
        if (static_cast<int>(fb.rewards.size()) != ds.players)
          throw FormatError(lineno, "agent record needs one reward per player");
        rec.feedback = std::move(fb);
        break;
      }
      case FeedbackLevel::Game: {
        double r = 0.0;
        if (fields.size() != 1 || !try_parse_double(fields[0], r))
          throw FormatError(lineno, "game record needs a single total");
        rec.feedback = GameFeedback{r};
        break;
      }
    }
    ds.records.push_back(std::move(rec));
  }
  while (next_line())
    if (!line.empty())
      throw FormatError(lineno, "unexpected content after the last record");
  return ds;
}

struct LoadedDataset {
  Dataset dataset;
  // Set when an expected game was supplied and its hash differs.
  bool game_hash_mismatch = false;
};

inline LoadedDataset load(const std::string& path,
                          const CongestionGame* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  LoadedDataset out{read_dataset(in), false};
  if (expected != nullptr)
    out.game_hash_mismatch = out.dataset.game_hash != game_hash(*expected);
  return out;
}

}  // namespace congame
