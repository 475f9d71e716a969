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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "congame/error.hpp"
#include "congame/format.hpp"
#include "congame/game.hpp"
#include "congame/policy.hpp"

namespace congame {

// JSON documents for games, exploration policies and joint actions.
//
// Game:
//   {
//     "players": 2,
//     "facilities": 2,
//     "actions": "full" | [[[0], [1], [0, 1], []], ...],   // per player
//     "rewards": [[f, n, mean], ...],                      // every f, n in [1, m]
//     "noise": {"kind": "none"} |
//              {"kind": "bounded", "amplitude": 0.2 | [per facility]}
//   }
// Numbers may also be given as "p/q" strings. The canonical form written by
// game_to_json lists every action explicitly and every noise amplitude.
//
// Exploration policy:
//   {"support": [{"actions": [[0, 1], [0]], "p": "1/3"}, ...]}
// or a product form expanded on load:
//   {"product": [[{"action": [0], "p": 0.5}, ...], ...]}     // per player

using json = nlohmann::json;

namespace detail {

inline double json_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    double num = 0.0, den = 1.0;
    bool ok = slash == std::string::npos
                  ? try_parse_double(s, num)
                  : try_parse_double(std::string_view(s).substr(0, slash),
                                     num) &&
                        try_parse_double(std::string_view(s).substr(slash + 1),
                                         den);
    if (ok && den != 0.0) return num / den;
  }
  throw FormatError(0, where + ": expected a number or \"p/q\"");
}

inline ActionSet json_action(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(0, where + ": action must be an array");
  std::vector<int> fs;
  for (const auto& f : j) {
    if (!f.is_number_integer())
      throw FormatError(0, where + ": facility indices must be integers");
    fs.push_back(f.get<int>());
  }
  try {
    return ActionSet::from_facilities(fs);
  } catch (const InputError& e) {
    throw FormatError(0, where + ": " + e.what());
  }
}

inline json action_json(const ActionSet& a) { return json(a.facilities()); }

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(0, std::string("missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace detail

inline JointAction joint_action_from_json(const json& j) {
  if (!j.is_array()) throw FormatError(0, "joint action must be an array");
  JointAction a;
  for (std::size_t i = 0; i < j.size(); ++i)
    a.actions.push_back(
        detail::json_action(j[i], "player " + std::to_string(i)));
  return a;
}

inline json joint_action_to_json(const JointAction& a) {
  json j = json::array();
  for (const auto& ai : a.actions) j.push_back(detail::action_json(ai));
  return j;
}

inline CongestionGame game_from_json(const json& j) {
  using detail::require;
  const auto& players = require(j, "players");
  const auto& facilities = require(j, "facilities");
  if (!players.is_number_integer() || !facilities.is_number_integer())
    throw FormatError(0, "players and facilities must be integers");
  const int m = players.get<int>();
  const int F = facilities.get<int>();
  if (m < 1 || F < 1 || F > kMaxFacilities)
    throw FormatError(0, "players must be >= 1 and facilities in [1, 63]");

  std::vector<std::vector<ActionSet>> spaces;
  const auto& actions = require(j, "actions");
  if (actions.is_string()) {
    if (actions.get<std::string>() != "full")
      throw FormatError(0, "actions must be \"full\" or a list");
    if (F > 20) throw FormatError(0, "\"full\" action spaces need F <= 20");
    std::vector<ActionSet> space;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << F); ++mask)
      space.push_back(ActionSet::from_mask(mask));
    spaces.assign(m, space);
  } else {
    if (!actions.is_array() || static_cast<int>(actions.size()) != m)
      throw FormatError(0, "actions must list one action space per player");
    for (int i = 0; i < m; ++i) {
      std::vector<ActionSet> space;
      if (!actions[i].is_array())
        throw FormatError(0, "player " + std::to_string(i) +
                                 " action space must be a list");
      for (const auto& a : actions[i])
        space.push_back(
            detail::json_action(a, "player " + std::to_string(i)));
      spaces.push_back(std::move(space));
    }
  }

  std::vector<double> means(static_cast<std::size_t>(F) * m, 0.0);
  std::vector<bool> seen(means.size(), false);
  const auto& rewards = require(j, "rewards");
  if (!rewards.is_array()) throw FormatError(0, "rewards must be a list");
  for (const auto& row : rewards) {
    if (!row.is_array() || row.size() != 3 || !row[0].is_number_integer() ||
        !row[1].is_number_integer())
      throw FormatError(0, "reward rows must be [facility, n, mean]");
    const int f = row[0].get<int>();
    const int n = row[1].get<int>();
    if (f < 0 || f >= F || n < 1 || n > m)
      throw FormatError(0, "reward row (" + std::to_string(f) + ", " +
                               std::to_string(n) + ") out of range");
    const auto idx = static_cast<std::size_t>(f) * m + (n - 1);
    if (seen[idx])
      throw FormatError(0, "duplicate reward row (" + std::to_string(f) +
                               ", " + std::to_string(n) + ")");
    seen[idx] = true;
    means[idx] = detail::json_number(row[2], "reward mean");
  }
  for (std::size_t idx = 0; idx < seen.size(); ++idx)
    if (!seen[idx])
      throw FormatError(0, "missing reward row (" + std::to_string(idx / m) +
                               ", " + std::to_string(idx % m + 1) + ")");

  std::vector<NoiseSpec> noise;
  if (j.contains("noise")) {
    const auto& nj = j.at("noise");
    const auto kind = detail::require(nj, "kind");
    if (kind == "none") {
    } else if (kind == "bounded") {
      const auto& amp = require(nj, "amplitude");
      if (amp.is_array()) {
        if (static_cast<int>(amp.size()) != F)
          throw FormatError(0, "noise amplitude list must have F entries");
        for (const auto& a : amp)
          noise.push_back(
              NoiseSpec::bounded(detail::json_number(a, "noise amplitude")));
      } else {
        noise.assign(F, NoiseSpec::bounded(
                            detail::json_number(amp, "noise amplitude")));
      }
    } else {
      throw FormatError(0, "noise kind must be \"none\" or \"bounded\"");
    }
  }
  try {
    return CongestionGame(m, F, std::move(spaces), std::move(means),
                          std::move(noise));
  } catch (const InputError& e) {
    throw FormatError(0, e.what());
  }
}

/// Canonical JSON form of a game.
inline json game_to_json(const CongestionGame& game) {
  json j;
  j["players"] = game.num_players();
  j["facilities"] = game.num_facilities();
  json actions = json::array();
  for (int i = 0; i < game.num_players(); ++i) {
    json space = json::array();
    for (const auto& a : game.actions(i)) space.push_back(detail::action_json(a));
    actions.push_back(std::move(space));
  }
  j["actions"] = std::move(actions);
  json rewards = json::array();
  for (int f = 0; f < game.num_facilities(); ++f)
    for (int n = 1; n <= game.num_players(); ++n)
      rewards.push_back(json::array({f, n, game.mean_reward(f, n)}));
  j["rewards"] = std::move(rewards);
  bool any_noise = false;
  json amps = json::array();
  for (const auto& n : game.noise()) {
    const double a = n.kind == NoiseSpec::Kind::Bounded ? n.amplitude : 0.0;
    any_noise = any_noise || n.kind == NoiseSpec::Kind::Bounded;
    amps.push_back(a);
  }
  j["noise"] = any_noise ? json{{"kind", "bounded"}, {"amplitude", amps}}
                         : json{{"kind", "none"}};
  return j;
}

inline std::string canonical_game_text(const CongestionGame& game) {
  return game_to_json(game).dump(2) + "\n";
}

// FNV-1a over the compact canonical JSON.
inline std::uint64_t game_hash(const CongestionGame& game) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : game_to_json(game).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline ExplorationPolicy exploration_from_json(
    const CongestionGame& game, const json& j,
    std::uint64_t cap = kDefaultEnumerationCap) {
  try {
    if (j.contains("support")) {
      std::vector<ExplorationPolicy::Entry> support;
      for (const auto& e : j.at("support")) {
        support.emplace_back(
            joint_action_from_json(detail::require(e, "actions")),
            detail::json_number(detail::require(e, "p"), "probability"));
      }
      return ExplorationPolicy(game, std::move(support));
    }
    if (j.contains("product")) {
      const auto& prod = j.at("product");
      if (!prod.is_array() ||
          static_cast<int>(prod.size()) != game.num_players())
        throw FormatError(0, "product form needs one entry per player");
      std::vector<std::vector<double>> w(game.num_players());
      for (int i = 0; i < game.num_players(); ++i) {
        w[i].assign(game.actions(i).size(), 0.0);
        for (const auto& e : prod[i]) {
          const auto a = detail::json_action(detail::require(e, "action"),
                                             "player " + std::to_string(i));
          w[i][game.action_index(i, a)] +=
              detail::json_number(detail::require(e, "p"), "probability");
        }
      }
      return ExplorationPolicy::from_product(
          game, ProductPolicy(game, std::move(w)), cap);
    }
  } catch (const InputError& e) {
    throw FormatError(0, std::string("exploration policy: ") + e.what());
  }
  throw FormatError(0, "exploration policy needs \"support\" or \"product\"");
}

inline json exploration_to_json(const ExplorationPolicy& rho) {
  json support = json::array();
  for (const auto& [a, p] : rho.support())
    support.push_back({{"actions", joint_action_to_json(a)}, {"p", p}});
  return json{{"support", std::move(support)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(0, path + ": " + e.what());
  }
}

}  // namespace congame
