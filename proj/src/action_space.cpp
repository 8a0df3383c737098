#include "gridenv/action_space.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <stdexcept>

#include "gridenv/error.hpp"
#include "text_util.hpp"

namespace gridenv {

bool is_noop(const Action& a) { return std::holds_alternative<NoOp>(a); }

std::string encode_action(const Action& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoOp>) {
          return "noop";
        } else if constexpr (std::is_same_v<T, LineToggle>) {
          return "line:" + std::to_string(v.line);
        } else if constexpr (std::is_same_v<T, SubstationSet>) {
          std::string s = "sub:" + std::to_string(v.sub) + ":";
          for (auto b : v.buses) s += static_cast<char>('0' + b);
          return s;
        } else {
          std::string s = "cont:";
          for (std::size_t i = 0; i < v.values.size(); ++i) {
            if (i) s += ";";
            s += detail::format_double(v.values[i]);
          }
          return s;
        }
      },
      a);
}

Action decode_action(std::string_view text) {
  auto bad = [&text](const std::string& why) -> ActionError {
    return ActionError("malformed action '" + std::string(text) + "': " + why);
  };
  if (text == "noop") return NoOp{};
  if (text.starts_with("line:")) {
    auto id = detail::to_int(text.substr(5));
    if (!id) throw bad("line id is not an integer");
    return LineToggle{static_cast<int>(*id)};
  }
  if (text.starts_with("sub:")) {
    const auto rest = text.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw bad("expected sub:<id>:<labels>");
    auto id = detail::to_int(rest.substr(0, colon));
    if (!id) throw bad("substation id is not an integer");
    SubstationSet s{static_cast<int>(*id), {}};
    for (char c : rest.substr(colon + 1)) {
      if (c != '1' && c != '2') throw bad("busbar labels must be 1 or 2");
      s.buses.push_back(static_cast<std::int8_t>(c - '0'));
    }
    if (s.buses.empty()) throw bad("empty busbar assignment");
    return s;
  }
  if (text.starts_with("cont:")) {
    ContinuousAction c;
    auto rest = text.substr(5);
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      auto v = detail::to_double(rest.substr(0, semi));
      if (!v) throw bad("value is not a number");
      c.values.push_back(*v);
      if (semi == std::string_view::npos) break;
      rest = rest.substr(semi + 1);
    }
    return c;
  }
  throw bad("unknown action kind");
}

ActionCatalog enumerate_topology_actions(const Grid& grid) {
  ActionCatalog cat;
  cat.scenario = grid.name();
  auto add = [&cat](Action a) {
    const int idx = cat.size();
    cat.entries.push_back({std::move(a), idx, 0.0, 0});
  };
  add(NoOp{});
  for (int l = 0; l < grid.n_lines(); ++l) add(LineToggle{l});
  for (int s = 0; s < grid.n_subs(); ++s) {
    for (auto& buses : enumerate_substation_splits(grid.sub_size(s))) {
      add(SubstationSet{s, std::move(buses)});
    }
  }
  return cat;
}

ActionSpace::ActionSpace(std::vector<Action> actions) : actions_(std::move(actions)) {
  if (actions_.empty() || !is_noop(actions_.front())) {
    throw std::invalid_argument("action space must start with the no-op");
  }
}

ActionSpace full_action_space(const ActionCatalog& catalog) {
  std::vector<const CatalogEntry*> order;
  for (const auto& e : catalog.entries) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const CatalogEntry* a, const CatalogEntry* b) {
    return a->canonical_index < b->canonical_index;
  });
  std::vector<Action> actions{NoOp{}};
  for (const CatalogEntry* e : order) {
    if (!is_noop(e->action)) actions.push_back(e->action);
  }
  return ActionSpace(std::move(actions));
}

std::vector<int> known_difficulty_sizes(std::string_view scenario) {
  static const std::map<std::string, std::vector<int>, std::less<>> table = {
      {"bus14", {50, 209}},
      {"bus36-M", {50, 302, 1829, 11071, 66978}},
      {"bus36-MO-v0", {50, 302, 1829, 11071, 66978}},
      {"bus36-MO-v1", {50, 302, 1829, 11071, 66978}},
      {"bus118-M", {50, 308, 1903, 11744, 72461}},
      {"bus118-MOB-v0", {50, 309, 1914, 11849, 73328}},
      {"bus118-MOB-v1", {50, 309, 1915, 11852, 73357}},
  };
  auto it = table.find(scenario);
  return it == table.end() ? std::vector<int>{} : it->second;
}

std::vector<int> difficulty_sizes(const Grid& grid) {
  if (!grid.difficulty_levels().empty()) return grid.difficulty_levels();
  return known_difficulty_sizes(grid.name());
}

ActionSpace build_difficulty_level(const ActionCatalog& ranked, const std::vector<int>& sizes,
                                   int level) {
  if (level < 0 || level >= static_cast<int>(sizes.size())) {
    throw std::out_of_range("difficulty level " + std::to_string(level) + " out of range [0, " +
                            std::to_string(sizes.size()) + ")");
  }
  const int n = sizes[level];
  if (ranked.size() < n) {
    throw std::invalid_argument("ranking holds " + std::to_string(ranked.size()) +
                                " actions, level " + std::to_string(level) + " needs " +
                                std::to_string(n));
  }
  std::vector<Action> actions{NoOp{}};
  actions.reserve(n);
  for (const CatalogEntry& e : ranked.entries) {
    if (static_cast<int>(actions.size()) == n) break;
    if (!is_noop(e.action)) actions.push_back(e.action);
  }
  return ActionSpace(std::move(actions));
}

ContinuousBounds continuous_bounds(const Grid& grid) {
  ContinuousBounds b;
  for (const Generator& g : grid.generators()) {
    if (g.renewable()) {
      b.lower.push_back(0.0);
      b.upper.push_back(1.0);
    } else {
      const double r = std::min(g.ramp_up, g.ramp_down);
      b.lower.push_back(-r);
      b.upper.push_back(r);
    }
  }
  for (const Storage& s : grid.storages()) {
    b.lower.push_back(-s.p_charge_max);
    b.upper.push_back(s.p_discharge_max);
  }
  return b;
}

void write_ranking(const std::filesystem::path& path, const ActionCatalog& ranked,
                   const RankingMeta& meta) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["scenario"] = ranked.scenario;
  j["seed"] = meta.seed;
  j["trials_per_action"] = meta.trials_per_action;
  j["episode_length"] = meta.episode_length;
  j["budget"] = meta.budget;
  j["replay"] = meta.replay;
  nlohmann::json arr = nlohmann::json::array();
  for (const CatalogEntry& e : ranked.entries) {
    arr.push_back({{"action", encode_action(e.action)},
                   {"canonical_index", e.canonical_index},
                   {"survival", e.survival},
                   {"samples", e.samples}});
  }
  j["actions"] = std::move(arr);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ranking '" + path.string() + "'");
  out << j.dump(1) << "\n";
}

ActionCatalog read_ranking(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("ranking artifact '" + path.string() + "' not found");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("ranking artifact '" + path.string() + "': " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw ParseError("ranking artifact '" + path.string() + "': unsupported format_version");
    }
    ActionCatalog cat;
    cat.scenario = j.at("scenario").get<std::string>();
    if (cat.scenario != grid.name()) {
      throw ConfigError("ranking artifact '" + path.string() + "' is for scenario '" +
                        cat.scenario + "', grid is '" + grid.name() + "'");
    }
    std::set<std::string> seen;
    for (const auto& a : j.at("actions")) {
      const std::string code = a.at("action").get<std::string>();
      if (!seen.insert(code).second) {
        throw ParseError("ranking artifact '" + path.string() + "': duplicate action " + code);
      }
      Action act = decode_action(code);
      // Validate ids and shapes against the grid.
      if (const auto* s = std::get_if<SubstationSet>(&act)) {
        apply_topology(grid, reference_topology(grid), SubstationAssignment{s->sub, s->buses});
      } else if (const auto* l = std::get_if<LineToggle>(&act)) {
        apply_topology(grid, reference_topology(grid), LineStatusChange{l->line, false});
      }
      cat.entries.push_back({std::move(act), a.at("canonical_index").get<int>(),
                             a.at("survival").get<double>(), a.at("samples").get<int>()});
    }
    return cat;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("ranking artifact '" + path.string() + "': " + e.what());
  } catch (const ActionError& e) {
    throw ParseError("ranking artifact '" + path.string() + "': " + e.what());
  }
}

}  // namespace gridenv
