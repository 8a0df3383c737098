#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridenv/grid.hpp"

namespace gridenv {

struct NoOp {
  bool operator==(const NoOp&) const = default;
};

// Flips the connection status of one line.
struct LineToggle {
  int line = 0;
  bool operator==(const LineToggle&) const = default;
};

// Sets every element of one substation to the given busbars.
struct SubstationSet {
  int sub = 0;
  std::vector<std::int8_t> buses;
  bool operator==(const SubstationSet&) const = default;
};

// One value per generator (fossil: redispatch delta in MW; renewable:
// curtailment limit as a fraction of p_max) followed by one per storage
// unit (power setpoint in MW, positive when discharging).
struct ContinuousAction {
  std::vector<double> values;
  bool operator==(const ContinuousAction&) const = default;
};

using Action = std::variant<NoOp, LineToggle, SubstationSet, ContinuousAction>;

bool is_noop(const Action& a);

// Text encodings: "noop", "line:<id>", "sub:<id>:<labels>" (e.g. sub:5:1121122),
// "cont:<v0>;<v1>;...".
std::string encode_action(const Action& a);
Action decode_action(std::string_view text);

struct CatalogEntry {
  Action action;
  int canonical_index = 0;  // position in enumerate_topology_actions order
  double survival = 0.0;    // mean normalized survival, meaningful when samples > 0
  int samples = 0;
};

// Discrete topology actions. Entry 0 of an enumerated catalog is the no-op.
struct ActionCatalog {
  std::string scenario;
  std::vector<CatalogEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
};

// No-op, one toggle per line, then every canonical split of every
// substation (substations ascending, splits in enumerate_substation_splits
// order).
ActionCatalog enumerate_topology_actions(const Grid& grid);

// Discrete action space handed to agents; index 0 is always the no-op.
class ActionSpace {
 public:
  ActionSpace() : actions_{NoOp{}} {}
  explicit ActionSpace(std::vector<Action> actions);

  int size() const { return static_cast<int>(actions_.size()); }
  const Action& operator[](int i) const { return actions_.at(i); }
  const std::vector<Action>& actions() const { return actions_; }

 private:
  std::vector<Action> actions_;
};

// Full catalog in canonical order.
ActionSpace full_action_space(const ActionCatalog& catalog);

// Action counts per difficulty level for the known scenario families, or
// empty when the name is unknown.
std::vector<int> known_difficulty_sizes(std::string_view scenario);

// Difficulty sizes of a grid: its own `difficulty` header when present,
// otherwise the known table for its name.
std::vector<int> difficulty_sizes(const Grid& grid);

// Top N(level) actions of a ranked catalog, no-op first. Throws
// std::out_of_range when the level does not exist and std::invalid_argument
// when the catalog holds fewer actions than the level needs.
ActionSpace build_difficulty_level(const ActionCatalog& ranked, const std::vector<int>& sizes,
                                   int level);

struct ContinuousBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  int dim() const { return static_cast<int>(lower.size()); }
};

ContinuousBounds continuous_bounds(const Grid& grid);

// Ranking artifacts: versioned JSON listing entries in rank order.
struct RankingMeta {
  std::uint64_t seed = 0;
  int trials_per_action = 0;
  int episode_length = 0;
  int budget = 0;
  std::string replay;
};

void write_ranking(const std::filesystem::path& path, const ActionCatalog& ranked,
                   const RankingMeta& meta);
ActionCatalog read_ranking(const std::filesystem::path& path, const Grid& grid);

}  // namespace gridenv
