#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gridenv/action_space.hpp"
#include "gridenv/chronics.hpp"
#include "gridenv/config.hpp"
#include "gridenv/grid.hpp"
#include "gridenv/power_flow.hpp"
#include "gridenv/rewards.hpp"
#include "gridenv/rng.hpp"

namespace gridenv {

struct EnvState {
  int t = 0;      // steps taken since reset
  int start = 0;  // chronics row of the reset
  TopologyState topo;
  std::vector<double> gen_p;          // actual dispatch, MW
  std::vector<double> gen_target;     // schedule plus redispatch, MW (renewables: available)
  std::vector<double> redispatch;     // accumulated agent offset per fossil generator, MW
  std::vector<double> curtail_limit;  // fraction of p_max per renewable, 1 for fossil
  std::vector<double> load_p;         // MW
  std::vector<double> storage_charge;  // MWh
  std::vector<double> storage_target;  // requested power, MW, positive when discharging
  std::vector<double> storage_p;       // realized power, MW
  std::vector<int> line_cooldown;
  std::vector<int> sub_cooldown;
  std::vector<int> overflow;          // consecutive overloaded steps per line
  std::vector<DisconnectCause> cause;  // why each line is out, None when connected
  std::vector<int> outage_remaining;   // opponent outage steps left
  FlowSolution flows;
  Rng rng;
  bool done = false;

  bool operator==(const EnvState& o) const;
};

struct StepInfo {
  double survival = 0.0;  // steps survived / episode length
  bool truncated = false;
  bool valid = true;      // false when the action had no effect
  bool feasible = true;
  std::string termination;  // "", "islanding", "shortfall", "surplus", "solver", "truncated"
  Metrics metrics;
  double r_survive = 0.0;
  double r_overload = 0.0;
  double r_cost = 0.0;
  double p_gen = 0.0;
  double p_demand = 0.0;
  double losses = 0.0;
  double redispatch = 0.0;  // sum of |fossil offsets| + curtailed MW
  double storage = 0.0;     // sum of |storage power|
  double c_marginal = 0.0;
  int n_islands = 0;
  int opponent_line = -1;
  std::vector<int> overload_disconnections;
  int steps = 1;  // environment steps folded into this result
};

struct StepResult {
  std::vector<double> observation;  // empty when observation is skipped
  double reward = 0.0;
  int lsi = 0;
  int tlo = 0;
  bool done = false;
  StepInfo info;
};

struct StepOptions {
  bool observe = true;
  bool opponent = true;
};

// Counts consecutive strict overloads on connected lines. Lines above
// `limit` consecutive steps are disconnected with the forced cooldown; their
// indices are returned.
std::vector<int> process_overloads(EnvState& state, const FlowSolution& flows, int limit,
                                   int forced_cooldown);

struct ObservationFeatures {
  bool maintenance = false;
  bool storage = false;
};

struct Slice {
  std::string name;
  int offset = 0;
  int length = 0;
};

struct ObservationLayout {
  std::vector<Slice> slices;
  int size = 0;

  const Slice& slice(const std::string& name) const;
};

ObservationLayout observation_layout(const Grid& grid, TaskKind task, ObservationFeatures f);

struct SpaceSpec {
  ObservationLayout observation;
  int discrete_actions = 0;  // 0 for continuous tasks
  ContinuousBounds bounds;   // empty for discrete tasks

  std::string to_json() const;
};

class Environment {
 public:
  Environment(std::shared_ptr<const Grid> grid, std::shared_ptr<const Chronics> chronics,
              EnvConfig config, ActionSpace actions);

  // Loads scenario, chronics and (for level >= 0) the ranking named by the
  // config. Throws ConfigError on mismatches.
  static Environment from_config(const EnvConfig& config);

  EnvState reset(std::uint64_t seed) const;
  // Reset at a fixed chronics row, otherwise as reset(seed).
  EnvState reset_at(std::uint64_t seed, int start) const;

  StepResult step(EnvState& state, const Action& action, StepOptions opts = {}) const;
  StepResult step(EnvState& state, int action_index, StepOptions opts = {}) const;

  // Outcome of `action` from a copy of `state` with the opponent disabled.
  std::pair<EnvState, StepResult> simulate(const EnvState& state, const Action& action) const;

  // DC flows of `topo` with the injections held by `state`; each island's
  // slack takes up the imbalance without limit checks.
  FlowSolution balanced_flows(const EnvState& state, const TopologyState& topo) const;

  std::vector<double> observe(const EnvState& state) const;
  SpaceSpec spec() const;

  // Throws ActionError when the action does not fit the grid or task.
  void validate_action(const Action& action) const;

  const Grid& grid() const { return *grid_; }
  const Chronics& chronics() const { return *chronics_; }
  const EnvConfig& config() const { return config_; }
  const ActionSpace& action_space() const { return actions_; }
  const ObservationLayout& layout() const { return layout_; }
  const TopologyState& reference() const { return reference_; }
  int episode_length() const { return config_.episode_length; }

  // Overrides applied by analysis code (ranking, tests).
  void set_episode_length(int length);
  void set_opponent_probability(double p) { config_.opponent.probability = p; }

 private:
  struct Balance {
    bool feasible = true;
    std::string reason;
    double residual = 0.0;
  };
  Balance balance_and_solve(EnvState& s, const std::vector<double>& gen_pre,
                            const std::vector<double>* prev, Islands* islands_out) const;
  void start_maintenance(EnvState& s, int row) const;

  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const Chronics> chronics_;
  EnvConfig config_;
  ActionSpace actions_;
  ContinuousBounds bounds_;
  ObservationFeatures features_;
  ObservationLayout layout_;
  TopologyState reference_;
  std::vector<int> slack_order_;  // fossil generators by descending p_max
};

}  // namespace gridenv
