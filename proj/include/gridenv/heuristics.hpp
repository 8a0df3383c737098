#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>

#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"

namespace gridenv {

// True when the agent must act: some line loading is at or above the
// threshold.
bool idle_gate(std::span<const double> rho, double threshold);

// One-substation move back toward `reference`: the lowest differing
// substation is reset to its reference busbars. No-op when the topologies
// agree or when that substation is still cooling down.
Action recovery_step(const Grid& grid, const TopologyState& current,
                     const TopologyState& reference, const std::vector<int>& sub_cooldown);

// Action the heuristic takes while the grid is safe.
Action heuristic_action(const Environment& env, const EnvState& state, HeuristicMode mode);

// Called after every environment step with the action taken and its result.
using StepObserver =
    std::function<void(const Action& action, const StepResult& result, const EnvState& state)>;

// Applies `action`, then lets the heuristic drive while the grid stays
// safe. Rewards and costs are summed without discounting; info.steps counts
// the environment steps taken and info.valid refers to `action`. With mode
// off this is a single step.
StepResult wrap_step(const Environment& env, EnvState& state, const Action& action,
                     const HeuristicConfig& heuristic, const StepObserver& observer = {},
                     bool observe = true);

// Reset followed by heuristic steps until the agent is needed or the
// episode ends. The result accumulates those steps (info.steps = 0 when
// none were taken).
std::pair<EnvState, StepResult> wrapped_reset(const Environment& env, std::uint64_t seed,
                                              const HeuristicConfig& heuristic,
                                              const StepObserver& observer = {},
                                              bool observe = true);

}  // namespace gridenv
