#include "gridenv/heuristics.hpp"

#include <algorithm>

namespace gridenv {

bool idle_gate(std::span<const double> rho, double threshold) {
  return std::any_of(rho.begin(), rho.end(), [threshold](double r) { return r >= threshold; });
}

Action recovery_step(const Grid& grid, const TopologyState& current,
                     const TopologyState& reference, const std::vector<int>& sub_cooldown) {
  for (int s = 0; s < grid.n_subs(); ++s) {
    const int a = grid.sub_start(s);
    const int b = a + grid.sub_size(s);
    if (std::equal(current.topo_vect.begin() + a, current.topo_vect.begin() + b,
                   reference.topo_vect.begin() + a)) {
      continue;
    }
    if (sub_cooldown[s] > 0) return NoOp{};
    return SubstationSet{s, {reference.topo_vect.begin() + a, reference.topo_vect.begin() + b}};
  }
  return NoOp{};
}

Action heuristic_action(const Environment& env, const EnvState& state, HeuristicMode mode) {
  if (mode == HeuristicMode::Recovery) {
    return recovery_step(env.grid(), state.topo, env.reference(), state.sub_cooldown);
  }
  return NoOp{};
}

namespace {

void accumulate(StepResult& total, StepResult&& r) {
  const bool valid = total.info.steps == 0 ? r.info.valid : total.info.valid;
  const int steps = total.info.steps + 1;
  const double reward = total.reward + r.reward;
  const int lsi = total.lsi + r.lsi;
  const int tlo = total.tlo + r.tlo;
  total = std::move(r);
  total.info.valid = valid;
  total.info.steps = steps;
  total.reward = reward;
  total.lsi = lsi;
  total.tlo = tlo;
}

void run_heuristic(const Environment& env, EnvState& state, const HeuristicConfig& h,
                   const StepObserver& observer, StepResult& total) {
  const StepOptions quiet{false, true};
  while (!state.done && !idle_gate(state.flows.rho, h.threshold)) {
    const Action a = heuristic_action(env, state, h.mode);
    StepResult r = env.step(state, a, quiet);
    if (observer) observer(a, r, state);
    accumulate(total, std::move(r));
  }
}

}  // namespace

StepResult wrap_step(const Environment& env, EnvState& state, const Action& action,
                     const HeuristicConfig& heuristic, const StepObserver& observer,
                     bool observe) {
  StepResult total;
  total.info.steps = 0;
  StepResult first = env.step(state, action, StepOptions{false, true});
  if (observer) observer(action, first, state);
  accumulate(total, std::move(first));
  if (heuristic.mode != HeuristicMode::Off) run_heuristic(env, state, heuristic, observer, total);
  if (observe) total.observation = env.observe(state);
  return total;
}

std::pair<EnvState, StepResult> wrapped_reset(const Environment& env, std::uint64_t seed,
                                              const HeuristicConfig& heuristic,
                                              const StepObserver& observer, bool observe) {
  EnvState state = env.reset(seed);
  StepResult total;
  total.info.steps = 0;
  if (heuristic.mode != HeuristicMode::Off) run_heuristic(env, state, heuristic, observer, total);
  total.done = state.done;
  if (observe) total.observation = env.observe(state);
  return {std::move(state), std::move(total)};
}

}  // namespace gridenv
