#include "gridenv/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gridenv/error.hpp"

namespace gridenv {

namespace {

constexpr double kBalanceTolerance = 1e-6;  // MW

}  // namespace

bool EnvState::operator==(const EnvState& o) const {
  return t == o.t && start == o.start && topo == o.topo && gen_p == o.gen_p &&
         gen_target == o.gen_target && redispatch == o.redispatch &&
         curtail_limit == o.curtail_limit && load_p == o.load_p &&
         storage_charge == o.storage_charge && storage_target == o.storage_target &&
         storage_p == o.storage_p && line_cooldown == o.line_cooldown &&
         sub_cooldown == o.sub_cooldown && overflow == o.overflow && cause == o.cause &&
         outage_remaining == o.outage_remaining && flows.flow == o.flows.flow &&
         flows.theta == o.flows.theta && rng == o.rng && done == o.done;
}

std::vector<int> process_overloads(EnvState& state, const FlowSolution& flows, int limit,
                                   int forced_cooldown) {
  std::vector<int> tripped;
  const int n = static_cast<int>(state.overflow.size());
  for (int l = 0; l < n; ++l) {
    if (!state.topo.line_status[l] || !(flows.rho[l] > 1.0)) {
      state.overflow[l] = 0;
      continue;
    }
    if (++state.overflow[l] > limit) {
      state.topo.line_status[l] = false;
      state.cause[l] = DisconnectCause::Overload;
      state.line_cooldown[l] = std::max(state.line_cooldown[l], forced_cooldown);
      state.overflow[l] = 0;
      tripped.push_back(l);
    }
  }
  return tripped;
}

Environment::Environment(std::shared_ptr<const Grid> grid,
                         std::shared_ptr<const Chronics> chronics, EnvConfig config,
                         ActionSpace actions)
    : grid_(std::move(grid)),
      chronics_(std::move(chronics)),
      config_(std::move(config)),
      actions_(std::move(actions)),
      bounds_(continuous_bounds(*grid_)),
      reference_(reference_topology(*grid_)) {
  validate_chronics(*grid_, *chronics_);
  if (chronics_->horizon < config_.episode_length) {
    throw ConfigError("chronics horizon " + std::to_string(chronics_->horizon) +
                      " is shorter than the episode length " +
                      std::to_string(config_.episode_length));
  }
  for (int l : config_.opponent.lines) {
    if (l < 0 || l >= grid_->n_lines()) {
      throw ConfigError("opponent.lines references line " + std::to_string(l) + " (grid has " +
                        std::to_string(grid_->n_lines()) + ")");
    }
  }
  config_.reward.episode_length = config_.episode_length;
  features_.maintenance = !chronics_->maintenance.empty() || config_.chronics.maintenance_rate > 0;
  features_.storage = grid_->n_storages() > 0;
  layout_ = observation_layout(*grid_, config_.task, features_);
  for (int g = 0; g < grid_->n_gens(); ++g) {
    if (!grid_->generators()[g].renewable()) slack_order_.push_back(g);
  }
  std::stable_sort(slack_order_.begin(), slack_order_.end(), [this](int a, int b) {
    return grid_->generators()[a].p_max > grid_->generators()[b].p_max;
  });
}

Environment Environment::from_config(const EnvConfig& config) {
  auto grid = std::make_shared<const Grid>(load_grid(config.scenario));
  std::shared_ptr<const Chronics> chronics;
  if (!config.chronics_dir.empty()) {
    chronics = std::make_shared<const Chronics>(load_chronics(*grid, config.chronics_dir));
  } else {
    chronics = std::make_shared<const Chronics>(generate_chronics(*grid, config.chronics));
  }
  ActionSpace actions;
  if (config.task == TaskKind::Topology) {
    if (config.level < 0) {
      actions = full_action_space(enumerate_topology_actions(*grid));
    } else {
      if (config.ranking.empty()) {
        throw ConfigError("env.level " + std::to_string(config.level) +
                          " needs env.ranking (a ranking artifact)");
      }
      const ActionCatalog ranked = read_ranking(config.ranking, *grid);
      try {
        actions = build_difficulty_level(ranked, difficulty_sizes(*grid), config.level);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  }
  return Environment(std::move(grid), std::move(chronics), config, std::move(actions));
}

void Environment::set_episode_length(int length) {
  if (length < 1 || length > chronics_->horizon) {
    throw std::invalid_argument("episode length must lie in [1, horizon]");
  }
  config_.episode_length = length;
  config_.reward.episode_length = length;
}

void Environment::start_maintenance(EnvState& s, int row) const {
  for (const MaintenanceEvent& m : chronics_->maintenance) {
    if (m.start <= row && row < m.start + m.duration) {
      const int l = m.line;
      const int remaining = m.start + m.duration - row;
      if (s.cause[l] != DisconnectCause::Maintenance) {
        s.topo.line_status[l] = false;
        s.cause[l] = DisconnectCause::Maintenance;
        s.overflow[l] = 0;
        s.outage_remaining[l] = 0;
      }
      s.line_cooldown[l] = std::max(s.line_cooldown[l], remaining);
    }
  }
}

EnvState Environment::reset(std::uint64_t seed) const {
  Rng rng(seed);
  const int start = sample_episode_start(*chronics_, config_.episode_length, rng);
  EnvState s = reset_at(seed, start);
  s.rng = rng;
  return s;
}

EnvState Environment::reset_at(std::uint64_t seed, int start) const {
  const Grid& g = *grid_;
  if (start < 0 || start + config_.episode_length > chronics_->horizon) {
    throw ConfigError("episode start " + std::to_string(start) + " leaves fewer than " +
                      std::to_string(config_.episode_length) + " chronics rows");
  }
  EnvState s;
  s.rng = Rng(seed);
  s.start = start;
  s.topo = reference_;
  const int ng = g.n_gens();
  s.gen_p.assign(ng, 0.0);
  s.gen_target.assign(ng, 0.0);
  s.redispatch.assign(ng, 0.0);
  s.curtail_limit.assign(ng, 1.0);
  for (int i = 0; i < ng; ++i) {
    const Generator& gen = g.generators()[i];
    const double plan = chronics_->gen_plan.at(start, i);
    s.gen_target[i] = gen.renewable() ? plan : std::clamp(plan, gen.p_min, gen.p_max);
    s.gen_p[i] = s.gen_target[i];
  }
  const auto loads = chronics_->load.row(start);
  s.load_p.assign(loads.begin(), loads.end());
  for (const Storage& st : g.storages()) s.storage_charge.push_back(st.initial_charge);
  s.storage_target.assign(g.n_storages(), 0.0);
  s.storage_p.assign(g.n_storages(), 0.0);
  s.line_cooldown.assign(g.n_lines(), 0);
  s.sub_cooldown.assign(g.n_subs(), 0);
  s.overflow.assign(g.n_lines(), 0);
  s.cause.assign(g.n_lines(), DisconnectCause::None);
  s.outage_remaining.assign(g.n_lines(), 0);
  start_maintenance(s, start);
  const std::vector<double> pre = s.gen_p;
  const Balance b = balance_and_solve(s, pre, nullptr, nullptr);
  if (!b.feasible) {
    throw ConfigError("initial state at chronics row " + std::to_string(start) +
                      " is infeasible: " + b.reason);
  }
  return s;
}

FlowSolution Environment::balanced_flows(const EnvState& state,
                                         const TopologyState& topo) const {
  const Grid& g = *grid_;
  const Islands islands = detect_islands(g, topo);
  FlowSolution f;
  if (islands.load_islanded) {
    f.reason = "islanding";
    return f;
  }
  auto inj = busbar_injections(g, topo, state.gen_p, state.load_p, state.storage_p);
  const int nc = islands.n_components();
  std::vector<double> net(nc, 0.0);
  for (int b = 0; b < g.n_busbars(); ++b) {
    if (islands.component[b] >= 0) net[islands.component[b]] += inj[b];
  }
  std::vector<bool> done(nc, false);
  for (int gi : slack_order_) {
    const int pos = g.gen_pos(gi);
    const int b = g.busbar_of(pos, topo.topo_vect[pos]);
    const int c = islands.component[b];
    if (c < 0 || done[c]) continue;
    inj[b] -= net[c];
    done[c] = true;
  }
  return solve_dc(g, topo, islands, inj);
}

Environment::Balance Environment::balance_and_solve(EnvState& s,
                                                    const std::vector<double>& gen_pre,
                                                    const std::vector<double>* prev,
                                                    Islands* islands_out) const {
  const Grid& g = *grid_;
  Balance out;
  s.gen_p = gen_pre;
  Islands islands = detect_islands(g, s.topo);
  auto fail = [&](std::string reason, double residual) {
    out.feasible = false;
    out.reason = std::move(reason);
    out.residual = residual;
    s.flows = FlowSolution{};
    s.flows.flow.assign(g.n_lines(), 0.0);
    s.flows.rho.assign(g.n_lines(), 0.0);
    s.flows.theta.assign(g.n_busbars(), 0.0);
    s.flows.reason = out.reason;
    if (islands_out) *islands_out = std::move(islands);
    return out;
  };
  if (islands.load_islanded) return fail("islanding", 0.0);

  const int nc = islands.n_components();
  std::vector<double> net(nc, 0.0);
  {
    const auto inj = busbar_injections(g, s.topo, s.gen_p, s.load_p, s.storage_p);
    for (int b = 0; b < g.n_busbars(); ++b) {
      if (islands.component[b] >= 0) net[islands.component[b]] += inj[b];
    }
  }
  // The slack first takes up the imbalance so the flow problem is solvable,
  // then the island's losses; only its final output must respect the limits.
  std::vector<int> slack(nc, -1);
  for (int gi : slack_order_) {
    const int pos = g.gen_pos(gi);
    const int c = islands.component[g.busbar_of(pos, s.topo.topo_vect[pos])];
    if (c >= 0 && slack[c] < 0) slack[c] = gi;
  }
  for (int c = 0; c < nc; ++c) {
    if (!islands.has_injection[c]) continue;
    if (slack[c] >= 0) {
      s.gen_p[slack[c]] -= net[c];
    } else if (std::abs(net[c]) > kBalanceTolerance) {
      return fail(net[c] < 0 ? "shortfall" : "surplus", net[c]);
    }
  }

  const auto inj = busbar_injections(g, s.topo, s.gen_p, s.load_p, s.storage_p);
  FlowSolution sol = solve_dc(g, s.topo, islands, inj);
  if (!sol.feasible) return fail("solver: " + sol.reason, 0.0);
  const auto losses = losses_per_component(g, s.topo, islands, sol);
  for (int c = 0; c < nc; ++c) {
    if (slack[c] < 0) {
      if (losses[c] > kBalanceTolerance) return fail("shortfall", -losses[c]);
      continue;
    }
    const Generator& gen = g.generators()[slack[c]];
    double lo = gen.p_min;
    double up = gen.p_max;
    if (prev) {
      lo = std::max(lo, (*prev)[slack[c]] - gen.ramp_down);
      up = std::min(up, (*prev)[slack[c]] + gen.ramp_up);
    }
    double& p = s.gen_p[slack[c]];
    p += losses[c];
    if (p > up + kBalanceTolerance) {
      const double excess = p - up;
      p = up;
      return fail("shortfall", -excess);
    }
    if (p < lo - kBalanceTolerance) {
      const double excess = lo - p;
      p = lo;
      return fail("surplus", excess);
    }
    p = std::clamp(p, lo, up);
  }
  s.flows = std::move(sol);
  if (islands_out) *islands_out = std::move(islands);
  return out;
}

void Environment::validate_action(const Action& action) const {
  const Grid& g = *grid_;
  if (const auto* l = std::get_if<LineToggle>(&action)) {
    if (config_.task != TaskKind::Topology) throw ActionError("line actions need a topology task");
    if (l->line < 0 || l->line >= g.n_lines()) {
      throw ActionError("line " + std::to_string(l->line) + " does not exist (grid has " +
                        std::to_string(g.n_lines()) + ")");
    }
  } else if (const auto* s = std::get_if<SubstationSet>(&action)) {
    if (config_.task != TaskKind::Topology) {
      throw ActionError("substation actions need a topology task");
    }
    // apply_topology performs the shape checks.
    apply_topology(g, reference_, SubstationAssignment{s->sub, s->buses});
  } else if (const auto* c = std::get_if<ContinuousAction>(&action)) {
    if (config_.task != TaskKind::Redispatch) {
      throw ActionError("continuous actions need a redispatch task");
    }
    if (static_cast<int>(c->values.size()) != bounds_.dim()) {
      throw ActionError("continuous action has " + std::to_string(c->values.size()) +
                        " values, expected " + std::to_string(bounds_.dim()));
    }
    for (int i = 0; i < bounds_.dim(); ++i) {
      const double v = c->values[i];
      if (!std::isfinite(v) || v < bounds_.lower[i] || v > bounds_.upper[i]) {
        throw ActionError("continuous action value " + std::to_string(i) + " outside [" +
                          std::to_string(bounds_.lower[i]) + ", " +
                          std::to_string(bounds_.upper[i]) + "]");
      }
    }
  }
}

StepResult Environment::step(EnvState& state, int action_index, StepOptions opts) const {
  if (action_index < 0 || action_index >= actions_.size()) {
    throw ActionError("action index " + std::to_string(action_index) + " outside [0, " +
                      std::to_string(actions_.size()) + ")");
  }
  return step(state, actions_[action_index], opts);
}

StepResult Environment::step(EnvState& s, const Action& action, StepOptions opts) const {
  if (s.done) throw std::logic_error("step called on a finished episode");
  validate_action(action);
  const Grid& g = *grid_;
  const int nl = g.n_lines();
  const int T = config_.episode_length;
  const int row = s.start + s.t;
  StepResult res;
  std::vector<bool> fresh_line(nl, false);
  std::vector<bool> fresh_sub(g.n_subs(), false);

  // 1. Opponent.
  if (opts.opponent && config_.opponent.probability > 0.0 &&
      s.rng.bernoulli(config_.opponent.probability)) {
    std::vector<int> candidates;
    auto eligible = [&s](int l) { return s.topo.line_status[l]; };
    if (config_.opponent.lines.empty()) {
      for (int l = 0; l < nl; ++l)
        if (eligible(l)) candidates.push_back(l);
    } else {
      for (int l : config_.opponent.lines)
        if (eligible(l)) candidates.push_back(l);
    }
    if (!candidates.empty()) {
      const int l = candidates[s.rng.below(candidates.size())];
      s.topo.line_status[l] = false;
      s.cause[l] = DisconnectCause::Opponent;
      s.overflow[l] = 0;
      s.line_cooldown[l] = std::max(s.line_cooldown[l], config_.cooldown.forced);
      s.outage_remaining[l] = config_.opponent.duration;
      fresh_line[l] = true;
      res.info.opponent_line = l;
    }
  }

  // 2. Agent action.
  bool valid = true;
  if (const auto* lt = std::get_if<LineToggle>(&action)) {
    const int l = lt->line;
    if (s.line_cooldown[l] > 0 || s.cause[l] == DisconnectCause::Maintenance) {
      valid = false;
    } else {
      const bool connect = !s.topo.line_status[l];
      s.topo.line_status[l] = connect;
      s.cause[l] = connect ? DisconnectCause::None : DisconnectCause::Agent;
      s.outage_remaining[l] = 0;
      s.overflow[l] = 0;
      s.line_cooldown[l] = config_.cooldown.line;
      fresh_line[l] = true;
    }
  } else if (const auto* ss = std::get_if<SubstationSet>(&action)) {
    if (s.sub_cooldown[ss->sub] > 0) {
      valid = false;
    } else {
      TopologyState next = apply_topology(g, s.topo, SubstationAssignment{ss->sub, ss->buses});
      if (!(next == s.topo)) {
        s.topo = std::move(next);
        s.sub_cooldown[ss->sub] = config_.cooldown.substation;
        fresh_sub[ss->sub] = true;
      }
    }
  } else if (const auto* ca = std::get_if<ContinuousAction>(&action)) {
    for (int i = 0; i < g.n_gens(); ++i) {
      const Generator& gen = g.generators()[i];
      if (gen.renewable()) {
        s.curtail_limit[i] = ca->values[i];
      } else {
        s.redispatch[i] = std::clamp(s.redispatch[i] + ca->values[i], -gen.p_max, gen.p_max);
      }
    }
    for (int k = 0; k < g.n_storages(); ++k) s.storage_target[k] = ca->values[g.n_gens() + k];
  }
  res.info.valid = valid;

  // 3. Timers and maintenance.
  for (int l = 0; l < nl; ++l) {
    if (fresh_line[l]) continue;
    if (s.line_cooldown[l] > 0) --s.line_cooldown[l];
    if (s.cause[l] == DisconnectCause::Opponent && s.outage_remaining[l] > 0) {
      --s.outage_remaining[l];
    }
  }
  for (int k = 0; k < g.n_subs(); ++k) {
    if (!fresh_sub[k] && s.sub_cooldown[k] > 0) --s.sub_cooldown[k];
  }
  for (int l = 0; l < nl; ++l) {
    if (s.cause[l] == DisconnectCause::Opponent && s.outage_remaining[l] == 0 &&
        s.line_cooldown[l] == 0) {
      s.topo.line_status[l] = true;
      s.cause[l] = DisconnectCause::None;
    }
  }
  start_maintenance(s, row);
  for (int l = 0; l < nl; ++l) {
    if (s.cause[l] == DisconnectCause::Maintenance && s.line_cooldown[l] == 0 &&
        active_maintenance(*chronics_, l, row) == 0) {
      s.topo.line_status[l] = true;
      s.cause[l] = DisconnectCause::None;
    }
  }

  // 4. Continuous dynamics.
  const auto loads = chronics_->load.row(row);
  s.load_p.assign(loads.begin(), loads.end());
  const std::vector<double> prev = s.gen_p;
  std::vector<double> pre(g.n_gens());
  double curtailed = 0.0;
  double redispatch = 0.0;
  for (int i = 0; i < g.n_gens(); ++i) {
    const Generator& gen = g.generators()[i];
    const double plan = chronics_->gen_plan.at(row, i);
    if (gen.renewable()) {
      s.gen_target[i] = plan;
      pre[i] = std::min(plan, s.curtail_limit[i] * gen.p_max);
      curtailed += plan - pre[i];
    } else {
      s.gen_target[i] = std::clamp(plan + s.redispatch[i], gen.p_min, gen.p_max);
      pre[i] = std::clamp(s.gen_target[i], prev[i] - gen.ramp_down, prev[i] + gen.ramp_up);
      pre[i] = std::clamp(pre[i], gen.p_min, gen.p_max);
      redispatch += std::abs(s.redispatch[i]);
    }
  }
  double storage_abs = 0.0;
  for (int k = 0; k < g.n_storages(); ++k) {
    const Storage& st = g.storages()[k];
    double p = std::clamp(s.storage_target[k], -st.p_charge_max, st.p_discharge_max);
    if (p > 0.0) {
      p = std::min(p, s.storage_charge[k] / kStepHours);
    } else {
      p = std::max(p, -(st.energy_capacity - s.storage_charge[k]) / kStepHours);
    }
    s.storage_p[k] = p;
    s.storage_charge[k] = std::clamp(s.storage_charge[k] - p * kStepHours, 0.0, st.energy_capacity);
    storage_abs += std::abs(p);
  }

  // 5. Slack balancing and flows.
  Islands islands;
  Balance bal = balance_and_solve(s, pre, &prev, &islands);

  // 6. Overloads, with one re-solve after disconnections.
  if (bal.feasible) {
    res.info.overload_disconnections =
        process_overloads(s, s.flows, config_.overload_limit, config_.cooldown.forced);
    if (!res.info.overload_disconnections.empty()) {
      bal = balance_and_solve(s, pre, &prev, &islands);
    }
  }

  // 7. Reward and costs.
  StepInfo& info = res.info;
  info.feasible = bal.feasible;
  info.n_islands = islands.n_stranded;
  for (int i = 0; i < g.n_gens(); ++i) info.p_gen += s.gen_p[i];
  for (double d : s.load_p) info.p_demand += d;
  for (double p : s.storage_p) (p > 0 ? info.p_gen : info.p_demand) += std::abs(p);
  info.losses = s.flows.losses;
  info.redispatch = redispatch + curtailed;
  info.storage = storage_abs;
  for (int i = 0; i < g.n_gens(); ++i) {
    if (s.gen_p[i] > 1e-9) {
      info.c_marginal = std::max(info.c_marginal, g.generators()[i].marginal_cost);
    }
  }
  std::vector<double> limits(nl);
  for (int l = 0; l < nl; ++l) limits[l] = g.lines()[l].thermal_limit;
  info.r_survive = reward_survive(T);
  if (bal.feasible) {
    info.r_overload = reward_overload(s.flows.flow, limits, s.topo.line_status,
                                      config_.reward.epsilon);
    info.r_cost = reward_cost(info.p_gen, info.p_demand, info.redispatch, info.storage,
                              info.c_marginal, config_.reward.cost_scale);
  } else {
    info.r_overload = -1.0;
    info.r_cost = -1.0;
    info.termination = bal.reason.starts_with("solver") ? "solver" : bal.reason;
    s.done = true;
  }
  res.reward = total_reward(config_.reward, info.r_survive, info.r_overload, info.r_cost);
  res.lsi = cost_lsi(info.p_gen, info.p_demand, info.n_islands);
  res.tlo = cost_tlo(s.flows.flow, limits, s.topo.line_status, s.cause);
  info.metrics = metrics_snapshot(s.flows.flow, limits, s.topo.line_status,
                                  hamming_distance(s.topo, reference_), config_.reward.epsilon);
  ++s.t;
  info.survival = static_cast<double>(s.t) / T;
  if (!s.done && s.t >= T) {
    s.done = true;
    info.truncated = true;
    info.termination = "truncated";
  }
  res.done = s.done;
  if (opts.observe) res.observation = observe(s);
  return res;
}

std::pair<EnvState, StepResult> Environment::simulate(const EnvState& state,
                                                      const Action& action) const {
  EnvState copy = state;
  StepResult r = step(copy, action, StepOptions{false, false});
  return {std::move(copy), std::move(r)};
}

}  // namespace gridenv
