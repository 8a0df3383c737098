// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridenv/agents.hpp"
#include "gridenv/experiment.hpp"
#include "gridenv/heuristics.hpp"
#include "gridenv/power_flow.hpp"

using namespace gridenv;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kResidualTol = 1e-9;         // MW
constexpr double kSuperpositionTol = 1e-8;    // MW
constexpr double kTriangleTol = 1e-12;        // MW
constexpr double kRampTol = 1e-9;             // MW
constexpr double kStorageTol = 1e-9;          // MWh
constexpr double kBalanceTol = 1e-6;          // MW
constexpr double kSurviveSumTol = 1e-12;
constexpr double kMdpTol = 1e-3;
constexpr double kPValue = 0.05;
constexpr int kBaselineSeeds = 50;
constexpr int kLearningSeeds = 20;

const fs::path kSource = GRIDENV_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first violation of a check.
class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_ = what;
    }
  }
  bool pass() const { return pass_; }
  const std::string& first() const { return first_; }

 private:
  bool pass_ = true;
  std::string first_;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

EnvConfig load_env(const fs::path& cfg) { return env_config_from(ConfigFile::load(cfg)); }

// ---- combinatorics

Outcome combinatorics() {
  Checker c;
  c.require(bus_split_count(7) == 63, "bus_split_count(7) != 63");
  for (int k = 0; k <= 10; ++k) {
    // Brute force: every labelling, label symmetry removed, trivial ones dropped.
    std::set<std::vector<std::int8_t>> distinct;
    for (int mask = 0; mask < (1 << k); ++mask) {
      std::vector<std::int8_t> b(k);
      for (int i = 0; i < k; ++i) b[i] = (mask >> i) & 1 ? 2 : 1;
      if (k > 0 && b[0] == 2)
        for (auto& x : b) x = static_cast<std::int8_t>(3 - x);
      if (std::count(b.begin(), b.end(), 2) == 0) continue;
      distinct.insert(b);
    }
    const auto splits = enumerate_substation_splits(k);
    const std::set<std::vector<std::int8_t>> listed(splits.begin(), splits.end());
    c.require(listed.size() == splits.size(), "duplicate split for k=" + std::to_string(k));
    c.require(listed == distinct, "enumeration differs for k=" + std::to_string(k));
    c.require(bus_split_count(k) == distinct.size(), "count differs for k=" + std::to_string(k));
  }
  return {c.pass(), c.pass() ? "63 splits for 7 elements; k<=10 enumeration agrees" : c.first()};
}

// ---- action-space sizes

Outcome action_space_sizes() {
  Checker c;
  const Grid g = load_grid(kSource / "data/scenarios/bus14.grid");
  const ActionCatalog ranked = read_ranking(kSource / "data/rankings/bus14.json", g);
  const std::vector<int> sizes = difficulty_sizes(g);
  c.require(sizes == std::vector<int>({50, 209}), "bus14 level sizes are not {50, 209}");
  c.require(enumerate_topology_actions(g).size() == 209, "bus14 catalog is not 209 actions");
  std::vector<std::vector<std::string>> levels;
  for (int level = 0; level < static_cast<int>(sizes.size()); ++level) {
    const ActionSpace a = build_difficulty_level(ranked, sizes, level);
    c.require(a.size() == sizes[level], "level " + std::to_string(level) + " has " +
                                            std::to_string(a.size()) + " actions");
    c.require(is_noop(a[0]), "level " + std::to_string(level) + " does not start with no-op");
    std::vector<std::string> enc;
    for (const Action& x : a.actions()) enc.push_back(encode_action(x));
    std::sort(enc.begin(), enc.end());
    c.require(std::adjacent_find(enc.begin(), enc.end()) == enc.end(), "duplicate action");
    levels.push_back(std::move(enc));
  }
  for (std::size_t l = 1; l < levels.size(); ++l) {
    c.require(std::includes(levels[l].begin(), levels[l].end(), levels[l - 1].begin(),
                            levels[l - 1].end()),
              "level " + std::to_string(l - 1) + " is not a subset of level " + std::to_string(l));
  }
  return {c.pass(), c.pass() ? "bus14 levels 50/209, nested" : c.first()};
}

// ---- flow solver

TopologyState random_topology(const Grid& g, Rng& rng) {
  TopologyState t = reference_topology(g);
  const int moves = static_cast<int>(rng.below(4));
  for (int m = 0; m < moves; ++m) {
    const int sub = static_cast<int>(rng.below(g.n_subs()));
    std::vector<std::int8_t> buses(g.sub_size(sub));
    for (auto& b : buses) b = rng.bernoulli(0.5) ? 2 : 1;
    t = apply_topology(g, t, SubstationAssignment{sub, buses});
  }
  const int outages = static_cast<int>(rng.below(4));
  for (int m = 0; m < outages; ++m) t.line_status[rng.below(g.n_lines())] = false;
  return t;
}

std::vector<double> random_injections(const Grid& g, const Islands& isl, Rng& rng) {
  std::vector<double> p(g.n_busbars(), 0.0);
  for (const auto& members : isl.members) {
    double sum = 0.0;
    for (int b : members) sum += p[b] = 200.0 * (rng.uniform() - 0.5);
    for (int b : members) p[b] -= sum / members.size();
  }
  return p;
}

double max_residual(const Grid& g, const TopologyState& t, const FlowSolution& f,
                    std::vector<double> r) {
  for (int l = 0; l < g.n_lines(); ++l) {
    if (!t.line_status[l]) continue;
    r[g.busbar_of(g.line_or_pos(l), t.topo_vect[g.line_or_pos(l)])] -= f.flow[l];
    r[g.busbar_of(g.line_ex_pos(l), t.topo_vect[g.line_ex_pos(l)])] += f.flow[l];
  }
  double worst = 0.0;
  for (double x : r) worst = std::max(worst, std::abs(x));
  return worst;
}

Outcome flow_solver() {
  Checker c;
  const Grid g = load_grid(kSource / "data/scenarios/bus14.grid");
  Rng rng(20240601);
  double residual = 0.0, superposition = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const TopologyState t = random_topology(g, rng);
    const Islands isl = detect_islands(g, t);
    const auto a = random_injections(g, isl, rng);
    const auto b = random_injections(g, isl, rng);
    std::vector<double> ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) ab[i] = a[i] + b[i];
    const FlowSolution fa = solve_dc(g, t, isl, a);
    const FlowSolution fb = solve_dc(g, t, isl, b);
    const FlowSolution fab = solve_dc(g, t, isl, ab);
    c.require(fa.feasible && fb.feasible && fab.feasible, "solve rejected: " + fa.reason);
    if (!(fa.feasible && fb.feasible && fab.feasible)) continue;
    residual = std::max(residual, max_residual(g, t, fa, a));
    for (int l = 0; l < g.n_lines(); ++l)
      superposition = std::max(superposition, std::abs(fab.flow[l] - fa.flow[l] - fb.flow[l]));
  }
  c.require(residual <= kResidualTol, "residual " + fmt(residual));
  c.require(superposition <= kSuperpositionTol, "superposition error " + fmt(superposition));

  const Grid tri = load_grid(kSource / "tests/data/tri3.grid");
  std::vector<double> inj(tri.n_busbars(), 0.0);
  inj[0] = 90.0;
  inj[4] = -90.0;
  const FlowSolution f = solve_dc(tri, reference_topology(tri), inj);
  c.require(f.feasible, "triangle rejected");
  if (f.feasible) {
    c.require(std::abs(f.flow[1] - 60.0) <= kTriangleTol &&
                  std::abs(f.flow[0] - 30.0) <= kTriangleTol &&
                  std::abs(f.flow[2] - 30.0) <= kTriangleTol,
              "triangle split " + fmt(f.flow[1], 17) + "/" + fmt(f.flow[0], 17) + "/" +
                  fmt(f.flow[2], 17));
  }
  return {c.pass(), c.pass() ? "max residual " + fmt(residual) + " MW, superposition " +
                                   fmt(superposition) + " MW, triangle 60/30/30"
                             : c.first()};
}

// ---- transition rules

Outcome transition_rules() {
  Checker c;
  EnvConfig topo = load_env(kSource / "data/configs/bus14_calm.cfg");
  topo.episode_length = 2016;
  topo.chronics.demand_scale = 1.15;
  topo.opponent.probability = 0.02;
  topo.opponent.duration = 24;
  topo.opponent.lines = {4, 8, 9, 11, 15};
  EnvConfig redisp;
  redisp.scenario = kSource / "tests/data/storage5.grid";
  redisp.task = TaskKind::Redispatch;
  redisp.episode_length = 2016;
  redisp.chronics.horizon = 4032;
  const std::vector<std::pair<EnvConfig, int>> cases = {{topo, 6000}, {redisp, 4000}};

  int total = 0, invalid = 0, trips = 0, storage_moves = 0;
  for (const auto& [cfg, steps] : cases) {
    const Environment env = Environment::from_config(cfg);
    const Grid& g = env.grid();
    const ContinuousBounds bounds = continuous_bounds(g);
    const int limit = env.config().overload_limit;
    Rng rng(99);
    std::uint64_t episode = 0;
    EnvState s = env.reset(episode);
    for (int k = 0; k < steps; ++k, ++total) {
      if (s.done) s = env.reset(++episode);
      Action a = NoOp{};
      if (cfg.task == TaskKind::Topology) {
        if (rng.bernoulli(0.3)) a = env.action_space()[rng.below(env.action_space().size())];
      } else {
        std::vector<double> v(bounds.dim());
        for (int i = 0; i < bounds.dim(); ++i)
          v[i] = bounds.lower[i] + rng.uniform() * (bounds.upper[i] - bounds.lower[i]);
        a = ContinuousAction{v};
      }
      const EnvState before = s;
      EnvState twin = s;
      const StepResult r = env.step(s, a);
      const std::string at = " at step " + std::to_string(total);

      if (const auto* ss = std::get_if<SubstationSet>(&a); ss && before.sub_cooldown[ss->sub] > 0) {
        c.require(!r.info.valid, "action on cooling substation accepted" + at);
        for (int p = g.sub_start(ss->sub); p < g.sub_start(ss->sub) + g.sub_size(ss->sub); ++p)
          c.require(s.topo.topo_vect[p] == before.topo.topo_vect[p], "cooling substation moved" + at);
      }
      if (const auto* lt = std::get_if<LineToggle>(&a); lt && before.line_cooldown[lt->line] > 0)
        c.require(!r.info.valid, "toggle of cooling line accepted" + at);
      if (!r.info.valid) {
        ++invalid;
        const StepResult rn = env.step(twin, NoOp{});
        c.require(twin == s && rn.reward == r.reward && rn.observation == r.observation,
                  "invalid action differs from no-op" + at);
      }
      for (int l = 0; l < g.n_lines(); ++l) {
        c.require(s.line_cooldown[l] >= 0 && s.overflow[l] <= limit, "line counters" + at);
        c.require(s.topo.line_status[l] == (s.cause[l] == DisconnectCause::None),
                  "line status and cause disagree" + at);
      }
      for (int l : r.info.overload_disconnections) {
        ++trips;
        c.require(before.overflow[l] == limit, "early overload trip of line " + std::to_string(l) + at);
      }
      if (!r.info.feasible) continue;
      for (int i = 0; i < g.n_gens(); ++i) {
        const Generator& gen = g.generators()[i];
        if (gen.renewable()) {
          c.require(s.gen_p[i] <= s.curtail_limit[i] * gen.p_max + kRampTol, "curtailment" + at);
          continue;
        }
        const double d = s.gen_p[i] - before.gen_p[i];
        c.require(d <= gen.ramp_up + kRampTol && d >= -gen.ramp_down - kRampTol,
                  "ramp of gen " + std::to_string(i) + at);
        c.require(s.gen_p[i] >= gen.p_min - kRampTol && s.gen_p[i] <= gen.p_max + kRampTol,
                  "gen bounds" + at);
      }
      for (int u = 0; u < g.n_storages(); ++u) {
        const double expect = before.storage_charge[u] - s.storage_p[u] * kStepHours;
        c.require(std::abs(s.storage_charge[u] - expect) <= kStorageTol, "storage energy" + at);
        c.require(s.storage_charge[u] >= 0.0 &&
                      s.storage_charge[u] <= g.storages()[u].energy_capacity,
                  "storage charge bounds" + at);
        storage_moves += s.storage_p[u] != 0.0;
      }
      c.require(std::abs(r.info.p_gen - r.info.p_demand - r.info.losses) <= kBalanceTol,
                "power balance" + at);
    }
  }
  c.require(total == 10000, "step count");
  c.require(invalid > 0, "no invalid action exercised");
  c.require(trips > 0, "no overload trip exercised");
  c.require(storage_moves > 0, "storage never moved");
  return {c.pass(), c.pass() ? std::to_string(total) + " steps, " + std::to_string(invalid) +
                                   " invalid actions, " + std::to_string(trips) + " overload trips"
                             : c.first()};
}

// ---- reward and cost audit

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

Outcome reward_audit(const fs::path& work) {
  Checker c;
  const fs::path cfg = kSource / "data/configs/bus14_stress.cfg";
  const EnvConfig ec = load_env(cfg);
  const Environment env = Environment::from_config(ec);
  RunConfig rc;
  rc.seeds = 100;
  RandomAgent agent(7);
  const fs::path dir = work / "audit";
  run_experiment(env, agent, rc, ec.heuristic, dir);
  const AuditResult a = audit_run(env, dir);
  c.require(a.ok(), a.mismatches.empty() ? "empty audit" : a.mismatches.front());
  c.require(a.episodes == 100, "audited " + std::to_string(a.episodes) + " episodes");

  std::ifstream header_probe(dir / "logs/seed_0.csv");
  std::string line;
  std::getline(header_probe, line);
  const auto cols = split(line);
  auto col = [&](const std::string& n) {
    return static_cast<int>(std::find(cols.begin(), cols.end(), n) - cols.begin());
  };
  const int i_surv = col("r_survive"), i_over = col("r_overload"), i_cost = col("r_cost");
  c.require(i_cost < static_cast<int>(cols.size()), "log lacks reward columns");
  double worst_sum = 0.0;
  for (std::uint64_t seed : run_seeds(rc)) {
    std::ifstream in(dir / "logs" / ("seed_" + std::to_string(seed) + ".csv"));
    std::getline(in, line);
    double survive = 0.0;
    while (std::getline(in, line)) {
      const auto f = split(line);
      const double ro = std::stod(f[i_over]), rcost = std::stod(f[i_cost]);
      survive += std::stod(f[i_surv]);
      c.require(ro >= -1.0 && ro <= 1.0, "r_overload out of range: " + f[i_over]);
      c.require(rcost >= -1.0 && rcost <= 0.0, "r_cost out of range: " + f[i_cost]);
    }
    worst_sum = std::max(worst_sum, survive);
    c.require(survive <= 1.0 + kSurviveSumTol, "survival reward sums to " + fmt(survive, 17));
  }
  return {c.pass(), c.pass() ? std::to_string(a.episodes) + " episodes, " +
                                   std::to_string(a.rows) + " steps recomputed exactly"
                             : c.first()};
}

// ---- heuristics

Outcome heuristics() {
  Checker c;
  EnvConfig calm = load_env(kSource / "data/configs/bus14_calm.cfg");
  calm.episode_length = 288;
  const Environment env = Environment::from_config(calm);

  // Recovery from constructed safe splits.
  const std::vector<std::vector<SubstationSet>> scenarios = {
      {SubstationSet{5, {1, 1, 2, 1, 1, 1, 2}}, SubstationSet{8, {1, 2, 1, 1, 2}}},
      {SubstationSet{8, {1, 2, 1, 1, 2}}},
      {SubstationSet{5, {1, 1, 2, 1, 1, 1, 2}}},
  };
  const HeuristicConfig rec{HeuristicMode::Recovery, 0.95};
  int recovered = 0;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    EnvState s = env.reset(3 + k);
    for (const auto& a : scenarios[k]) env.step(s, a);
    c.require(!s.done && !idle_gate(s.flows.rho, 0.95),
              "scenario " + std::to_string(k) + " is not safe");
    int prev = hamming_distance(s.topo, env.reference());
    c.require(prev > 0, "scenario " + std::to_string(k) + " starts at the reference");
    bool monotone = true;
    auto obs = [&](const Action&, const StepResult&, const EnvState& st) {
      const int d = hamming_distance(st.topo, env.reference());
      monotone = monotone && d <= prev;
      prev = d;
    };
    wrap_step(env, s, NoOp{}, rec, obs);
    c.require(monotone, "distance increased in scenario " + std::to_string(k));
    c.require(prev == 0, "scenario " + std::to_string(k) + " ends at distance " + std::to_string(prev));
    recovered += prev == 0;
  }

  // Idle mode under calm chronics equals the pure no-op trajectory.
  const HeuristicConfig idle{HeuristicMode::Idle, 0.95};
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    std::vector<EnvState> wrapped;
    std::vector<double> rewards;
    auto obs = [&](const Action& a, const StepResult& r, const EnvState& st) {
      c.require(is_noop(a), "idle mode issued an action");
      wrapped.push_back(st);
      rewards.push_back(r.reward);
    };
    auto [ws, first] = wrapped_reset(env, seed, idle, obs);
    while (!ws.done) wrap_step(env, ws, NoOp{}, idle, obs);
    EnvState s = env.reset(seed);
    std::size_t k = 0;
    while (!s.done) {
      const StepResult r = env.step(s, NoOp{});
      c.require(k < wrapped.size() && s == wrapped[k] && r.reward == rewards[k],
                "idle trajectory diverges at step " + std::to_string(k));
      if (k >= wrapped.size()) break;
      ++k;
    }
    c.require(k == wrapped.size(), "idle trajectory length differs");
  }
  return {c.pass(), c.pass() ? std::to_string(recovered) +
                                   " recovery scenarios reach the reference; idle == no-op on 3 seeds"
                             : c.first()};
}

// ---- baseline ordering

std::vector<double> survivals(const RunReport& r) {
  std::vector<double> v;
  for (const auto& e : r.episodes) v.push_back(e.survival);
  return v;
}

Outcome baseline_ordering(const fs::path& work) {
  const fs::path cfg = kSource / "data/configs/bus14_stress.cfg";
  const EnvConfig ec = load_env(cfg);
  const Environment env = Environment::from_config(ec);
  RunConfig rc;
  rc.seeds = kBaselineSeeds;
  IdleAgent idle;
  GreedyAgent greedy;
  DcOptimAgent dc;
  const RunReport ri = run_experiment(env, idle, rc, ec.heuristic, work / "baseline/idle");
  const RunReport rg = run_experiment(env, greedy, rc, ec.heuristic, work / "baseline/greedy");
  const RunReport rd = run_experiment(env, dc, rc, ec.heuristic, work / "baseline/dc_optim");
  const double p = paired_t_pvalue(survivals(rg), survivals(ri));
  const double mi = ri.survival().mean, mg = rg.survival().mean, md = rd.survival().mean;
  const bool pass = mg > mi && p < kPValue;
  return {pass, "survival greedy " + fmt(mg) + ", idle " + fmt(mi) + ", dc_optim " + fmt(md) +
                    " (greedy " + (mg >= md ? ">=" : "<") + " dc_optim), p = " + fmt(p, 3)};
}

// ---- learning sanity

Outcome learning(const fs::path& work) {
  Checker c;
  // 3-state deterministic MDP against value iteration.
  constexpr double gamma = 0.9;
  const int next[3][2] = {{1, 0}, {2, 0}, {2, 2}};
  const double reward[3][2] = {{0.0, 0.2}, {0.0, 0.5}, {1.0, 0.0}};
  const bool terminal[3][2] = {{false, false}, {false, false}, {true, true}};
  double Q[3][2] = {};
  for (int it = 0; it < 2000; ++it) {
    double nq[3][2];
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) {
        const int n = next[s][a];
        nq[s][a] = reward[s][a] + (terminal[s][a] ? 0.0 : gamma * std::max(Q[n][0], Q[n][1]));
      }
    std::copy(&nq[0][0], &nq[0][0] + 6, &Q[0][0]);
  }
  auto one_hot = [](int s) {
    std::vector<double> x(3, 0.0);
    x[s] = 1.0;
    return x;
  };
  LinearQAgent q(2, 3, 0.5, gamma);
  Rng rng(1);
  for (int it = 0; it < 20000; ++it) {
    const int s = static_cast<int>(rng.below(3));
    const int a = static_cast<int>(rng.below(2));
    q.update({one_hot(s), a, reward[s][a], one_hot(next[s][a]), terminal[s][a]});
  }
  double mdp_err = 0.0;
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) mdp_err = std::max(mdp_err, std::abs(q.q(one_hot(s), a) - Q[s][a]));
  c.require(mdp_err <= kMdpTol, "MDP error " + fmt(mdp_err));

  // Linear Q on the stress scenario against the random policy.
  const ConfigFile f = ConfigFile::load(kSource / "data/configs/bus14_stress.cfg");
  const EnvConfig ec = env_config_from(f);
  const AgentConfig ac = agent_config_from(f);
  const Environment env = Environment::from_config(ec);
  const TrainingResult trained = train_linear_q(env, ac, ec.heuristic);
  save_linear_q(work / "linear_q.bin", trained.q, trained.standardizer);
  LinearQPolicy policy(trained.q, trained.standardizer);
  RandomAgent random(ac.seed);
  RunConfig rc;
  rc.seeds = kLearningSeeds;
  const RunReport rq = run_experiment(env, policy, rc, ec.heuristic, work / "learning/linear_q");
  const RunReport rr = run_experiment(env, random, rc, ec.heuristic, work / "learning/random");
  const double mq = rq.survival().mean, mr = rr.survival().mean;
  c.require(mq > mr, "linear Q " + fmt(mq) + " <= random " + fmt(mr));
  return {c.pass(), c.pass() ? "MDP error " + fmt(mdp_err) + "; survival linear Q " + fmt(mq) +
                                   " vs random " + fmt(mr) + " after " +
                                   std::to_string(ac.train_episodes) + " episodes"
                             : c.first()};
}

// ---- Lagrangian multipliers

Outcome lagrangian() {
  Checker c;
  Rng rng(31);
  for (int stream = 0; stream < 100; ++stream) {
    LagrangianState l({rng.uniform() * 5.0, rng.uniform() * 50.0}, 0.001 + rng.uniform());
    for (int e = 0; e < 500; ++e) {
      l.update(std::vector<double>{rng.uniform() * 10.0, rng.uniform() * 100.0});
      c.require(l.lambda[0] >= 0.0 && l.lambda[1] >= 0.0, "negative multiplier");
    }
  }
  LagrangianState up({1.0, 10.0}, 0.05);
  for (int e = 0; e < 100; ++e) {
    const auto before = up.lambda;
    up.update(std::vector<double>{1.5 + rng.uniform(), 11.0 + rng.uniform()});
    c.require(up.lambda[0] > before[0] && up.lambda[1] > before[1],
              "multiplier did not increase above threshold");
  }
  LagrangianState down({1.0}, 0.05);
  down.lambda = {2.0};
  int steps = 0;
  while (down.lambda[0] > 0.0 && steps < 10000) {
    const double before = down.lambda[0];
    down.update(std::vector<double>{rng.uniform() * 0.9});
    c.require(down.lambda[0] < before, "multiplier did not decrease below threshold");
    ++steps;
  }
  c.require(down.lambda[0] == 0.0, "multiplier did not reach 0");
  return {c.pass(), c.pass() ? "non-negative on 100 random streams; rises above and decays to 0 in " +
                                   std::to_string(steps) + " updates below the threshold"
                             : c.first()};
}

// ---- determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const fs::path& work) {
  Checker c;
  const EnvConfig ec = load_env(kSource / "data/configs/bus14_stress.cfg");
  RunConfig rc;
  rc.seeds = 3;
  int files = 0;
  for (const std::string kind : {"greedy", "random"}) {
    for (const char* run : {"a", "b"}) {
      const Environment env = Environment::from_config(ec);
      AgentConfig ac;
      ac.kind = kind;
      auto agent = make_agent(ac);
      run_experiment(env, *agent, rc, ec.heuristic, work / "determinism" / kind / run);
    }
    const fs::path a = work / "determinism" / kind / "a", b = work / "determinism" / kind / "b";
    std::vector<fs::path> rel = {"summary.json", "episodes.csv"};
    for (std::uint64_t s : run_seeds(rc)) rel.push_back(fs::path("logs") / ("seed_" + std::to_string(s) + ".csv"));
    for (const auto& r : rel) {
      const std::string x = slurp(a / r);
      c.require(!x.empty() && x == slurp(b / r), kind + "/" + r.string() + " differs");
      ++files;
    }
  }
  return {c.pass(), c.pass() ? std::to_string(files) + " artifacts byte-identical across reruns"
                             : c.first()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  fs::path work = "acceptance";
  std::vector<std::string> only;
  app.add_option("--work-dir", work, "Scratch directory for runs");
  app.add_option("--only", only, "Run only the named checks");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  struct Criterion {
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"combinatorics", 1, combinatorics},
      {"action_space_sizes", 60, action_space_sizes},
      {"flow_solver", 30, flow_solver},
      {"transition_rules", 120, transition_rules},
      {"reward_cost_audit", 600, [&] { return reward_audit(work); }},
      {"heuristics", 120, heuristics},
      {"baseline_ordering", 600, [&] { return baseline_ordering(work); }},
      {"learning_sanity", 1800, [&] { return learning(work); }},
      {"lagrangian", 10, lagrangian},
      {"determinism", 300, [&] { return determinism(work); }},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) {
      o.detail += "; over time budget of " + fmt(cr.budget_s) + " s";
      o.pass = false;
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << cr.name << ": " << o.detail << " [" << fmt(secs, 3)
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
