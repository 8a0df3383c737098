#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "gridenv/environment.hpp"
#include "gridenv/error.hpp"
#include "support.hpp"

using namespace gridenv;
using testing_support::calm_config;
using testing_support::test_data;

namespace {

Environment make_env(const EnvConfig& cfg, std::optional<Chronics> chronics = std::nullopt) {
  auto grid = std::make_shared<const Grid>(load_grid(cfg.scenario));
  auto ch = std::make_shared<const Chronics>(chronics ? std::move(*chronics)
                                                      : generate_chronics(*grid, cfg.chronics));
  ActionSpace space = cfg.task == TaskKind::Topology
                          ? full_action_space(enumerate_topology_actions(*grid))
                          : ActionSpace{};
  return Environment(grid, ch, cfg, std::move(space));
}

FlowSolution fake_flows(const std::vector<double>& rho) {
  FlowSolution f;
  f.rho = rho;
  f.flow = rho;
  f.feasible = true;
  return f;
}

EnvState overload_state(int n) {
  EnvState s;
  s.topo.line_status.assign(n, true);
  s.overflow.assign(n, 0);
  s.line_cooldown.assign(n, 0);
  s.cause.assign(n, DisconnectCause::None);
  return s;
}

}  // namespace

TEST(Reset, EqualSeedsGiveEqualStates) {
  const Environment env = make_env(calm_config());
  EXPECT_TRUE(env.reset(11) == env.reset(11));
  const EnvState a = env.reset(11);
  EXPECT_EQ(a.t, 0);
  EXPECT_FALSE(a.done);
  EXPECT_EQ(a.topo, env.reference());
}

TEST(Reset, MaintenanceAtStartDisconnectsLine) {
  EnvConfig cfg = calm_config();
  const Grid g = load_grid(cfg.scenario);
  Chronics ch = generate_chronics(g, cfg.chronics);
  ch.maintenance = {{5, 100, 24}};
  const Environment env = make_env(cfg, ch);
  const EnvState s = env.reset_at(0, 100);
  EXPECT_FALSE(s.topo.line_status[5]);
  EXPECT_EQ(s.cause[5], DisconnectCause::Maintenance);
  EXPECT_EQ(s.line_cooldown[5], 24);
  EXPECT_EQ(s.flows.flow[5], 0.0);

  // Midway through the event only the remainder is blocked.
  const EnvState mid = env.reset_at(0, 110);
  EXPECT_EQ(mid.line_cooldown[5], 14);
}

TEST(Reset, MaintenanceEndsAndLineReturns) {
  EnvConfig cfg = calm_config();
  const Grid g = load_grid(cfg.scenario);
  Chronics ch = generate_chronics(g, cfg.chronics);
  ch.maintenance = {{5, 100, 6}};
  const Environment env = make_env(cfg, ch);
  EnvState s = env.reset_at(0, 98);
  int out_steps = 0;
  for (int k = 0; k < 12; ++k) {
    const StepResult r = env.step(s, NoOp{});
    ASSERT_FALSE(r.done);
    out_steps += !s.topo.line_status[5];
    EXPECT_EQ(r.tlo, 0);  // maintenance outages are exempt
  }
  EXPECT_EQ(out_steps, 6);
  EXPECT_TRUE(s.topo.line_status[5]);
  EXPECT_EQ(s.cause[5], DisconnectCause::None);
}

TEST(Step, NoOpCalmStep) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  const StepResult r = env.step(s, NoOp{});
  EXPECT_FALSE(r.done);
  EXPECT_TRUE(r.info.valid);
  EXPECT_TRUE(r.info.feasible);
  EXPECT_EQ(s.topo, env.reference());
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(static_cast<int>(r.observation.size()), env.layout().size);
}

TEST(Step, BusSplitDuringCooldownHasNoEffect) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  s.sub_cooldown[5] = 2;
  const EnvState before = s;
  const StepResult r = env.step(s, SubstationSet{5, {1, 1, 2, 1, 1, 1, 2}});
  EXPECT_FALSE(r.info.valid);
  EXPECT_EQ(s.topo, before.topo);
  EXPECT_EQ(s.sub_cooldown[5], 1);
}

TEST(Step, ValidSplitStartsCooldown) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  const StepResult r = env.step(s, SubstationSet{5, {1, 1, 2, 1, 1, 1, 2}});
  EXPECT_TRUE(r.info.valid);
  EXPECT_EQ(s.sub_cooldown[5], env.config().cooldown.substation);
  EXPECT_EQ(hamming_distance(s.topo, env.reference()), 2);
  // Blocks exactly the next `substation` cooldown steps.
  for (int k = 0; k < env.config().cooldown.substation; ++k) {
    EXPECT_FALSE(env.step(s, SubstationSet{5, std::vector<std::int8_t>(7, 1)}).info.valid);
  }
  EXPECT_TRUE(env.step(s, SubstationSet{5, std::vector<std::int8_t>(7, 1)}).info.valid);
  EXPECT_EQ(s.topo, env.reference());
}

TEST(Step, SettingCurrentTopologyIsValidWithoutCooldown) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  const StepResult r = env.step(s, SubstationSet{5, std::vector<std::int8_t>(7, 1)});
  EXPECT_TRUE(r.info.valid);
  EXPECT_EQ(s.sub_cooldown[5], 0);
}

TEST(Step, IsolatingALoadEndsTheEpisode) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  for (int k = 0; k < 4; ++k) env.step(s, NoOp{});
  // Substation 13: load, then the ends of lines 16 and 19.
  const StepResult r = env.step(s, SubstationSet{13, {2, 1, 1}});
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.info.truncated);
  EXPECT_EQ(r.info.termination, "islanding");
  EXPECT_DOUBLE_EQ(r.info.survival, 5.0 / env.episode_length());
  EXPECT_EQ(r.info.r_overload, -1.0);
  EXPECT_EQ(r.info.r_cost, -1.0);
  EXPECT_THROW(env.step(s, NoOp{}), std::logic_error);
}

TEST(Step, TruncatesAtEpisodeLength) {
  const Environment env = make_env(calm_config(20));
  EnvState s = env.reset(4);
  StepResult r;
  for (int k = 0; k < 20; ++k) r = env.step(s, NoOp{});
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.info.truncated);
  EXPECT_EQ(r.info.termination, "truncated");
  EXPECT_DOUBLE_EQ(r.info.survival, 1.0);
}

TEST(Step, MalformedActionsThrowBeforeMutation) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  const EnvState before = s;
  EXPECT_THROW(env.step(s, LineToggle{99}), ActionError);
  EXPECT_THROW(env.step(s, SubstationSet{5, {1, 2}}), ActionError);
  EXPECT_THROW(env.step(s, ContinuousAction{{0.0}}), ActionError);
  EXPECT_THROW(env.step(s, 100000), ActionError);
  EXPECT_TRUE(s == before);
}

TEST(Step, LineToggleDisconnectsAndReconnects) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  StepResult r = env.step(s, LineToggle{17});
  ASSERT_TRUE(r.info.valid);
  EXPECT_FALSE(s.topo.line_status[17]);
  EXPECT_EQ(s.cause[17], DisconnectCause::Agent);
  EXPECT_EQ(r.tlo, 1);
  EXPECT_EQ(s.line_cooldown[17], env.config().cooldown.line);
  for (int k = 0; k < env.config().cooldown.line; ++k) {
    EXPECT_FALSE(env.step(s, LineToggle{17}).info.valid);
  }
  r = env.step(s, LineToggle{17});
  EXPECT_TRUE(r.info.valid);
  EXPECT_TRUE(s.topo.line_status[17]);
}

TEST(Step, OpponentDisconnectsAndRestores) {
  EnvConfig cfg = calm_config();
  cfg.opponent.probability = 1.0;
  cfg.opponent.duration = 5;
  cfg.opponent.lines = {17};
  const Environment env = make_env(cfg);
  EnvState s = env.reset(2);
  StepResult r = env.step(s, NoOp{});
  EXPECT_EQ(r.info.opponent_line, 17);
  EXPECT_FALSE(s.topo.line_status[17]);
  EXPECT_EQ(s.cause[17], DisconnectCause::Opponent);
  EXPECT_EQ(s.line_cooldown[17], cfg.cooldown.forced);
  EXPECT_EQ(r.tlo, 0);
  // The outage lasts until both its duration and the forced cooldown ran out.
  int steps = 1;
  while (!s.topo.line_status[17]) {
    r = env.step(s, NoOp{});
    ASSERT_FALSE(r.done);
    ++steps;
  }
  EXPECT_EQ(steps, cfg.cooldown.forced + 1);
}

TEST(Overloads, ThreeStepsThenReliefKeepsLine) {
  EnvState s = overload_state(1);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(process_overloads(s, fake_flows({1.2}), 3, 12).empty());
  EXPECT_TRUE(process_overloads(s, fake_flows({0.8}), 3, 12).empty());
  EXPECT_EQ(s.overflow[0], 0);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(process_overloads(s, fake_flows({1.2}), 3, 12).empty());
  EXPECT_TRUE(s.topo.line_status[0]);
}

TEST(Overloads, FourthConsecutiveStepDisconnects) {
  EnvState s = overload_state(2);
  for (int k = 0; k < 3; ++k) process_overloads(s, fake_flows({1.2, 0.5}), 3, 12);
  EXPECT_TRUE(s.topo.line_status[0]);
  const auto tripped = process_overloads(s, fake_flows({1.2, 0.5}), 3, 12);
  EXPECT_EQ(tripped, std::vector<int>{0});
  EXPECT_FALSE(s.topo.line_status[0]);
  EXPECT_EQ(s.cause[0], DisconnectCause::Overload);
  EXPECT_EQ(s.line_cooldown[0], 12);
  EXPECT_TRUE(s.topo.line_status[1]);
}

TEST(Overloads, ExactlyFullIsNotAnOverload) {
  EnvState s = overload_state(1);
  for (int k = 0; k < 10; ++k) EXPECT_TRUE(process_overloads(s, fake_flows({1.0}), 3, 12).empty());
  EXPECT_EQ(s.overflow[0], 0);
}

TEST(Overloads, EngineTripsOnFourthStep) {
  // Tight limits on one line make it overload from the first step.
  EnvConfig cfg = calm_config();
  const Grid base = load_grid(cfg.scenario);
  const auto dir = testing_support::scratch("tight_grid");
  GridData d;
  d.name = base.name();
  d.base_mva = base.base_mva();
  d.substations = base.substations();
  d.lines = base.lines();
  d.generators = base.generators();
  d.loads = base.loads();
  d.difficulty_levels = base.difficulty_levels();
  d.lines[17].thermal_limit = 1.0;
  {
    std::ofstream out(dir / "tight.grid");
    out << format_grid(Grid(d));
  }
  cfg.scenario = dir / "tight.grid";
  const Environment env = make_env(cfg);
  EnvState s = env.reset(3);
  ASSERT_GT(s.flows.rho[17], 1.0);
  for (int k = 1; k <= 3; ++k) {
    const StepResult r = env.step(s, NoOp{});
    ASSERT_TRUE(r.info.overload_disconnections.empty()) << "step " << k;
    EXPECT_EQ(s.overflow[17], k);
    EXPECT_EQ(r.tlo, 1);
  }
  const StepResult r = env.step(s, NoOp{});
  EXPECT_EQ(r.info.overload_disconnections, std::vector<int>{17});
  EXPECT_FALSE(s.topo.line_status[17]);
  EXPECT_EQ(s.flows.flow[17], 0.0);  // flows re-solved after the trip
}

// Randomized transition properties over 10,000 steps on a topology task with
// an opponent and on a redispatch task with storage.
TEST(TransitionProperties, RandomizedSteps) {
  struct Case {
    EnvConfig cfg;
    int steps;
  };
  EnvConfig topo = calm_config(2016);
  topo.chronics.demand_scale = 1.15;
  topo.opponent.probability = 0.02;
  EnvConfig redisp;
  redisp.scenario = test_data("storage5.grid");
  redisp.task = TaskKind::Redispatch;
  redisp.episode_length = 2016;
  redisp.chronics.horizon = 4032;
  const std::vector<Case> cases = {{topo, 6000}, {redisp, 4000}};

  int total = 0, invalid_seen = 0, trips_seen = 0, storage_seen = 0;
  for (const Case& c : cases) {
    const Environment env = make_env(c.cfg);
    const Grid& g = env.grid();
    const ContinuousBounds bounds = continuous_bounds(g);
    Rng rng(99);
    std::uint64_t episode = 0;
    EnvState s = env.reset(episode);
    for (int k = 0; k < c.steps; ++k, ++total) {
      if (s.done) s = env.reset(++episode);
      Action a = NoOp{};
      if (c.cfg.task == TaskKind::Topology) {
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

      // Cooldown safety: actions on cooling elements are rejected and inert.
      if (const auto* ss = std::get_if<SubstationSet>(&a)) {
        if (before.sub_cooldown[ss->sub] > 0) {
          ASSERT_FALSE(r.info.valid);
          for (int p = g.sub_start(ss->sub); p < g.sub_start(ss->sub) + g.sub_size(ss->sub); ++p)
            ASSERT_EQ(s.topo.topo_vect[p], before.topo.topo_vect[p]);
        }
      }
      if (const auto* lt = std::get_if<LineToggle>(&a)) {
        if (before.line_cooldown[lt->line] > 0) ASSERT_FALSE(r.info.valid);
      }
      // Invalid actions behave exactly like the no-op.
      if (!r.info.valid) {
        ++invalid_seen;
        const StepResult rn = env.step(twin, NoOp{});
        ASSERT_TRUE(twin == s);
        ASSERT_EQ(rn.reward, r.reward);
        ASSERT_EQ(rn.observation, r.observation);
      }
      for (int l = 0; l < g.n_lines(); ++l) {
        ASSERT_GE(s.line_cooldown[l], 0);
        ASSERT_LE(s.overflow[l], env.config().overload_limit);
        ASSERT_EQ(s.topo.line_status[l], s.cause[l] == DisconnectCause::None);
      }
      for (int sub = 0; sub < g.n_subs(); ++sub) ASSERT_GE(s.sub_cooldown[sub], 0);

      // Overload rule: a trip happens only after `limit` overloaded steps.
      for (int l : r.info.overload_disconnections) {
        ++trips_seen;
        ASSERT_EQ(before.overflow[l], env.config().overload_limit);
      }

      if (!r.info.feasible) continue;
      // Ramp limits, slack included.
      for (int i = 0; i < g.n_gens(); ++i) {
        const Generator& gen = g.generators()[i];
        if (gen.renewable()) {
          ASSERT_LE(s.gen_p[i], s.curtail_limit[i] * gen.p_max + 1e-9);
          continue;
        }
        ASSERT_LE(s.gen_p[i] - before.gen_p[i], gen.ramp_up + 1e-9) << "gen " << i;
        ASSERT_GE(s.gen_p[i] - before.gen_p[i], -gen.ramp_down - 1e-9) << "gen " << i;
        ASSERT_GE(s.gen_p[i], gen.p_min - 1e-9);
        ASSERT_LE(s.gen_p[i], gen.p_max + 1e-9);
      }
      // Storage energy balance.
      for (int u = 0; u < g.n_storages(); ++u) {
        const double expect = before.storage_charge[u] - s.storage_p[u] * kStepHours;
        ASSERT_NEAR(s.storage_charge[u], expect, 1e-9);
        ASSERT_GE(s.storage_charge[u], 0.0);
        ASSERT_LE(s.storage_charge[u], g.storages()[u].energy_capacity);
        storage_seen += s.storage_p[u] != 0.0;
      }
      // Power balance: generation minus demand equals losses.
      ASSERT_NEAR(r.info.p_gen - r.info.p_demand, r.info.losses, 1e-6);
    }
  }
  EXPECT_EQ(total, 10000);
  EXPECT_GT(invalid_seen, 0);
  EXPECT_GT(storage_seen, 0);
  RecordProperty("overload_trips", trips_seen);
}

TEST(Redispatch, OffsetsAccumulateAndRampLimited) {
  EnvConfig cfg;
  cfg.scenario = test_data("storage5.grid");
  cfg.task = TaskKind::Redispatch;
  cfg.episode_length = 288;
  cfg.chronics.horizon = 2016;
  const Environment env = make_env(cfg);
  EnvState s = env.reset(0);
  std::vector<double> v(env.spec().bounds.dim(), 0.0);
  v[2] = 1.0;  // leave renewables uncurtailed
  v[3] = 1.0;
  v[1] = 5.0;  // +5 MW on generator 1, twice
  env.step(s, ContinuousAction{v});
  env.step(s, ContinuousAction{v});
  EXPECT_DOUBLE_EQ(s.redispatch[1], 10.0);
  const StepResult r = env.step(s, ContinuousAction{std::vector<double>{0, 0, 1, 0.5, 0, 0}});
  EXPECT_DOUBLE_EQ(s.curtail_limit[3], 0.5);
  EXPECT_LE(s.gen_p[3], 15.0 + 1e-12);
  EXPECT_GE(r.info.redispatch, 10.0);
}

TEST(Observation, Bus14TopologyLayout) {
  const Environment env = make_env(calm_config());
  const ObservationLayout& L = env.layout();
  EXPECT_EQ(L.size, 80 + 111);
  EXPECT_EQ(L.slice("topo_vect").length, 57);
  EXPECT_EQ(L.slice("time").offset, 0);
  EXPECT_EQ(L.slice("time").length, 6);
  EXPECT_THROW(L.slice("nope"), std::out_of_range);
  int offset = 0;
  for (const Slice& sl : L.slices) {
    EXPECT_EQ(sl.offset, offset);
    offset += sl.length;
  }
  EXPECT_EQ(offset, L.size);
}

TEST(Observation, ValuesFollowState) {
  const Environment env = make_env(calm_config());
  EnvState s = env.reset(1);
  env.step(s, LineToggle{17});
  const auto obs = env.observe(s);
  const ObservationLayout& L = env.layout();
  EXPECT_EQ(obs[L.slice("line_status").offset + 17], 0.0);
  EXPECT_EQ(obs[L.slice("line_cooldown").offset + 17], env.config().cooldown.line);
  const int or_pos = env.grid().line_or_pos(17);
  EXPECT_EQ(obs[L.slice("topo_vect").offset + or_pos], -1.0);
  for (int l = 0; l < env.grid().n_lines(); ++l) {
    EXPECT_DOUBLE_EQ(obs[L.slice("rho").offset + l], s.flows.rho[l]);
  }
}

TEST(Spec, DiscreteAndContinuousHandshake) {
  const Environment env = make_env(calm_config());
  const auto j = nlohmann::json::parse(env.spec().to_json());
  EXPECT_EQ(j["action"]["kind"], "discrete");
  EXPECT_EQ(j["action"]["n"], 209);
  EXPECT_EQ(j["observation"]["size"], env.layout().size);

  EnvConfig rc = calm_config();
  rc.task = TaskKind::Redispatch;
  const Environment renv = make_env(rc);
  const SpaceSpec spec = renv.spec();
  EXPECT_EQ(spec.discrete_actions, 0);
  EXPECT_EQ(spec.bounds.dim(), 6);
  const auto rj = nlohmann::json::parse(spec.to_json());
  EXPECT_EQ(rj["action"]["kind"], "continuous");
  EXPECT_EQ(rj["action"]["low"].size(), 6u);
}

TEST(FromConfig, LevelZeroUsesShippedRanking) {
  EnvConfig cfg = calm_config();
  cfg.level = 0;
  cfg.ranking = testing_support::data("rankings/bus14.json");
  const Environment env = Environment::from_config(cfg);
  EXPECT_EQ(env.action_space().size(), 50);
  EXPECT_EQ(env.spec().discrete_actions, 50);
  cfg.level = 1;
  EXPECT_EQ(Environment::from_config(cfg).action_space().size(), 209);
  cfg.level = 2;
  EXPECT_THROW(Environment::from_config(cfg), ConfigError);
  cfg.level = 0;
  cfg.ranking.clear();
  EXPECT_THROW(Environment::from_config(cfg), ConfigError);
}

TEST(FromConfig, OpponentLineOutOfRange) {
  EnvConfig cfg = calm_config();
  cfg.opponent.lines = {25};
  EXPECT_THROW(Environment::from_config(cfg), ConfigError);
}
