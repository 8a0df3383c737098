#include <gtest/gtest.h>

#include "gridenv/heuristics.hpp"
#include "support.hpp"

using namespace gridenv;
using testing_support::calm_config;

namespace {

Environment calm_env(int length = 288) { return Environment::from_config(calm_config(length)); }

}  // namespace

TEST(IdleGate, Threshold) {
  EXPECT_FALSE(idle_gate(std::vector<double>{0.5, 0.94, 0.1}, 0.95));
  EXPECT_TRUE(idle_gate(std::vector<double>{0.5, 0.96}, 0.95));
  EXPECT_TRUE(idle_gate(std::vector<double>{0.95}, 0.95));
  EXPECT_FALSE(idle_gate(std::vector<double>{}, 0.95));
}

TEST(Recovery, AtReferenceIsNoOp) {
  const Grid g = testing_support::bus14();
  const TopologyState ref = reference_topology(g);
  EXPECT_TRUE(is_noop(recovery_step(g, ref, ref, std::vector<int>(g.n_subs(), 0))));
}

TEST(Recovery, RestoresTheLowestDifferingSubstation) {
  const Grid g = testing_support::bus14();
  const TopologyState ref = reference_topology(g);
  TopologyState cur = apply_topology(g, ref, SubstationAssignment{8, {1, 2, 1, 2, 1}});
  cur = apply_topology(g, cur, SubstationAssignment{3, {1, 2, 2, 1, 1, 1}});
  std::vector<int> cd(g.n_subs(), 0);
  const Action a = recovery_step(g, cur, ref, cd);
  ASSERT_TRUE(std::holds_alternative<SubstationSet>(a));
  EXPECT_EQ(std::get<SubstationSet>(a).sub, 3);
  EXPECT_EQ(std::get<SubstationSet>(a).buses, std::vector<std::int8_t>(6, 1));
  cd[3] = 2;
  EXPECT_TRUE(is_noop(recovery_step(g, cur, ref, cd)));
}

TEST(Recovery, HammingDistanceDecreasesToZero) {
  const Grid g = testing_support::bus14();
  const TopologyState ref = reference_topology(g);
  TopologyState cur = ref;
  for (int sub : {1, 4, 5, 8}) {
    std::vector<std::int8_t> b(g.sub_size(sub), 1);
    b.back() = 2;
    b[1] = 2;
    cur = apply_topology(g, cur, SubstationAssignment{sub, b});
  }
  const std::vector<int> cd(g.n_subs(), 0);
  int d = hamming_distance(cur, ref);
  int steps = 0;
  while (d > 0) {
    const Action a = recovery_step(g, cur, ref, cd);
    const auto& s = std::get<SubstationSet>(a);
    cur = apply_topology(g, cur, SubstationAssignment{s.sub, s.buses});
    const int next = hamming_distance(cur, ref);
    ASSERT_LT(next, d);
    d = next;
    ++steps;
  }
  EXPECT_EQ(steps, 4);
}

TEST(Recovery, EngineReturnsSafeGridToReference) {
  const Environment env = calm_env();
  EnvState s = env.reset(3);
  // Two safe splits, each followed by cooldown steps.
  env.step(s, SubstationSet{5, {1, 1, 2, 1, 1, 1, 2}});
  env.step(s, SubstationSet{8, {1, 2, 1, 1, 2}});
  ASSERT_FALSE(s.done);
  ASSERT_EQ(hamming_distance(s.topo, env.reference()), 4);
  ASSERT_FALSE(idle_gate(s.flows.rho, 0.95));

  const HeuristicConfig h{HeuristicMode::Recovery, 0.95};
  std::vector<int> distances;
  auto observer = [&](const Action&, const StepResult&, const EnvState& st) {
    distances.push_back(hamming_distance(st.topo, env.reference()));
  };
  const StepResult r = wrap_step(env, s, NoOp{}, h, observer);
  ASSERT_TRUE(r.info.truncated);  // stops only at the horizon since the grid stays safe
  ASSERT_FALSE(distances.empty());
  for (std::size_t i = 1; i < distances.size(); ++i) EXPECT_LE(distances[i], distances[i - 1]);
  EXPECT_EQ(distances.back(), 0);
}

TEST(IdleMode, CalmRunEqualsPureNoOpTrajectory) {
  const Environment env = calm_env();
  const HeuristicConfig h{HeuristicMode::Idle, 0.95};
  std::vector<EnvState> wrapped;
  std::vector<double> wrapped_rewards;
  auto observer = [&](const Action& a, const StepResult& r, const EnvState& st) {
    EXPECT_TRUE(is_noop(a));
    wrapped.push_back(st);
    wrapped_rewards.push_back(r.reward);
  };
  auto [ws, first] = wrapped_reset(env, 21, h, observer);
  while (!ws.done) wrap_step(env, ws, NoOp{}, h, observer);

  EnvState s = env.reset(21);
  std::size_t k = 0;
  while (!s.done) {
    const StepResult r = env.step(s, NoOp{});
    ASSERT_LT(k, wrapped.size());
    ASSERT_TRUE(s == wrapped[k]) << "step " << k;
    ASSERT_EQ(r.reward, wrapped_rewards[k]);
    ++k;
  }
  EXPECT_EQ(k, wrapped.size());
  EXPECT_EQ(static_cast<int>(k), env.episode_length());
}

TEST(WrapStep, AccumulatesRewardsAndCountsSteps) {
  const Environment env = calm_env();
  const HeuristicConfig h{HeuristicMode::Idle, 0.95};
  EnvState s = env.reset(5);
  double sum = 0.0;
  int lsi = 0, tlo = 0, n = 0;
  auto observer = [&](const Action&, const StepResult& r, const EnvState&) {
    sum += r.reward;
    lsi += r.lsi;
    tlo += r.tlo;
    ++n;
  };
  const StepResult r = wrap_step(env, s, LineToggle{17}, h, observer);
  EXPECT_EQ(r.info.steps, n);
  EXPECT_EQ(r.reward, sum);
  EXPECT_EQ(r.lsi, lsi);
  EXPECT_EQ(r.tlo, tlo);
  EXPECT_TRUE(r.info.valid);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(s.t, env.episode_length());
}

TEST(WrapStep, ImmediateRiskGivesOneStep) {
  const Environment env = calm_env();
  const HeuristicConfig h{HeuristicMode::Idle, 0.0};  // always at risk
  EnvState s = env.reset(5);
  const StepResult r = wrap_step(env, s, NoOp{}, h);
  EXPECT_EQ(r.info.steps, 1);
  EXPECT_EQ(s.t, 1);
}

TEST(WrapStep, OffModeIsSingleStep) {
  const Environment env = calm_env();
  EnvState a = env.reset(5);
  EnvState b = a;
  const StepResult wr = wrap_step(env, a, NoOp{}, HeuristicConfig{});
  const StepResult sr = env.step(b, NoOp{});
  EXPECT_TRUE(a == b);
  EXPECT_EQ(wr.reward, sr.reward);
  EXPECT_EQ(wr.observation, sr.observation);
  EXPECT_EQ(wr.info.steps, 1);
}
