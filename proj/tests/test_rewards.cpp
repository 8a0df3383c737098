#include <gtest/gtest.h>

#include <cmath>

#include "gridenv/rewards.hpp"
#include "gridenv/rng.hpp"

using namespace gridenv;

namespace {

std::vector<bool> all_on(int n) { return std::vector<bool>(n, true); }

}  // namespace

TEST(Survive, SumsToSurvivalFraction) {
  double sum = 0.0;
  for (int t = 0; t < 8064; ++t) sum += reward_survive(8064);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  sum = 0.0;
  for (int t = 0; t < 4032; ++t) sum += reward_survive(8064);
  EXPECT_NEAR(sum, 0.5, 1e-12);
  EXPECT_EQ(reward_survive(1), 1.0);
}

TEST(Overload, AllIdleLinesGiveFullBonus) {
  const std::vector<double> flows(5, 0.0), limits(5, 10.0);
  EXPECT_DOUBLE_EQ(reward_overload(flows, limits, all_on(5), 1e-6), 1.0);
}

TEST(Overload, OneLineAt120Percent) {
  const double eps = 1e-6;
  const int n = 10;
  // Unit limits, so the relative excess is 0.2 / (1 + eps).
  std::vector<double> flows(n, 0.5), limits(n, 1.0);
  flows[3] = 1.2;
  EXPECT_NEAR(reward_overload(flows, limits, all_on(n), eps), -0.2 / (1.0 + eps) / n, 1e-15);
  flows[3] = -1.2;  // direction does not matter
  EXPECT_NEAR(reward_overload(flows, limits, all_on(n), eps), -0.2 / (1.0 + eps) / n, 1e-15);
}

TEST(Overload, OneDisconnectedLine) {
  const int n = 8;
  std::vector<double> flows(n, 5.0), limits(n, 10.0);
  auto status = all_on(n);
  status[2] = false;
  flows[2] = 0.0;
  EXPECT_NEAR(reward_overload(flows, limits, status, 1e-6), -1.0 / n, 1e-15);
}

TEST(Overload, StaysInRange) {
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const int n = 1 + static_cast<int>(rng.below(20));
    std::vector<double> flows(n), limits(n);
    std::vector<bool> status(n);
    for (int i = 0; i < n; ++i) {
      limits[i] = 1.0 + 100.0 * rng.uniform();
      flows[i] = (rng.uniform() - 0.5) * 10.0 * limits[i];
      status[i] = rng.bernoulli(0.8);
    }
    const double r = reward_overload(flows, limits, status, 1e-6);
    ASSERT_GE(r, -1.0);
    ASSERT_LE(r, 1.0);
  }
}

TEST(Cost, BalancedAndIdleIsZero) {
  EXPECT_EQ(reward_cost(100.0, 100.0, 0.0, 0.0, 40.0, 10000.0), 0.0);
}

TEST(Cost, HandEvaluatedExample) {
  EXPECT_NEAR(reward_cost(105.0, 100.0, 10.0, 0.0, 40.0, 10000.0), -0.06, 1e-15);
}

TEST(Cost, ClampedToMinusOne) {
  EXPECT_EQ(reward_cost(1e6, 0.0, 1e6, 1e6, 100.0, 1.0), -1.0);
  Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    const double r = reward_cost(1000 * rng.uniform(), 1000 * rng.uniform(), 100 * rng.uniform(),
                                 10 * rng.uniform(), 100 * rng.uniform(), 10000.0);
    ASSERT_LE(r, 0.0);
    ASSERT_GE(r, -1.0);
  }
}

TEST(Total, WeightedSum) {
  RewardConfig c;
  c.alpha = 1.0;
  c.beta = 0.5;
  c.eta = 0.25;
  EXPECT_DOUBLE_EQ(total_reward(c, 0.1, 0.4, -0.2), 0.1 + 0.5 * 0.4 + 0.25 * -0.2);
}

TEST(Lsi, Indicators) {
  EXPECT_EQ(cost_lsi(100.0, 100.0, 0), 0);
  EXPECT_EQ(cost_lsi(99.0, 100.0, 0), 1);
  EXPECT_EQ(cost_lsi(99.0, 100.0, 2), 2);
  EXPECT_EQ(cost_lsi(100.0 - 1e-7, 100.0, 0), 0);  // within the shortfall tolerance
}

TEST(Tlo, CountsOverloadsAndCulpableDisconnections) {
  const std::vector<double> limits(5, 10.0);
  std::vector<double> flows = {11.0, -12.0, 5.0, 0.0, 3.0};
  std::vector<bool> status = {true, true, true, false, true};
  std::vector<DisconnectCause> causes(5, DisconnectCause::None);
  causes[3] = DisconnectCause::Overload;
  EXPECT_EQ(cost_tlo(flows, limits, status, causes), 3);
  causes[3] = DisconnectCause::Maintenance;
  EXPECT_EQ(cost_tlo(flows, limits, status, causes), 2);
  causes[3] = DisconnectCause::Opponent;
  EXPECT_EQ(cost_tlo(flows, limits, status, causes), 2);
}

TEST(Tlo, MaintenanceOnlyAndNominal) {
  const std::vector<double> limits(3, 10.0), flows = {1.0, 0.0, 2.0};
  const std::vector<bool> status = {true, false, true};
  const std::vector<DisconnectCause> causes = {DisconnectCause::None, DisconnectCause::Maintenance,
                                               DisconnectCause::None};
  EXPECT_EQ(cost_tlo(flows, limits, status, causes), 0);
  const std::vector<DisconnectCause> none(3, DisconnectCause::None);
  EXPECT_EQ(cost_tlo(flows, limits, std::vector<bool>(3, true), none), 0);
}

TEST(Metrics, Snapshot) {
  const std::vector<double> limits(4, 10.0), flows = {2.0, 4.0, 0.0, 12.0};
  const Metrics m = metrics_snapshot(flows, limits, std::vector<bool>(4, true), 0, 1e-6);
  EXPECT_EQ(m.topology, 0.0);
  EXPECT_FALSE(std::signbit(m.topology));
  EXPECT_DOUBLE_EQ(m.margin, 8.0 + 6.0 + 10.0 + 0.0);
  const Metrics moved = metrics_snapshot(flows, limits, std::vector<bool>(4, true), 7, 1e-6);
  EXPECT_EQ(moved.topology, -7.0);
  const Metrics off = metrics_snapshot(std::vector<double>(4, 0.0), limits,
                                       std::vector<bool>(4, false), 0, 1e-6);
  EXPECT_EQ(off.margin, -4.0);
}

TEST(CostAccumulator, Thresholds) {
  CostAccumulator acc(0.0, 5.0);
  acc.add(0, 4);
  EXPECT_FALSE(acc.lsi_violated());
  EXPECT_FALSE(acc.tlo_violated());
  acc.add(1, 1);
  EXPECT_TRUE(acc.lsi_violated());
  EXPECT_TRUE(acc.tlo_violated());
  EXPECT_EQ(acc.tlo(), 5.0);
}
