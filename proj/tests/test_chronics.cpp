#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gridenv/chronics.hpp"
#include "support.hpp"

using namespace gridenv;
using testing_support::bus14;

namespace {

ChronicsConfig small_config() {
  ChronicsConfig c;
  c.horizon = kStepsPerWeek;
  return c;
}

}  // namespace

TEST(Chronics, SameSeedIsBitIdentical) {
  const Grid g = bus14();
  const Chronics a = generate_chronics(g, small_config());
  const Chronics b = generate_chronics(g, small_config());
  EXPECT_TRUE(a == b);
  ChronicsConfig other = small_config();
  other.seed = 2;
  EXPECT_FALSE(a == generate_chronics(g, other));
}

TEST(Chronics, ShapesAndValidity) {
  const Grid g = bus14();
  const Chronics c = generate_chronics(g, small_config());
  EXPECT_EQ(c.horizon, kStepsPerWeek);
  EXPECT_EQ(c.load.rows(), kStepsPerWeek);
  EXPECT_EQ(c.load.cols(), g.n_loads());
  EXPECT_EQ(c.gen_plan.cols(), g.n_gens());
  EXPECT_NO_THROW(validate_chronics(g, c));
  for (int t = 0; t < c.horizon; ++t) {
    for (int i = 0; i < g.n_gens(); ++i) {
      const Generator& gen = g.generators()[i];
      EXPECT_GE(c.gen_plan.at(t, i), 0.0);
      EXPECT_LE(c.gen_plan.at(t, i), gen.p_max + 1e-9);
    }
  }
}

TEST(Chronics, NoNoiseNoRenewablesBalancesByConstruction) {
  const Grid g = bus14();
  ChronicsConfig cfg = small_config();
  cfg.demand_noise = 0.0;
  cfg.renewables = false;
  const Chronics c = generate_chronics(g, cfg);
  for (int t = 0; t < c.horizon; ++t) {
    const auto load = c.load.row(t);
    const auto plan = c.gen_plan.row(t);
    const double demand = std::accumulate(load.begin(), load.end(), 0.0);
    double dispatch = 0.0;
    for (int i = 0; i < g.n_gens(); ++i)
      if (!g.generators()[i].renewable()) dispatch += plan[i];
    ASSERT_NEAR(dispatch, demand, 1e-9) << "t = " << t;
  }
}

TEST(Chronics, ZeroMaintenanceRateMeansNoEvents) {
  const Grid g = bus14();
  EXPECT_TRUE(generate_chronics(g, small_config()).maintenance.empty());
}

TEST(Chronics, MaintenanceEventsRespectLinesAndHorizon) {
  const Grid g = bus14();
  ChronicsConfig cfg = small_config();
  cfg.maintenance_rate = 2.0;
  cfg.maintenance_lines = {3, 7};
  const Chronics c = generate_chronics(g, cfg);
  ASSERT_FALSE(c.maintenance.empty());
  for (const auto& m : c.maintenance) {
    EXPECT_TRUE(m.line == 3 || m.line == 7);
    EXPECT_GE(m.start, 0);
    EXPECT_LE(m.start + m.duration, c.horizon);
    EXPECT_EQ(m.duration, cfg.maintenance_duration);
  }
  const auto& m = c.maintenance.front();
  EXPECT_EQ(active_maintenance(c, m.line, m.start), m.duration);
  EXPECT_EQ(active_maintenance(c, m.line, m.start + m.duration), 0);
  const auto ahead = next_maintenance(c, m.line, 0);
  EXPECT_EQ(ahead.time_to_next, m.start);
  EXPECT_EQ(ahead.duration, m.duration);
}

TEST(Chronics, WeekdayDemandExceedsWeekendDemand) {
  const Grid g = bus14();
  ChronicsConfig cfg = small_config();
  cfg.demand_noise = 0.0;
  const Chronics c = generate_chronics(g, cfg);
  auto total = [&](int t) {
    const auto row = c.load.row(t);
    return std::accumulate(row.begin(), row.end(), 0.0);
  };
  const int noon = 12 * kStepsPerHour;
  EXPECT_GT(total(noon), total(5 * kStepsPerDay + noon));   // Monday vs Saturday
  EXPECT_GT(total(noon), total(3 * kStepsPerHour));         // noon vs night
}

TEST(Chronics, WriteLoadRoundTrip) {
  const Grid g = bus14();
  ChronicsConfig cfg = small_config();
  cfg.maintenance_rate = 1.0;
  const Chronics c = generate_chronics(g, cfg);
  const auto dir = testing_support::scratch("chronics_roundtrip");
  write_chronics(g, c, dir);
  const Chronics back = load_chronics(g, dir);
  EXPECT_TRUE(back == c);
}

TEST(Chronics, ValidationRejectsNegativeDemand) {
  const Grid g = bus14();
  Chronics c = generate_chronics(g, small_config());
  c.load.at(10, 2) = -1.0;
  EXPECT_THROW(validate_chronics(g, c), std::invalid_argument);
}

TEST(EpisodeStart, SingleValidStart) {
  Chronics c;
  c.horizon = 100;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_episode_start(c, 100, rng), 0);
}

TEST(EpisodeStart, EpisodeLongerThanHorizonThrows) {
  Chronics c;
  c.horizon = 100;
  Rng rng(3);
  EXPECT_THROW(sample_episode_start(c, 101, rng), std::invalid_argument);
}

TEST(EpisodeStart, UniformByChiSquare) {
  const int length = 10;
  Chronics c;
  c.horizon = 2 * length;
  Rng rng(2024);
  const int bins = c.horizon - length + 1;
  const int draws = 10000;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < draws; ++i) {
    const int s = sample_episode_start(c, length, rng);
    ASSERT_GE(s, 0);
    ASSERT_LT(s, bins);
    ++counts[s];
  }
  const double expected = static_cast<double>(draws) / bins;
  double chi2 = 0.0;
  for (int k : counts) chi2 += (k - expected) * (k - expected) / expected;
  // Upper 0.1% point of chi-square with 10 degrees of freedom.
  EXPECT_LT(chi2, 29.588);
}
