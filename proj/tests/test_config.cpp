#include <gtest/gtest.h>

#include "gridenv/config.hpp"
#include "gridenv/error.hpp"
#include "support.hpp"

using namespace gridenv;

namespace {

ConfigFile parse(const std::string& text) { return ConfigFile::parse(text, "test.cfg", "/cfg"); }

}  // namespace

TEST(ConfigFile, SectionsKeysAndComments) {
  const ConfigFile f = parse("# top\n[env]\ntask = topology  # trailing\nepisode_length = 100\n");
  EXPECT_EQ(f.get_string("env.task", ""), "topology");
  EXPECT_EQ(f.get_int("env.episode_length", 0), 100);
  EXPECT_FALSE(f.has("env.level"));
  EXPECT_EQ(f.get_int("env.level", -1), -1);
}

TEST(ConfigFile, OverridesReplaceValues) {
  ConfigFile f = parse("[env]\nepisode_length = 100\n");
  f.set_override("env.episode_length=200");
  EXPECT_EQ(f.get_int("env.episode_length", 0), 200);
  EXPECT_THROW(f.set_override("no_equals_sign"), ConfigError);
}

TEST(ConfigFile, TypeErrorsNameSourceLineAndKey) {
  const ConfigFile f = parse("[env]\nepisode_length = lots\n");
  try {
    f.get_int("env.episode_length", 0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("test.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("env.episode_length"), std::string::npos) << msg;
  }
}

TEST(ConfigFile, UnknownKeyRejected) {
  const ConfigFile f = parse("[env]\nepisode_lenght = 100\n");
  EXPECT_THROW(f.check_known(known_config_keys()), ConfigError);
}

TEST(ConfigFile, MalformedLinesAreParseErrors) {
  EXPECT_THROW(parse("[env\n"), ParseError);
  EXPECT_THROW(parse("[env]\njust words\n"), ParseError);
}

TEST(ConfigFile, PathsResolveAgainstConfigDirectory) {
  const ConfigFile f = parse("[env]\nscenario = ../scenarios/x.grid\nranking = /abs/r.json\n");
  EXPECT_EQ(f.get_path("env.scenario"), std::filesystem::path("/scenarios/x.grid"));
  EXPECT_EQ(f.get_path("env.ranking"), std::filesystem::path("/abs/r.json"));
  EXPECT_TRUE(f.get_path("env.chronics_dir").empty());
}

TEST(ConfigFile, ListsAndBools) {
  const ConfigFile f = parse("[opponent]\nlines = 4 8 9\n[agent]\nlagrangian = true\n");
  EXPECT_EQ(f.get_ints("opponent.lines"), (std::vector<int>{4, 8, 9}));
  EXPECT_TRUE(f.get_bool("agent.lagrangian", false));
}

TEST(EnvConfig, FromShippedStressConfig) {
  const ConfigFile f = ConfigFile::load(testing_support::data("configs/bus14_stress.cfg"));
  f.check_known(known_config_keys());
  const EnvConfig c = env_config_from(f);
  EXPECT_EQ(c.task, TaskKind::Topology);
  EXPECT_EQ(c.episode_length, 8064);
  EXPECT_GT(c.opponent.probability, 0.0);
  EXPECT_GT(c.chronics.demand_scale, 1.0);
  EXPECT_EQ(c.heuristic.mode, HeuristicMode::Idle);
  EXPECT_TRUE(std::filesystem::exists(c.scenario));
}

TEST(EnvConfig, RejectsBadValues) {
  EXPECT_THROW(env_config_from(parse("[env]\ntask = dance\n")), ConfigError);
  EXPECT_THROW(env_config_from(parse("[env]\nepisode_length = 0\n")), ConfigError);
  EXPECT_THROW(env_config_from(parse("[opponent]\nprobability = 1.5\n")), ConfigError);
  EXPECT_THROW(env_config_from(parse("[heuristic]\nmode = sleepy\n")), ConfigError);
}

TEST(RankConfig, BudgetZeroIsAnError) {
  EXPECT_THROW(rank_config_from(parse("[rank]\nbudget = 0\n")), ConfigError);
  EXPECT_EQ(rank_config_from(parse("[rank]\nbudget = 30\n")).budget, 30);
  EXPECT_EQ(rank_config_from(parse("")).budget, -1);
}

TEST(HeuristicMode, ParseAndPrint) {
  EXPECT_EQ(parse_heuristic_mode("recovery"), HeuristicMode::Recovery);
  EXPECT_EQ(to_string(HeuristicMode::Idle), "idle");
  EXPECT_THROW(parse_heuristic_mode("nap"), ConfigError);
}
