#include <gtest/gtest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "support.hpp"

using testing_support::read_file;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + GRIDENV_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string calm_cfg() { return testing_support::data("configs/bus14_calm.cfg").string(); }

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(cli("run -c " + calm_cfg() + " --bogus"), 1); }

TEST(Cli, MissingSubcommand) { EXPECT_EQ(cli(""), 1); }

TEST(Cli, MissingConfigFile) { EXPECT_EQ(cli("run -c does_not_exist.cfg"), 1); }

TEST(Cli, BadOverrideIsConfigError) {
  EXPECT_EQ(cli("run -c " + calm_cfg() + " --set env.episode_length=abc"), 1);
  EXPECT_EQ(cli("run -c " + calm_cfg() + " --set env.colour=red"), 1);
}

TEST(Cli, EvaluateNeedsAgents) {
  const auto out = testing_support::scratch("cli_eval_empty");
  EXPECT_EQ(cli("evaluate -c " + calm_cfg() + " -o " + out.string()), 1);
}

TEST(Cli, RunThenAudit) {
  const auto out = testing_support::scratch("cli_run");
  const std::string common =
      "-c " + calm_cfg() + " --set env.episode_length=96 --set run.seeds=2";
  ASSERT_EQ(cli("run " + common + " --agent idle -o " + out.string()), 0);
  EXPECT_TRUE(std::filesystem::exists(out / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(out / "logs/seed_1.csv"));
  EXPECT_EQ(cli("audit " + common + " --run-dir " + out.string()), 0);
}

TEST(Cli, EvaluateSingleAgentSingleEnv) {
  const auto out = testing_support::scratch("cli_eval");
  ASSERT_EQ(cli("evaluate -c " + calm_cfg() +
                " --set env.episode_length=48 --agents idle --seeds 1 -o " + out.string()),
            0);
  const std::string csv = read_file(out / "evaluation.csv");
  EXPECT_EQ(csv, "agent,bus14_calm\nidle,1.000000\n");
}
