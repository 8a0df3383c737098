// Command-line entry points: run, rank, train, evaluate, audit.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gridenv/agents.hpp"
#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"
#include "gridenv/error.hpp"
#include "gridenv/experiment.hpp"
#include "gridenv/ranking.hpp"

using namespace gridenv;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string heuristic;
  std::string chronics_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Experiment config file")->required();
  cmd->add_option("--set", c.overrides, "Override a config key (section.key=value)");
  cmd->add_option("--heuristic", c.heuristic, "Heuristic mode: off, idle or recovery");
  cmd->add_option("--chronics-dir", c.chronics_dir, "Load chronics from this directory");
}

ConfigFile load_config(const Common& c) {
  ConfigFile f = ConfigFile::load(c.config);
  for (const auto& o : c.overrides) f.set_override(o);
  if (!c.heuristic.empty()) f.set("heuristic.mode", c.heuristic);
  if (!c.chronics_dir.empty()) f.set("chronics.dir", c.chronics_dir);
  f.check_known(known_config_keys());
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

int cmd_run(const Common& c, const std::string& agent_kind, int seeds, const std::string& output) {
  ConfigFile f = load_config(c);
  if (!agent_kind.empty()) f.set("agent.kind", agent_kind);
  if (seeds > 0) f.set("run.seeds", std::to_string(seeds));
  if (!output.empty()) f.set("run.output", output);
  const EnvConfig ec = env_config_from(f);
  const AgentConfig ac = agent_config_from(f);
  const RunConfig rc = run_config_from(f);
  const Environment env = Environment::from_config(ec);
  auto agent = make_agent(ac);
  const RunReport report = run_experiment(env, *agent, rc, ec.heuristic, rc.output);
  const MeanCI ci = report.survival();
  std::cout << report.agent << " on " << report.scenario << ": survival " << fmt(ci.mean)
            << " [" << fmt(ci.low) << ", " << fmt(ci.high) << "] over " << report.episodes.size()
            << " seeds -> " << rc.output.string() << "\n";
  return 0;
}

int cmd_rank(const Common& c, int budget, long long seed, const std::string& output,
             const std::string& curve) {
  ConfigFile f = load_config(c);
  if (budget != -2) f.set("rank.budget", std::to_string(budget));
  if (seed >= 0) f.set("rank.seed", std::to_string(seed));
  if (!output.empty()) f.set("rank.output", output);
  const EnvConfig ec = env_config_from(f);
  const RankConfig rk = rank_config_from(f);
  EnvConfig full = ec;
  full.level = -1;
  const Environment env = Environment::from_config(full);
  const ActionCatalog catalog = enumerate_topology_actions(env.grid());
  const ActionCatalog ranked = rank_actions(env, catalog, rk, ec.heuristic.threshold);
  const int budget_used = rk.budget > 0 ? rk.budget : rk.trials_per_action * catalog.size();
  write_ranking(rk.output, ranked, {rk.seed, rk.trials_per_action, rk.episode_length, budget_used,
                                    rk.replay});
  std::filesystem::path curve_path = curve;
  if (curve_path.empty()) curve_path = std::filesystem::path(rk.output).replace_extension(".curve.csv");
  write_rank_curve(curve_path, ranked);
  std::cout << "ranked " << ranked.size() << " actions with " << budget_used << " episodes -> "
            << rk.output.string() << "\n";
  return 0;
}

int cmd_train(const Common& c, int episodes, const std::string& output, const std::string& curve) {
  ConfigFile f = load_config(c);
  if (episodes > 0) f.set("agent.train_episodes", std::to_string(episodes));
  if (!output.empty()) f.set("agent.weights", output);
  const EnvConfig ec = env_config_from(f);
  const AgentConfig ac = agent_config_from(f);
  if (ac.weights.empty()) throw ConfigError("train needs agent.weights or --output");
  const Environment env = Environment::from_config(ec);
  const TrainingResult res = train_linear_q(env, ac, ec.heuristic);
  save_linear_q(ac.weights, res.q, res.standardizer);
  std::string csv = "episode,survival,reward,epsilon,decisions,lsi,tlo,lambda_lsi,lambda_tlo\n";
  for (const auto& e : res.curve) {
    csv += std::to_string(e.episode) + "," + std::to_string(e.survival) + "," +
           std::to_string(e.reward) + "," + std::to_string(e.epsilon) + "," +
           std::to_string(e.decisions) + "," + std::to_string(e.lsi) + "," +
           std::to_string(e.tlo) + "," + std::to_string(e.lambda[0]) + "," +
           std::to_string(e.lambda[1]) + "\n";
  }
  std::filesystem::path curve_path = curve;
  if (curve_path.empty()) curve_path = std::filesystem::path(ac.weights).replace_extension(".curve.csv");
  write_file(curve_path, csv);
  std::cout << "trained " << res.curve.size() << " episodes -> " << ac.weights.string() << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::vector<std::string>& agents,
                 const std::vector<std::string>& envs, int seeds, const std::string& output) {
  if (agents.empty()) throw ConfigError("evaluate needs at least one agent (--agents)");
  std::vector<std::string> configs = envs;
  if (configs.empty()) configs.push_back(c.config);
  std::filesystem::path out = output.empty() ? "evaluation" : output;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  std::vector<std::vector<double>> means(agents.size(), std::vector<double>(configs.size()));
  std::vector<std::string> env_names;
  for (std::size_t j = 0; j < configs.size(); ++j) {
    Common cj = c;
    cj.config = configs[j];
    ConfigFile f = load_config(cj);
    if (seeds > 0) f.set("run.seeds", std::to_string(seeds));
    const EnvConfig ec = env_config_from(f);
    const RunConfig rc = run_config_from(f);
    const Environment env = Environment::from_config(ec);
    const std::string env_name = std::filesystem::path(configs[j]).stem().string();
    env_names.push_back(env_name);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      AgentConfig ac = agent_config_from(f);
      ac.kind = agents[i];
      auto agent = make_agent(ac);
      const RunReport rep = run_experiment(env, *agent, rc, ec.heuristic, out / env_name / agents[i]);
      const MeanCI ci = rep.survival();
      means[i][j] = ci.mean;
      table.push_back({{"agent", agents[i]},
                       {"env", env_name},
                       {"survival_mean", ci.mean},
                       {"ci95_low", ci.low},
                       {"ci95_high", ci.high},
                       {"seeds", rep.episodes.size()}});
    }
  }
  std::string csv = "agent";
  for (const auto& e : env_names) csv += "," + e;
  csv += "\n";
  for (std::size_t i = 0; i < agents.size(); ++i) {
    csv += agents[i];
    for (double m : means[i]) csv += "," + std::to_string(m);
    csv += "\n";
  }
  write_file(out / "evaluation.csv", csv);
  write_file(out / "evaluation.json", table.dump(2) + "\n");
  std::cout << csv;
  return 0;
}

int cmd_audit(const Common& c, const std::string& dir) {
  const ConfigFile f = load_config(c);
  const EnvConfig ec = env_config_from(f);
  const Environment env = Environment::from_config(ec);
  const AuditResult res = audit_run(env, dir);
  for (const auto& m : res.mismatches) std::cout << "MISMATCH " << m << "\n";
  std::cout << (res.ok() ? "audit ok: " : "audit FAILED: ") << res.episodes << " episodes, "
            << res.rows << " steps\n";
  return res.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-grid topology and redispatch control environment"};
  app.require_subcommand(1);
  Common common;

  std::string agent, output, curve, run_dir;
  int seeds = 0;
  auto* run = app.add_subcommand("run", "Run an agent over several seeds and write logs and a report");
  add_common(run, common);
  run->add_option("--agent", agent, "idle, random, greedy, dc_optim or linear_q");
  run->add_option("--seeds", seeds, "Number of seeds");
  run->add_option("-o,--output", output, "Output directory");

  int budget = -2;
  long long rank_seed = -1;
  auto* rank = app.add_subcommand("rank", "Rank the full topology catalog by survival");
  add_common(rank, common);
  rank->add_option("--budget", budget, "Simulated episodes");
  rank->add_option("--seed", rank_seed, "Ranking seed");
  rank->add_option("-o,--output", output, "Ranking artifact (JSON)");
  rank->add_option("--curve", curve, "Rank curve CSV");

  int episodes = 0;
  auto* train = app.add_subcommand("train", "Train the linear Q agent");
  add_common(train, common);
  train->add_option("--episodes", episodes, "Training episodes");
  train->add_option("-o,--output", output, "Weights file");
  train->add_option("--curve", curve, "Training curve CSV");

  std::vector<std::string> agents, envs;
  auto* evaluate = app.add_subcommand("evaluate", "Compare agents across environments");
  add_common(evaluate, common);
  evaluate->add_option("--agents", agents, "Agents to compare")->delimiter(',');
  evaluate->add_option("--envs", envs, "Additional environment configs (default: --config)");
  evaluate->add_option("--seeds", seeds, "Number of seeds");
  evaluate->add_option("-o,--output", output, "Output directory");

  auto* audit = app.add_subcommand("audit", "Recompute a run directory from its logs");
  add_common(audit, common);
  audit->add_option("--run-dir", run_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(common, agent, seeds, output);
    if (*rank) return cmd_rank(common, budget, rank_seed, output, curve);
    if (*train) return cmd_train(common, episodes, output, curve);
    if (*evaluate) return cmd_evaluate(common, agents, envs, seeds, output);
    if (*audit) return cmd_audit(common, run_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IntegrityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
