#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridenv/agents.hpp"
#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"
#include "gridenv/heuristics.hpp"

namespace gridenv {

// Per-step CSV trajectory log. Vectors are ';'-joined, doubles use the
// shortest round-trip form, so every logged number parses back exactly.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(const Grid& grid);

  void record(const Action& action, const StepResult& result, const EnvState& state);
  const std::string& csv() const { return text_; }
  void write(const std::filesystem::path& path) const;

  static std::string header();

 private:
  const Grid* grid_;
  std::string text_;
};

struct EpisodeSummary {
  std::uint64_t seed = 0;
  double survival = 0.0;
  int steps = 0;
  int decisions = 0;  // agent decision points
  double reward = 0.0;
  double lsi = 0.0;
  double tlo = 0.0;
  double mean_margin = 0.0;
  double mean_overload = 0.0;
  double mean_topology = 0.0;
};

// One episode of `agent` under the heuristic wrapper; every environment
// step goes to `log` when given.
EpisodeSummary run_episode(const Environment& env, Agent& agent, std::uint64_t seed,
                           const HeuristicConfig& heuristic, TrajectoryLog* log = nullptr);

struct MeanCI {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Mean with a two-sided 95% Student-t interval; zero width for n < 2.
MeanCI mean_ci95(const std::vector<double>& x);

// One-sided paired t-test of mean(a - b) > 0. Returns the p-value (1 when
// every difference is zero, 0 when all are equal and positive).
double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b);

struct RunReport {
  std::string agent;
  std::string scenario;
  std::string task;
  std::string heuristic;
  int episode_length = 0;
  std::vector<EpisodeSummary> episodes;

  MeanCI survival() const;
};

std::vector<std::uint64_t> run_seeds(const RunConfig& run);

// Runs every seed, writing logs/seed_<seed>.csv, episodes.csv and
// summary.json below `out`.
RunReport run_experiment(const Environment& env, Agent& agent, const RunConfig& run,
                         const HeuristicConfig& heuristic, const std::filesystem::path& out);

std::string report_json(const RunReport& report);
std::string episodes_csv(const RunReport& report);

struct AuditResult {
  long rows = 0;
  long episodes = 0;
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty() && rows > 0; }
};

// Recomputes rewards, costs and survival of every logged step and the
// summary numbers of a run directory, requiring exact equality.
AuditResult audit_run(const Environment& env, const std::filesystem::path& dir);

}  // namespace gridenv
