#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gridenv/chronics.hpp"
#include "gridenv/rewards.hpp"

namespace gridenv {

// Layered key-value text: `[section]` headers followed by `key = value`
// lines, `#` comments. Keys are addressed as "section.key". Values set later
// (e.g. from command-line overrides) replace earlier ones.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::string_view text, const std::string& source,
                          const std::filesystem::path& base_dir);
  static ConfigFile load(const std::filesystem::path& path);

  // Applies "section.key=value".
  void set_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_ints(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  // Relative paths resolve against the directory of the config file.
  std::filesystem::path get_path(const std::string& key) const;

  // Throws ConfigError naming the first key outside `known`.
  void check_known(const std::set<std::string>& known) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;  // 0 for overrides
  };
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_ = "<config>";
  std::filesystem::path base_dir_ = ".";
  std::map<std::string, Entry> values_;
};

enum class TaskKind { Topology, Redispatch };
enum class HeuristicMode { Off, Idle, Recovery };

std::string_view to_string(TaskKind kind);
std::string_view to_string(HeuristicMode mode);
HeuristicMode parse_heuristic_mode(std::string_view text);

struct CooldownConfig {
  int line = 3;        // after an agent switch
  int substation = 3;  // after an agent bus reassignment
  int forced = 12;     // after an opponent or overload disconnection
};

struct OpponentConfig {
  double probability = 0.0;  // per-step attack probability
  int duration = 12;         // steps before the attacked line is restored
  std::vector<int> lines;    // attackable lines, empty means all
};

struct HeuristicConfig {
  HeuristicMode mode = HeuristicMode::Off;
  double threshold = 0.95;  // agent acts when max rho >= threshold
};

struct EnvConfig {
  std::filesystem::path scenario;
  TaskKind task = TaskKind::Topology;
  int episode_length = kDefaultEpisodeLength;
  int level = -1;                    // -1 selects the full catalog
  std::filesystem::path ranking;     // required for level >= 0
  std::filesystem::path chronics_dir;  // empty: generate from `chronics`
  ChronicsConfig chronics;
  int overload_limit = 3;  // consecutive overloaded steps tolerated
  CooldownConfig cooldown;
  OpponentConfig opponent;
  RewardConfig reward;
  HeuristicConfig heuristic;
};

EnvConfig env_config_from(const ConfigFile& file);

struct AgentConfig {
  std::string kind = "idle";  // idle | random | greedy | dc_optim | linear_q
  double gamma = 0.9;
  double learning_rate = 0.01;
  double eps_initial = 1.0;
  double eps_final = 0.05;
  double eps_decay_fraction = 0.5;
  int train_episodes = 100;
  std::filesystem::path weights;
  bool lagrangian = false;
  double lambda_learning_rate = 0.01;
  std::uint64_t seed = 0;
};

AgentConfig agent_config_from(const ConfigFile& file);

struct RunConfig {
  int seeds = 10;
  std::uint64_t seed_base = 0;
  std::filesystem::path output = "out";
  std::string log_format = "csv";
};

RunConfig run_config_from(const ConfigFile& file);

struct RankConfig {
  int trials_per_action = 8;
  int episode_length = 2016;
  int budget = -1;  // simulated episodes, -1 means trials_per_action * catalog size
  std::uint64_t seed = 0;
  std::string replay = "fixed";  // fixed | once
  std::filesystem::path output = "ranking.json";
};

RankConfig rank_config_from(const ConfigFile& file);

// Every key the loaders above understand.
const std::set<std::string>& known_config_keys();

}  // namespace gridenv
