#include "gridenv/config.hpp"

#include <fstream>
#include <sstream>

#include "gridenv/error.hpp"
#include "text_util.hpp"

namespace gridenv {

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source,
                             const std::filesystem::path& base_dir) {
  ConfigFile cfg;
  cfg.source_ = source;
  cfg.base_dir_ = base_dir;
  std::string section;
  int line_no = 0;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    const auto line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ParseError(source, line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    if (section.empty()) throw ParseError(source, line_no, "key outside of a [section]");
    const auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    cfg.values_[section + "." + std::string(key)] = {std::string(detail::trim(line.substr(eq + 1))),
                                                     line_no};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string(), path.parent_path());
}

void ConfigFile::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto key = detail::trim(assignment.substr(0, eq));
  if (eq == std::string_view::npos || key.find('.') == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like section.key=value");
  }
  set(std::string(key), std::string(detail::trim(assignment.substr(eq + 1))));
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  values_[key] = {value, 0};
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second.value;
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
  auto it = values_.find(key);
  if (it != values_.end() && it->second.line > 0) {
    throw ConfigError(source_ + ":" + std::to_string(it->second.line) + ": " + key + ": " + what);
  }
  throw ConfigError(key + ": " + what);
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto d = detail::to_double(*v);
  if (!d) fail(key, "expected a number, got '" + *v + "'");
  return *d;
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto i = detail::to_int(*v);
  if (!i) fail(key, "expected an integer, got '" + *v + "'");
  return static_cast<int>(*i);
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto i = detail::to_int(*v);
  if (!i || *i < 0) fail(key, "expected a non-negative integer, got '" + *v + "'");
  return static_cast<std::uint64_t>(*i);
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(key, "expected true or false, got '" + *v + "'");
}

std::vector<int> ConfigFile::get_ints(const std::string& key) const {
  std::vector<int> out;
  auto v = get(key);
  if (!v) return out;
  for (auto tok : detail::split_ws(*v)) {
    auto i = detail::to_int(tok);
    if (!i) fail(key, "expected integers, got '" + std::string(tok) + "'");
    out.push_back(static_cast<int>(*i));
  }
  return out;
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto v = get(key);
  if (!v) return out;
  for (auto tok : detail::split_ws(*v)) out.emplace_back(tok);
  return out;
}

std::filesystem::path ConfigFile::get_path(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) return {};
  std::filesystem::path p(*v);
  if (p.is_relative()) {
    auto it = values_.find(key);
    // Overrides from the command line are relative to the working directory.
    if (it != values_.end() && it->second.line > 0) p = base_dir_ / p;
  }
  return p.lexically_normal();
}

void ConfigFile::check_known(const std::set<std::string>& known) const {
  for (const auto& [key, entry] : values_) {
    if (!known.count(key)) fail(key, "unknown config key");
  }
}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::Topology ? "topology" : "redispatch";
}

std::string_view to_string(HeuristicMode mode) {
  switch (mode) {
    case HeuristicMode::Off:
      return "off";
    case HeuristicMode::Idle:
      return "idle";
    case HeuristicMode::Recovery:
      return "recovery";
  }
  return "?";
}

HeuristicMode parse_heuristic_mode(std::string_view text) {
  if (text == "off") return HeuristicMode::Off;
  if (text == "idle") return HeuristicMode::Idle;
  if (text == "recovery") return HeuristicMode::Recovery;
  throw ConfigError("heuristic mode must be off, idle or recovery, got '" + std::string(text) + "'");
}

EnvConfig env_config_from(const ConfigFile& f) {
  EnvConfig c;
  c.scenario = f.get_path("env.scenario");
  if (c.scenario.empty()) throw ConfigError("env.scenario is required");
  const std::string task = f.get_string("env.task", "topology");
  if (task == "topology") {
    c.task = TaskKind::Topology;
  } else if (task == "redispatch") {
    c.task = TaskKind::Redispatch;
  } else {
    throw ConfigError("env.task must be topology or redispatch, got '" + task + "'");
  }
  c.episode_length = f.get_int("env.episode_length", c.episode_length);
  if (c.episode_length < 1) throw ConfigError("env.episode_length must be >= 1");
  c.level = f.get_int("env.level", c.level);
  c.ranking = f.get_path("env.ranking");
  c.chronics_dir = f.get_path("chronics.dir");
  c.overload_limit = f.get_int("env.overload_limit", c.overload_limit);

  ChronicsConfig& ch = c.chronics;
  ch.horizon = f.get_int("chronics.horizon", std::max(ch.horizon, c.episode_length));
  ch.seed = f.get_u64("chronics.seed", ch.seed);
  ch.demand_scale = f.get_double("chronics.demand_scale", ch.demand_scale);
  ch.daily_amplitude = f.get_double("chronics.daily_amplitude", ch.daily_amplitude);
  ch.weekend_factor = f.get_double("chronics.weekend_factor", ch.weekend_factor);
  ch.demand_noise = f.get_double("chronics.demand_noise", ch.demand_noise);
  ch.renewables = f.get_bool("chronics.renewables", ch.renewables);
  ch.solar_peak_factor = f.get_double("chronics.solar_peak_factor", ch.solar_peak_factor);
  ch.wind_mean = f.get_double("chronics.wind_mean", ch.wind_mean);
  ch.wind_persistence = f.get_double("chronics.wind_persistence", ch.wind_persistence);
  ch.wind_volatility = f.get_double("chronics.wind_volatility", ch.wind_volatility);
  ch.maintenance_rate = f.get_double("chronics.maintenance_rate", ch.maintenance_rate);
  ch.maintenance_duration = f.get_int("chronics.maintenance_duration", ch.maintenance_duration);
  ch.maintenance_lines = f.get_ints("chronics.maintenance_lines");

  c.cooldown.line = f.get_int("env.line_cooldown", c.cooldown.line);
  c.cooldown.substation = f.get_int("env.sub_cooldown", c.cooldown.substation);
  c.cooldown.forced = f.get_int("env.forced_cooldown", c.cooldown.forced);
  if (c.cooldown.line < 0 || c.cooldown.substation < 0 || c.cooldown.forced < 0) {
    throw ConfigError("cooldowns must be >= 0");
  }

  c.opponent.probability = f.get_double("opponent.probability", c.opponent.probability);
  c.opponent.duration = f.get_int("opponent.duration", c.opponent.duration);
  c.opponent.lines = f.get_ints("opponent.lines");
  if (c.opponent.probability < 0.0 || c.opponent.probability > 1.0) {
    throw ConfigError("opponent.probability must lie in [0, 1]");
  }

  RewardConfig& r = c.reward;
  r.alpha = f.get_double("reward.alpha", r.alpha);
  r.beta = f.get_double("reward.beta", r.beta);
  r.eta = f.get_double("reward.eta", r.eta);
  r.epsilon = f.get_double("reward.epsilon", r.epsilon);
  r.cost_scale = f.get_double("reward.cost_scale", r.cost_scale);
  r.tau_lsi = f.get_double("reward.tau_lsi", r.tau_lsi);
  r.tau_tlo = f.get_double("reward.tau_tlo", r.tau_tlo);
  r.episode_length = c.episode_length;
  if (r.alpha < 0.0 || r.beta < 0.0 || r.eta < 0.0) throw ConfigError("reward weights must be >= 0");
  if (r.epsilon <= 0.0) throw ConfigError("reward.epsilon must be > 0");
  if (r.cost_scale <= 0.0) throw ConfigError("reward.cost_scale must be > 0");

  c.heuristic.mode = parse_heuristic_mode(f.get_string("heuristic.mode", "off"));
  c.heuristic.threshold = f.get_double("heuristic.threshold", c.heuristic.threshold);
  if (!(c.heuristic.threshold > 0.0 && c.heuristic.threshold <= 1.0)) {
    throw ConfigError("heuristic.threshold must lie in (0, 1]");
  }
  return c;
}

AgentConfig agent_config_from(const ConfigFile& f) {
  AgentConfig a;
  a.kind = f.get_string("agent.kind", a.kind);
  a.gamma = f.get_double("agent.gamma", a.gamma);
  a.learning_rate = f.get_double("agent.learning_rate", a.learning_rate);
  a.eps_initial = f.get_double("agent.eps_initial", a.eps_initial);
  a.eps_final = f.get_double("agent.eps_final", a.eps_final);
  a.eps_decay_fraction = f.get_double("agent.eps_decay_fraction", a.eps_decay_fraction);
  a.train_episodes = f.get_int("agent.train_episodes", a.train_episodes);
  a.weights = f.get_path("agent.weights");
  a.lagrangian = f.get_bool("agent.lagrangian", a.lagrangian);
  a.lambda_learning_rate = f.get_double("agent.lambda_learning_rate", a.lambda_learning_rate);
  a.seed = f.get_u64("agent.seed", a.seed);
  if (!(a.gamma >= 0.0 && a.gamma < 1.0)) throw ConfigError("agent.gamma must lie in [0, 1)");
  return a;
}

RunConfig run_config_from(const ConfigFile& f) {
  RunConfig r;
  r.seeds = f.get_int("run.seeds", r.seeds);
  r.seed_base = f.get_u64("run.seed_base", r.seed_base);
  r.output = f.get_path("run.output");
  if (r.output.empty()) r.output = "out";
  r.log_format = f.get_string("run.log_format", r.log_format);
  if (r.seeds < 1) throw ConfigError("run.seeds must be >= 1");
  if (r.log_format != "csv") throw ConfigError("run.log_format must be csv");
  return r;
}

RankConfig rank_config_from(const ConfigFile& f) {
  RankConfig r;
  r.trials_per_action = f.get_int("rank.trials_per_action", r.trials_per_action);
  r.episode_length = f.get_int("rank.episode_length", r.episode_length);
  r.budget = f.get_int("rank.budget", r.budget);
  r.seed = f.get_u64("rank.seed", r.seed);
  r.replay = f.get_string("rank.replay", r.replay);
  auto out = f.get_path("rank.output");
  if (!out.empty()) r.output = out;
  if (r.trials_per_action < 1) throw ConfigError("rank.trials_per_action must be >= 1");
  if (r.budget == 0 || r.budget < -1) throw ConfigError("rank.budget must be >= 1");
  if (r.episode_length < 1) throw ConfigError("rank.episode_length must be >= 1");
  if (r.replay != "fixed" && r.replay != "once") {
    throw ConfigError("rank.replay must be fixed or once");
  }
  return r;
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "env.scenario", "env.task", "env.episode_length", "env.level", "env.ranking",
      "env.overload_limit", "env.line_cooldown", "env.sub_cooldown", "env.forced_cooldown",
      "chronics.dir", "chronics.horizon", "chronics.seed", "chronics.demand_scale",
      "chronics.daily_amplitude", "chronics.weekend_factor", "chronics.demand_noise",
      "chronics.renewables", "chronics.solar_peak_factor", "chronics.wind_mean",
      "chronics.wind_persistence", "chronics.wind_volatility", "chronics.maintenance_rate",
      "chronics.maintenance_duration", "chronics.maintenance_lines", "opponent.probability",
      "opponent.duration", "opponent.lines", "reward.alpha", "reward.beta", "reward.eta",
      "reward.epsilon", "reward.cost_scale", "reward.tau_lsi", "reward.tau_tlo",
      "heuristic.mode", "heuristic.threshold", "agent.kind", "agent.gamma",
      "agent.learning_rate", "agent.eps_initial", "agent.eps_final", "agent.eps_decay_fraction",
      "agent.train_episodes", "agent.weights", "agent.lagrangian", "agent.lambda_learning_rate",
      "agent.seed", "run.seeds", "run.seed_base", "run.output", "run.log_format",
      "rank.trials_per_action", "rank.episode_length", "rank.budget", "rank.seed", "rank.replay",
      "rank.output"};
  return keys;
}

}  // namespace gridenv
