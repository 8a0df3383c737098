#include "gridenv/experiment.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "gridenv/error.hpp"
#include "text_util.hpp"

namespace gridenv {

using detail::format_double;

namespace {

const char* const kColumns[] = {
    "t",          "action",      "valid",       "reward",         "r_survive",
    "r_overload", "r_cost",      "lsi",         "tlo",            "done",
    "truncated",  "termination", "survival",    "feasible",       "p_gen",
    "p_demand",   "losses",      "redispatch",  "storage",        "c_marginal",
    "n_islands",  "margin",      "overload_metric", "topology_metric", "topo_hash",
    "topo",       "gen_p",       "load_p",      "storage_p",      "line_status",
    "causes",     "flows",       "rho"};
constexpr int kNumColumns = sizeof(kColumns) / sizeof(kColumns[0]);

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> split_doubles(std::string_view s) {
  std::vector<double> out;
  if (s.empty()) return out;
  while (true) {
    const auto semi = s.find(';');
    auto v = detail::to_double(s.substr(0, semi));
    if (!v) throw ParseError("bad number in trajectory log: '" + std::string(s.substr(0, semi)) + "'");
    out.push_back(*v);
    if (semi == std::string_view::npos) break;
    s = s.substr(semi + 1);
  }
  return out;
}

}  // namespace

TrajectoryLog::TrajectoryLog(const Grid& grid) : grid_(&grid), text_(header()) {}

std::string TrajectoryLog::header() {
  std::string h;
  for (int i = 0; i < kNumColumns; ++i) {
    if (i) h += ',';
    h += kColumns[i];
  }
  return h + "\n";
}

void TrajectoryLog::record(const Action& action, const StepResult& r, const EnvState& s) {
  const StepInfo& i = r.info;
  std::string topo, status, causes;
  for (auto b : s.topo.topo_vect) topo += static_cast<char>('0' + b);
  for (bool b : s.topo.line_status) status += b ? '1' : '0';
  for (auto c : s.cause) causes += static_cast<char>('0' + static_cast<int>(c));
  std::ostringstream o;
  o << s.t << ',' << encode_action(action) << ',' << int(i.valid) << ',' << format_double(r.reward)
    << ',' << format_double(i.r_survive) << ',' << format_double(i.r_overload) << ','
    << format_double(i.r_cost) << ',' << r.lsi << ',' << r.tlo << ',' << int(r.done) << ','
    << int(i.truncated) << ',' << i.termination << ',' << format_double(i.survival) << ','
    << int(i.feasible) << ',' << format_double(i.p_gen) << ',' << format_double(i.p_demand)
    << ',' << format_double(i.losses) << ',' << format_double(i.redispatch) << ','
    << format_double(i.storage) << ',' << format_double(i.c_marginal) << ',' << i.n_islands
    << ',' << format_double(i.metrics.margin) << ',' << format_double(i.metrics.overload) << ','
    << format_double(i.metrics.topology) << ',' << topology_hash(s.topo) << ',' << topo << ','
    << join(s.gen_p) << ',' << join(s.load_p) << ',' << join(s.storage_p) << ',' << status
    << ',' << causes << ',' << join(s.flows.flow) << ',' << join(s.flows.rho) << '\n';
  text_ += o.str();
}

void TrajectoryLog::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text_;
}

EpisodeSummary run_episode(const Environment& env, Agent& agent, std::uint64_t seed,
                           const HeuristicConfig& heuristic, TrajectoryLog* log) {
  EpisodeSummary sum;
  sum.seed = seed;
  double margin = 0.0, overload = 0.0, topology = 0.0;
  const StepObserver observer = [&](const Action& a, const StepResult& r, const EnvState& s) {
    ++sum.steps;
    sum.reward += r.reward;
    sum.lsi += r.lsi;
    sum.tlo += r.tlo;
    margin += r.info.metrics.margin;
    overload += r.info.metrics.overload;
    topology += r.info.metrics.topology;
    if (log) log->record(a, r, s);
  };
  agent.begin_episode(seed);
  auto [state, first] = wrapped_reset(env, seed, heuristic, observer);
  std::vector<double> obs = std::move(first.observation);
  while (!state.done) {
    const Action a = agent.act(env, state, obs);
    ++sum.decisions;
    StepResult r = wrap_step(env, state, a, heuristic, observer);
    obs = std::move(r.observation);
  }
  sum.survival = static_cast<double>(state.t) / env.episode_length();
  if (sum.steps > 0) {
    sum.mean_margin = margin / sum.steps;
    sum.mean_overload = overload / sum.steps;
    sum.mean_topology = topology / sum.steps;
  }
  return sum;
}

MeanCI mean_ci95(const std::vector<double>& x) {
  MeanCI ci;
  const std::size_t n = x.size();
  if (n == 0) return ci;
  double s = 0.0;
  for (double v : x) s += v;
  ci.mean = s / n;
  ci.low = ci.high = ci.mean;
  if (n < 2) return ci;
  double ss = 0.0;
  for (double v : x) ss += (v - ci.mean) * (v - ci.mean);
  const double sd = std::sqrt(ss / (n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(double(n));
  ci.low = ci.mean - half;
  ci.high = ci.mean + half;
  return ci;
}

double paired_t_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired test needs two equal samples of size >= 2");
  }
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (sd == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / (sd / std::sqrt(double(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::cdf(boost::math::complement(dist, t));
}

MeanCI RunReport::survival() const {
  std::vector<double> s;
  for (const auto& e : episodes) s.push_back(e.survival);
  return mean_ci95(s);
}

std::vector<std::uint64_t> run_seeds(const RunConfig& run) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < run.seeds; ++i) seeds.push_back(run.seed_base + i);
  return seeds;
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["agent"] = r.agent;
  j["scenario"] = r.scenario;
  j["task"] = r.task;
  j["heuristic"] = r.heuristic;
  j["episode_length"] = r.episode_length;
  const MeanCI ci = r.survival();
  j["survival"] = {{"mean", ci.mean}, {"ci95_low", ci.low}, {"ci95_high", ci.high}};
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  double reward = 0.0, margin = 0.0, overload = 0.0, topology = 0.0, lsi = 0.0, tlo = 0.0;
  for (const auto& e : r.episodes) {
    eps.push_back({{"seed", e.seed},
                   {"survival", e.survival},
                   {"steps", e.steps},
                   {"decisions", e.decisions},
                   {"reward", e.reward},
                   {"lsi", e.lsi},
                   {"tlo", e.tlo},
                   {"mean_margin", e.mean_margin},
                   {"mean_overload", e.mean_overload},
                   {"mean_topology", e.mean_topology}});
    reward += e.reward;
    lsi += e.lsi;
    tlo += e.tlo;
    margin += e.mean_margin;
    overload += e.mean_overload;
    topology += e.mean_topology;
  }
  const double n = r.episodes.empty() ? 1.0 : double(r.episodes.size());
  j["mean_reward"] = reward / n;
  j["mean_lsi"] = lsi / n;
  j["mean_tlo"] = tlo / n;
  j["mean_margin"] = margin / n;
  j["mean_overload"] = overload / n;
  j["mean_topology"] = topology / n;
  j["episodes"] = std::move(eps);
  return j.dump(2) + "\n";
}

std::string episodes_csv(const RunReport& r) {
  std::string s =
      "seed,survival,steps,decisions,reward,lsi,tlo,mean_margin,mean_overload,mean_topology\n";
  for (const auto& e : r.episodes) {
    s += std::to_string(e.seed) + "," + format_double(e.survival) + "," +
         std::to_string(e.steps) + "," + std::to_string(e.decisions) + "," +
         format_double(e.reward) + "," + format_double(e.lsi) + "," + format_double(e.tlo) +
         "," + format_double(e.mean_margin) + "," + format_double(e.mean_overload) + "," +
         format_double(e.mean_topology) + "\n";
  }
  return s;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

RunReport run_experiment(const Environment& env, Agent& agent, const RunConfig& run,
                         const HeuristicConfig& heuristic, const std::filesystem::path& out) {
  RunReport report;
  report.agent = agent.name();
  report.scenario = env.grid().name();
  report.task = std::string(to_string(env.config().task));
  report.heuristic = std::string(to_string(heuristic.mode));
  report.episode_length = env.episode_length();
  for (std::uint64_t seed : run_seeds(run)) {
    TrajectoryLog log(env.grid());
    report.episodes.push_back(run_episode(env, agent, seed, heuristic, &log));
    log.write(out / "logs" / ("seed_" + std::to_string(seed) + ".csv"));
  }
  write_text(out / "episodes.csv", episodes_csv(report));
  write_text(out / "summary.json", report_json(report));
  return report;
}

// ---------------------------------------------------------------------------
// Audit

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return out;
}

double num(std::string_view s) {
  auto v = detail::to_double(s);
  if (!v) throw ParseError("bad number in trajectory log: '" + std::string(s) + "'");
  return *v;
}

}  // namespace

AuditResult audit_run(const Environment& env, const std::filesystem::path& dir) {
  AuditResult res;
  const Grid& g = env.grid();
  const RewardConfig& rc = env.config().reward;
  const int T = env.episode_length();
  std::vector<double> limits;
  for (const Line& l : g.lines()) limits.push_back(l.thermal_limit);
  const TopologyState ref = reference_topology(g);

  std::ifstream sf(dir / "summary.json");
  if (!sf) throw ConfigError("run directory '" + dir.string() + "' has no summary.json");
  const nlohmann::json summary = nlohmann::json::parse(sf);
  RunReport recomputed;
  recomputed.agent = summary.at("agent").get<std::string>();
  recomputed.scenario = summary.at("scenario").get<std::string>();
  recomputed.task = summary.at("task").get<std::string>();
  recomputed.heuristic = summary.at("heuristic").get<std::string>();
  recomputed.episode_length = summary.at("episode_length").get<int>();
  if (recomputed.episode_length != T) {
    res.mismatches.push_back("episode length differs from the config");
  }

  auto mismatch = [&res](const std::string& where, const std::string& what) {
    if (res.mismatches.size() < 50) res.mismatches.push_back(where + ": " + what);
  };

  for (const auto& ep : summary.at("episodes")) {
    const std::uint64_t seed = ep.at("seed").get<std::uint64_t>();
    const auto path = dir / "logs" / ("seed_" + std::to_string(seed) + ".csv");
    std::ifstream in(path);
    if (!in) {
      mismatch(path.string(), "missing trajectory log");
      continue;
    }
    ++res.episodes;
    std::string line;
    std::getline(in, line);
    if (line + "\n" != TrajectoryLog::header()) mismatch(path.string(), "unexpected header");
    EpisodeSummary e;
    e.seed = seed;
    double margin = 0.0, overload = 0.0, topology = 0.0;
    int last_t = 0;
    int row = 0;
    while (std::getline(in, line)) {
      ++row;
      ++res.rows;
      const std::string where = path.filename().string() + ":" + std::to_string(row + 1);
      const auto c = split_csv(line);
      if (static_cast<int>(c.size()) != kNumColumns) {
        mismatch(where, "wrong column count");
        continue;
      }
      const int t = static_cast<int>(num(c[0]));
      const bool feasible = c[13] == "1";
      const auto gen_p = split_doubles(c[26]);
      const auto load_p = split_doubles(c[27]);
      const auto storage_p = split_doubles(c[28]);
      const auto flows = split_doubles(c[31]);
      std::vector<bool> status;
      for (char ch : c[29]) status.push_back(ch == '1');
      std::vector<DisconnectCause> causes;
      for (char ch : c[30]) causes.push_back(static_cast<DisconnectCause>(ch - '0'));
      TopologyState topo;
      for (char ch : c[25]) topo.topo_vect.push_back(static_cast<std::int8_t>(ch - '0'));
      topo.line_status = status;

      double p_gen = 0.0, p_demand = 0.0;
      for (double p : gen_p) p_gen += p;
      for (double d : load_p) p_demand += d;
      for (double p : storage_p) (p > 0 ? p_gen : p_demand) += std::abs(p);
      double c_marginal = 0.0;
      for (int i = 0; i < g.n_gens(); ++i) {
        if (gen_p[i] > 1e-9) c_marginal = std::max(c_marginal, g.generators()[i].marginal_cost);
      }
      const double r_survive = reward_survive(T);
      double r_overload = -1.0, r_cost = -1.0;
      if (feasible) {
        r_overload = reward_overload(flows, limits, status, rc.epsilon);
        r_cost = reward_cost(p_gen, p_demand, num(c[17]), num(c[18]), c_marginal, rc.cost_scale);
      }
      const double reward = total_reward(rc, r_survive, r_overload, r_cost);
      const int lsi = cost_lsi(p_gen, p_demand, static_cast<int>(num(c[20])));
      const int tlo = cost_tlo(flows, limits, status, causes);
      const Metrics m = metrics_snapshot(flows, limits, status, hamming_distance(topo, ref),
                                         rc.epsilon);
      auto check = [&](int col, double want) {
        if (num(c[col]) != want) {
          mismatch(where, std::string(kColumns[col]) + " logged " + std::string(c[col]) +
                              ", recomputed " + format_double(want));
        }
      };
      check(3, reward);
      check(4, r_survive);
      check(5, r_overload);
      check(6, r_cost);
      check(7, lsi);
      check(8, tlo);
      check(12, static_cast<double>(t) / T);
      check(14, p_gen);
      check(15, p_demand);
      check(19, c_marginal);
      check(21, m.margin);
      check(22, m.overload);
      check(23, m.topology);
      if (c[24] != std::to_string(topology_hash(topo))) mismatch(where, "topology hash");
      if (t != last_t + 1) mismatch(where, "non-consecutive step index");
      last_t = t;
      ++e.steps;
      e.reward += reward;
      e.lsi += lsi;
      e.tlo += tlo;
      margin += m.margin;
      overload += m.overload;
      topology += m.topology;
      const bool done = c[9] == "1";
      if (done != (!feasible || t == T)) mismatch(where, "done flag");
    }
    e.survival = static_cast<double>(last_t) / T;
    e.decisions = ep.at("decisions").get<int>();
    if (e.steps > 0) {
      e.mean_margin = margin / e.steps;
      e.mean_overload = overload / e.steps;
      e.mean_topology = topology / e.steps;
    }
    recomputed.episodes.push_back(e);
  }
  const std::string want = report_json(recomputed);
  std::ifstream sf2(dir / "summary.json");
  std::stringstream have;
  have << sf2.rdbuf();
  if (have.str() != want) res.mismatches.push_back("summary.json differs from the recomputed summary");
  std::ifstream ef(dir / "episodes.csv");
  std::stringstream eh;
  eh << ef.rdbuf();
  if (eh.str() != episodes_csv(recomputed)) {
    res.mismatches.push_back("episodes.csv differs from the recomputed table");
  }
  return res;
}

}  // namespace gridenv
