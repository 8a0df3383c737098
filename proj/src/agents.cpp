#include "gridenv/agents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gridenv/error.hpp"
#include "gridenv/heuristics.hpp"

namespace gridenv {

Action RandomAgent::act(const Environment& env, const EnvState&, std::span<const double>) {
  if (env.config().task == TaskKind::Redispatch) {
    const ContinuousBounds b = continuous_bounds(env.grid());
    ContinuousAction a;
    for (int i = 0; i < b.dim(); ++i) {
      a.values.push_back(b.lower[i] + (b.upper[i] - b.lower[i]) * rng_.uniform());
    }
    return a;
  }
  return env.action_space()[static_cast<int>(rng_.below(env.action_space().size()))];
}

int greedy_choice(const Environment& env, const EnvState& state) {
  const ActionSpace& space = env.action_space();
  auto score = [&](int i) {
    auto [next, r] = env.simulate(state, space[i]);
    if (r.done && !r.info.truncated) return std::numeric_limits<double>::infinity();
    return *std::max_element(next.flows.rho.begin(), next.flows.rho.end());
  };
  int best = 0;
  double best_score = score(0);
  const double noop_score = best_score;
  for (int i = 1; i < space.size(); ++i) {
    const double v = score(i);
    if (v < best_score && v < noop_score - kImprovementTolerance) {
      best = i;
      best_score = v;
    }
  }
  return best;
}

double overload_objective(std::span<const double> rho) {
  double sum = 0.0;
  for (double r : rho) {
    const double e = std::max(0.0, r - 1.0);
    sum += e * e;
  }
  return sum;
}

FlowSolution static_flows(const Environment& env, const EnvState& state,
                          const TopologyState& topo) {
  return env.balanced_flows(state, topo);
}

int dc_optim_choice(const Environment& env, const EnvState& state) {
  const ActionSpace& space = env.action_space();
  const Grid& g = env.grid();
  const FlowSolution base = static_flows(env, state, state.topo);
  const double noop = base.feasible ? overload_objective(base.rho)
                                    : std::numeric_limits<double>::infinity();
  int best = 0;
  double best_value = noop;
  for (int i = 1; i < space.size(); ++i) {
    TopologyState topo = state.topo;
    const Action& a = space[i];
    if (const auto* l = std::get_if<LineToggle>(&a)) {
      if (state.line_cooldown[l->line] > 0 || state.cause[l->line] == DisconnectCause::Maintenance) {
        continue;
      }
      topo.line_status[l->line] = !topo.line_status[l->line];
    } else if (const auto* s = std::get_if<SubstationSet>(&a)) {
      if (state.sub_cooldown[s->sub] > 0) continue;
      topo = apply_topology(g, topo, SubstationAssignment{s->sub, s->buses});
    } else {
      continue;
    }
    const FlowSolution f = static_flows(env, state, topo);
    if (!f.feasible) continue;
    const double v = overload_objective(f.rho);
    if (v < best_value && v < noop - kImprovementTolerance) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Linear Q

namespace {
constexpr double kFeatureClip = 5.0;
}

void Standardizer::update(std::span<const double> x) {
  if (static_cast<int>(x.size()) != dim()) {
    throw std::invalid_argument("standardizer expects " + std::to_string(dim()) + " features");
  }
  count_ += 1.0;
  for (int i = 0; i < dim(); ++i) {
    const double d = x[i] - mean_[i];
    mean_[i] += d / count_;
    m2_[i] += d * (x[i] - mean_[i]);
  }
}

std::vector<double> Standardizer::stddev() const {
  std::vector<double> sd(dim(), 1.0);
  if (count_ < 2.0) return sd;
  for (int i = 0; i < dim(); ++i) {
    const double var = m2_[i] / count_;
    sd[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return sd;
}

// Standardized values are clipped to +-5 so rare spikes cannot dominate
// the linear model.
std::vector<double> Standardizer::transform(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) {
    throw std::invalid_argument("standardizer expects " + std::to_string(dim()) + " features");
  }
  const std::vector<double> sd = stddev();
  std::vector<double> out(dim() + 1, 1.0);
  for (int i = 0; i < dim(); ++i) {
    out[i] = std::clamp((x[i] - mean_[i]) / sd[i], -kFeatureClip, kFeatureClip);
  }
  return out;
}

void Standardizer::restore(double count, std::vector<double> mean, std::vector<double> m2) {
  if (mean.size() != m2.size()) throw std::invalid_argument("standardizer state size mismatch");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

LinearQAgent::LinearQAgent(int n_actions, int n_features, double learning_rate, double gamma)
    : n_actions_(n_actions),
      n_features_(n_features),
      lr_(learning_rate),
      gamma_(gamma),
      w_(std::size_t(n_actions) * n_features, 0.0) {
  if (n_actions < 1 || n_features < 1) throw std::invalid_argument("empty linear Q model");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
}

double LinearQAgent::q(std::span<const double> x, int a) const {
  const double* w = w_.data() + std::size_t(a) * n_features_;
  double v = 0.0;
  for (int i = 0; i < n_features_; ++i) v += w[i] * x[i];
  return v;
}

std::vector<double> LinearQAgent::q_values(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_features_) {
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) +
                                " does not match " + std::to_string(n_features_));
  }
  std::vector<double> out(n_actions_);
  for (int a = 0; a < n_actions_; ++a) out[a] = q(x, a);
  return out;
}

int LinearQAgent::greedy(std::span<const double> x) const {
  const auto v = q_values(x);
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void LinearQAgent::update(const Transition& t) {
  if (static_cast<int>(t.features.size()) != n_features_ ||
      (!t.done && static_cast<int>(t.next_features.size()) != n_features_)) {
    throw std::invalid_argument("transition feature dimension does not match the model");
  }
  if (t.action < 0 || t.action >= n_actions_) throw std::invalid_argument("action out of range");
  double target = t.reward;
  if (!t.done) {
    const auto next = q_values(t.next_features);
    target += gamma_ * *std::max_element(next.begin(), next.end());
  }
  const double delta = target - q(t.features, t.action);
  double* w = w_.data() + std::size_t(t.action) * n_features_;
  for (int i = 0; i < n_features_; ++i) w[i] += lr_ * delta * t.features[i];
}

void LinearQAgent::set_weights(std::vector<double> w) {
  if (w.size() != w_.size()) throw std::invalid_argument("weight count mismatch");
  w_ = std::move(w);
}

double EpsilonSchedule::at(double progress) const {
  if (decay_fraction <= 0.0) return final_value;
  const double f = std::clamp(progress / decay_fraction, 0.0, 1.0);
  return initial + (final_value - initial) * f;
}

int epsilon_greedy(const LinearQAgent& q, std::span<const double> features, double epsilon,
                   Rng& rng) {
  if (rng.uniform() < epsilon) return static_cast<int>(rng.below(q.n_actions()));
  return q.greedy(features);
}

LagrangianState::LagrangianState(std::vector<double> thresholds, double lr)
    : lambda(thresholds.size(), 0.0), tau(std::move(thresholds)), learning_rate(lr) {}

void LagrangianState::update(std::span<const double> costs) {
  if (costs.size() != lambda.size()) throw std::invalid_argument("cost count mismatch");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    lambda[i] = std::max(0.0, lambda[i] + learning_rate * (costs[i] - tau[i]));
  }
}

double LagrangianState::penalty(std::span<const double> step_costs) const {
  double p = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) p += lambda[i] * step_costs[i];
  return p;
}

Action LinearQPolicy::act(const Environment& env, const EnvState&,
                          std::span<const double> observation) {
  const auto x = std_.transform(observation);
  const int a = q_.greedy(x);
  if (a >= env.action_space().size()) {
    throw ConfigError("linear Q weights cover " + std::to_string(q_.n_actions()) +
                      " actions, the environment has " +
                      std::to_string(env.action_space().size()));
  }
  return env.action_space()[a];
}

// ---------------------------------------------------------------------------
// Weight files

namespace {

static_assert(std::endian::native == std::endian::little, "weight files are little-endian");

constexpr char kMagic[4] = {'G', 'E', 'L', 'Q'};
constexpr std::uint32_t kWeightsVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ParseError("weights file '" + path + "' is truncated");
  }
  return v;
}

std::vector<double> get_doubles(std::ifstream& in, std::size_t n, const std::string& path) {
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)))) {
    throw ParseError("weights file '" + path + "' is truncated");
  }
  return v;
}

}  // namespace

void save_linear_q(const std::filesystem::path& path, const LinearQAgent& q,
                   const Standardizer& st) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weights '" + path.string() + "'");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kWeightsVersion);
  put<std::int32_t>(out, q.n_actions());
  put<std::int32_t>(out, q.n_features());
  put<double>(out, q.learning_rate());
  put<double>(out, q.gamma());
  put<std::int32_t>(out, st.dim());
  put<double>(out, st.count());
  put_doubles(out, st.mean());
  put_doubles(out, st.m2());
  put_doubles(out, q.weights());
}

LinearQPolicy load_linear_q(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("weights file '" + p + "' not found");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("'" + p + "' is not a linear Q weights file");
  }
  const auto version = get<std::uint32_t>(in, p);
  if (version != kWeightsVersion) {
    throw ParseError("weights file '" + p + "' has unsupported version " + std::to_string(version));
  }
  const int n_actions = get<std::int32_t>(in, p);
  const int n_features = get<std::int32_t>(in, p);
  const double lr = get<double>(in, p);
  const double gamma = get<double>(in, p);
  const int dim = get<std::int32_t>(in, p);
  if (n_actions < 1 || n_features < 1 || dim != n_features - 1) {
    throw ParseError("weights file '" + p + "' has inconsistent dimensions");
  }
  const double count = get<double>(in, p);
  auto mean = get_doubles(in, dim, p);
  auto m2 = get_doubles(in, dim, p);
  auto w = get_doubles(in, std::size_t(n_actions) * n_features, p);
  LinearQAgent q(n_actions, n_features, lr, gamma);
  q.set_weights(std::move(w));
  Standardizer st(dim);
  st.restore(count, std::move(mean), std::move(m2));
  return LinearQPolicy(std::move(q), std::move(st));
}

// ---------------------------------------------------------------------------
// Training

TrainingResult train_linear_q(const Environment& env, const AgentConfig& cfg,
                              const HeuristicConfig& heuristic) {
  if (env.config().task != TaskKind::Topology) {
    throw ConfigError("linear Q training needs a discrete (topology) task");
  }
  if (cfg.train_episodes < 1) throw ConfigError("agent.train_episodes must be >= 1");
  const ActionSpace& space = env.action_space();
  const int dim = env.layout().size;
  TrainingResult res{LinearQAgent(space.size(), dim + 1, cfg.learning_rate, cfg.gamma),
                     Standardizer(dim),
                     {}};
  LagrangianState lag({env.config().reward.tau_lsi, env.config().reward.tau_tlo},
                      cfg.lambda_learning_rate);
  const EpsilonSchedule schedule{cfg.eps_initial, cfg.eps_final, cfg.eps_decay_fraction};
  Rng rng(mix_seed(cfg.seed, 0xE95));
  for (int e = 0; e < cfg.train_episodes; ++e) {
    TrainingEpisode rec;
    rec.episode = e;
    rec.epsilon = schedule.at(static_cast<double>(e) / cfg.train_episodes);
    auto [state, first] = wrapped_reset(env, mix_seed(cfg.seed, e), heuristic);
    rec.reward += first.reward;
    rec.lsi += first.lsi;
    rec.tlo += first.tlo;
    res.standardizer.update(first.observation);
    std::vector<double> x = res.standardizer.transform(first.observation);
    while (!state.done) {
      const int a = epsilon_greedy(res.q, x, rec.epsilon, rng);
      StepResult r = wrap_step(env, state, space[a], heuristic);
      ++rec.decisions;
      rec.reward += r.reward;
      rec.lsi += r.lsi;
      rec.tlo += r.tlo;
      double reward = r.reward;
      if (cfg.lagrangian) {
        const double c[2] = {double(r.lsi), double(r.tlo)};
        reward -= lag.penalty(c);
      }
      res.standardizer.update(r.observation);
      std::vector<double> next = res.standardizer.transform(r.observation);
      const bool terminal = r.done && !r.info.truncated;
      res.q.update(Transition{x, a, reward, next, terminal});
      x = std::move(next);
    }
    rec.survival = static_cast<double>(state.t) / env.episode_length();
    if (cfg.lagrangian) {
      const double c[2] = {rec.lsi, rec.tlo};
      lag.update(c);
    }
    rec.lambda = lag.lambda;
    res.curve.push_back(std::move(rec));
  }
  return res;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg) {
  if (cfg.kind == "idle") return std::make_unique<IdleAgent>();
  if (cfg.kind == "random") return std::make_unique<RandomAgent>(cfg.seed);
  if (cfg.kind == "greedy") return std::make_unique<GreedyAgent>();
  if (cfg.kind == "dc_optim") return std::make_unique<DcOptimAgent>();
  if (cfg.kind == "linear_q") {
    if (cfg.weights.empty()) throw ConfigError("agent.kind = linear_q needs agent.weights");
    return std::make_unique<LinearQPolicy>(load_linear_q(cfg.weights));
  }
  throw ConfigError("unknown agent kind '" + cfg.kind +
                    "' (expected idle, random, greedy, dc_optim or linear_q)");
}

}  // namespace gridenv
