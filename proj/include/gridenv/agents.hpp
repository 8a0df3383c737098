#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"
#include "gridenv/rng.hpp"

namespace gridenv {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(std::uint64_t /*seed*/) {}
  virtual Action act(const Environment& env, const EnvState& state,
                     std::span<const double> observation) = 0;
};

class IdleAgent : public Agent {
 public:
  std::string name() const override { return "idle"; }
  Action act(const Environment&, const EnvState&, std::span<const double>) override {
    return NoOp{};
  }
};

// Uniform over the discrete action space, or uniform within the continuous
// bounds for redispatch tasks.
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : seed_(seed), rng_(seed) {}
  std::string name() const override { return "random"; }
  void begin_episode(std::uint64_t seed) override { rng_ = Rng(mix_seed(seed_, seed)); }
  Action act(const Environment& env, const EnvState& state,
             std::span<const double> observation) override;

 private:
  std::uint64_t seed_;
  Rng rng_;
};

inline constexpr double kImprovementTolerance = 1e-9;

// Index of the action whose simulated next step has the lowest max line
// loading; the no-op (index 0) is kept unless beaten by more than the
// tolerance. Terminal outcomes count as infinitely bad.
int greedy_choice(const Environment& env, const EnvState& state);

// sum over lines of max(0, rho - 1)^2.
double overload_objective(std::span<const double> rho);

// Index minimizing overload_objective under a DC solve of the current
// injections with the candidate topology. Actions blocked by cooldowns and
// topologies that cannot be solved are skipped.
int dc_optim_choice(const Environment& env, const EnvState& state);

// Flows of `topo` on the injections currently held by `state`.
FlowSolution static_flows(const Environment& env, const EnvState& state,
                          const TopologyState& topo);

class GreedyAgent : public Agent {
 public:
  std::string name() const override { return "greedy"; }
  Action act(const Environment& env, const EnvState& state, std::span<const double>) override {
    return env.action_space()[greedy_choice(env, state)];
  }
};

class DcOptimAgent : public Agent {
 public:
  std::string name() const override { return "dc_optim"; }
  Action act(const Environment& env, const EnvState& state, std::span<const double>) override {
    return env.action_space()[dc_optim_choice(env, state)];
  }
};

// Running mean and variance (Welford). transform() standardizes and appends
// a constant 1 as bias feature.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(int dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void update(std::span<const double> x);
  std::vector<double> transform(std::span<const double> x) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> stddev() const;

  void restore(double count, std::vector<double> mean, std::vector<double> m2);
  const std::vector<double>& m2() const { return m2_; }

 private:
  double count_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

struct Transition {
  std::vector<double> features;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_features;
  bool done = false;
};

// Linear action values: Q(s, a) = w_a . features(s).
class LinearQAgent {
 public:
  LinearQAgent(int n_actions, int n_features, double learning_rate, double gamma);

  int n_actions() const { return n_actions_; }
  int n_features() const { return n_features_; }
  double learning_rate() const { return lr_; }
  double gamma() const { return gamma_; }

  double q(std::span<const double> features, int action) const;
  std::vector<double> q_values(std::span<const double> features) const;
  int greedy(std::span<const double> features) const;  // ties to the lowest index

  // w_a += lr * (r + gamma * max_a' Q(s', a') * (1 - done) - Q(s, a)) * features.
  // Throws std::invalid_argument on a dimension mismatch.
  void update(const Transition& t);

  const std::vector<double>& weights() const { return w_; }
  void set_weights(std::vector<double> w);

 private:
  int n_actions_;
  int n_features_;
  double lr_;
  double gamma_;
  std::vector<double> w_;  // row-major actions x features
};

// Linear decay from initial to final over the first `decay_fraction` of
// training, then constant.
struct EpsilonSchedule {
  double initial = 1.0;
  double final_value = 0.05;
  double decay_fraction = 0.5;

  double at(double progress) const;
};

int epsilon_greedy(const LinearQAgent& q, std::span<const double> features, double epsilon,
                   Rng& rng);

// Projected multiplier ascent, one multiplier per constraint.
struct LagrangianState {
  std::vector<double> lambda;
  std::vector<double> tau;
  double learning_rate = 0.01;

  LagrangianState() = default;
  LagrangianState(std::vector<double> thresholds, double lr);

  // lambda_i = max(0, lambda_i + lr * (cost_i - tau_i)).
  void update(std::span<const double> episode_costs);
  // sum_i lambda_i * c_i
  double penalty(std::span<const double> step_costs) const;
};

// Greedy policy of a trained linear agent over standardized observations.
class LinearQPolicy : public Agent {
 public:
  LinearQPolicy(LinearQAgent q, Standardizer standardizer)
      : q_(std::move(q)), std_(std::move(standardizer)) {}
  std::string name() const override { return "linear_q"; }
  Action act(const Environment& env, const EnvState& state,
             std::span<const double> observation) override;

  const LinearQAgent& q() const { return q_; }
  const Standardizer& standardizer() const { return std_; }

 private:
  LinearQAgent q_;
  Standardizer std_;
};

// Versioned little-endian binary: magic "GELQ", version, dimensions,
// standardizer state, weights.
void save_linear_q(const std::filesystem::path& path, const LinearQAgent& q,
                   const Standardizer& standardizer);
LinearQPolicy load_linear_q(const std::filesystem::path& path);

struct TrainingEpisode {
  int episode = 0;
  double survival = 0.0;
  double reward = 0.0;
  double epsilon = 0.0;
  int decisions = 0;
  double lsi = 0.0;
  double tlo = 0.0;
  std::vector<double> lambda;
};

struct TrainingResult {
  LinearQAgent q;
  Standardizer standardizer;
  std::vector<TrainingEpisode> curve;
};

// Epsilon-greedy TD training over wrapped steps of `env` with the given
// heuristic. Episode e uses seed mix_seed(config.seed, e). With
// config.lagrangian the per-step reward is r - lambda . (lsi, tlo).
TrainingResult train_linear_q(const Environment& env, const AgentConfig& config,
                              const HeuristicConfig& heuristic);

// Builds the named baseline. linear_q needs config.weights.
std::unique_ptr<Agent> make_agent(const AgentConfig& config);

}  // namespace gridenv
