#pragma once

#include <span>
#include <vector>

#include "gridenv/chronics.hpp"

namespace gridenv {

// Why a line is currently out of service.
enum class DisconnectCause : int { None = 0, Agent = 1, Overload = 2, Opponent = 3, Maintenance = 4 };

// Maintenance and opponent outages do not count toward the overload cost.
inline bool cost_exempt(DisconnectCause c) {
  return c == DisconnectCause::Opponent || c == DisconnectCause::Maintenance;
}

struct RewardConfig {
  double alpha = 1.0;
  double beta = 0.5;
  double eta = 0.5;
  double epsilon = 1e-6;        // guards the overload denominator
  double cost_scale = 10000.0;  // divides the raw cost term before clamping
  int episode_length = kDefaultEpisodeLength;
  double tau_lsi = 0.0;
  double tau_tlo = 50.0;
};

// Generation below demand by more than this counts as shortfall.
inline constexpr double kShortfallTolerance = 1e-6;  // MW

double reward_survive(int episode_length);

// Overload term in [-1, 1]. Overloaded and disconnected lines are penalized
// (normalized by the line count); when there are none the result is the mean
// free capacity sum(max(0, 1 - rho)) / N_lines.
double reward_overload(std::span<const double> flows, std::span<const double> limits,
                       const std::vector<bool>& line_status, double epsilon);

// Cost term in [-1, 0]:
// -[(p_gen - p_demand) + |redispatch| + |storage|] * c_marginal / scale.
double reward_cost(double p_gen, double p_demand, double redispatch, double storage,
                   double c_marginal, double scale);

double total_reward(const RewardConfig& cfg, double survive, double overload, double cost);

// Load shedding and islanding: 1(p_gen < p_demand) + 1(n_islands > 0).
int cost_lsi(double p_gen, double p_demand, int n_islands);

// Overloaded lines plus disconnections not caused by maintenance or the
// opponent.
int cost_tlo(std::span<const double> flows, std::span<const double> limits,
             const std::vector<bool>& line_status, std::span<const DisconnectCause> causes);

struct Metrics {
  double margin = 0.0;    // sum of free MW per connected line, -1 per disconnected line
  double overload = 0.0;  // reward_overload value
  double topology = 0.0;  // minus the Hamming distance to the reference topology

  bool operator==(const Metrics&) const = default;
};

Metrics metrics_snapshot(std::span<const double> flows, std::span<const double> limits,
                         const std::vector<bool>& line_status, int hamming_to_reference,
                         double epsilon);

// Running per-episode constraint costs.
class CostAccumulator {
 public:
  CostAccumulator(double tau_lsi, double tau_tlo) : tau_lsi_(tau_lsi), tau_tlo_(tau_tlo) {}

  void add(int lsi, int tlo) {
    lsi_ += lsi;
    tlo_ += tlo;
  }
  double lsi() const { return lsi_; }
  double tlo() const { return tlo_; }
  // LSI is a hard constraint: any cost above the threshold violates it.
  bool lsi_violated() const { return lsi_ > tau_lsi_; }
  bool tlo_violated() const { return tlo_ >= tau_tlo_; }

 private:
  double tau_lsi_;
  double tau_tlo_;
  double lsi_ = 0.0;
  double tlo_ = 0.0;
};

}  // namespace gridenv
