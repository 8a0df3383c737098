#include "gridenv/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridenv {

double reward_survive(int episode_length) {
  if (episode_length < 1) throw std::invalid_argument("episode length must be >= 1");
  return 1.0 / episode_length;
}

double reward_overload(std::span<const double> flows, std::span<const double> limits,
                       const std::vector<bool>& line_status, double epsilon) {
  const std::size_t n = flows.size();
  if (n == 0) return 0.0;
  double penalty = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (!line_status[l]) {
      penalty += 1.0;
      continue;
    }
    penalty += std::max(0.0, (std::abs(flows[l]) - limits[l]) / (limits[l] + epsilon));
  }
  if (penalty > 0.0) return std::clamp(-penalty / double(n), -1.0, 1.0);
  double bonus = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    bonus += std::max(0.0, 1.0 - std::abs(flows[l]) / limits[l]);
  }
  return std::clamp(bonus / double(n), -1.0, 1.0);
}

double reward_cost(double p_gen, double p_demand, double redispatch, double storage,
                   double c_marginal, double scale) {
  const double raw =
      -((p_gen - p_demand) + std::abs(redispatch) + std::abs(storage)) * c_marginal;
  return std::clamp(raw / scale, -1.0, 0.0);
}

double total_reward(const RewardConfig& cfg, double survive, double overload, double cost) {
  return cfg.alpha * survive + cfg.beta * overload + cfg.eta * cost;
}

int cost_lsi(double p_gen, double p_demand, int n_islands) {
  const int shortfall = p_gen < p_demand - kShortfallTolerance ? 1 : 0;
  const int islanding = n_islands > 0 ? 1 : 0;
  return shortfall + islanding;
}

int cost_tlo(std::span<const double> flows, std::span<const double> limits,
             const std::vector<bool>& line_status, std::span<const DisconnectCause> causes) {
  int count = 0;
  for (std::size_t l = 0; l < flows.size(); ++l) {
    if (line_status[l]) {
      count += std::abs(flows[l]) > limits[l] ? 1 : 0;
    } else if (!cost_exempt(causes[l])) {
      ++count;
    }
  }
  return count;
}

Metrics metrics_snapshot(std::span<const double> flows, std::span<const double> limits,
                         const std::vector<bool>& line_status, int hamming_to_reference,
                         double epsilon) {
  Metrics m;
  for (std::size_t l = 0; l < flows.size(); ++l) {
    m.margin += line_status[l] ? std::max(0.0, limits[l] - std::abs(flows[l])) : -1.0;
  }
  m.overload = reward_overload(flows, limits, line_status, epsilon);
  m.topology = 0.0 - static_cast<double>(hamming_to_reference);
  return m;
}

}  // namespace gridenv
