#include "gridenv/ranking.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "gridenv/heuristics.hpp"
#include "text_util.hpp"

namespace gridenv {

double action_trial_survival(const Environment& env, const Action& action, std::uint64_t seed,
                             bool fixed_replay, double threshold) {
  EnvState s = env.reset(seed);
  const StepOptions quiet{false, true};
  env.step(s, action, quiet);
  while (!s.done) {
    const bool agent = fixed_replay && idle_gate(s.flows.rho, threshold);
    env.step(s, agent ? action : Action{NoOp{}}, quiet);
  }
  return static_cast<double>(s.t) / env.episode_length();
}

ActionCatalog rank_actions(const Environment& base, const ActionCatalog& catalog,
                           const RankConfig& config, double threshold) {
  const int n = catalog.size();
  if (n == 0) throw std::invalid_argument("cannot rank an empty catalog");
  if (config.budget == 0 || config.budget < -1) {
    throw std::invalid_argument("ranking budget must be >= 1");
  }
  const long budget = config.budget > 0 ? config.budget : long(config.trials_per_action) * n;
  Environment env = base;
  env.set_episode_length(config.episode_length);
  const bool fixed = config.replay == "fixed";

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(config.seed, 0xA11CE));
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  ActionCatalog out = catalog;
  std::vector<double> total(n, 0.0);
  for (auto& e : out.entries) {
    e.survival = 0.0;
    e.samples = 0;
  }
  for (long k = 0; k < budget; ++k) {
    const int i = order[k % n];
    const std::uint64_t trial = static_cast<std::uint64_t>(k / n);
    total[i] += action_trial_survival(env, out.entries[i].action, mix_seed(config.seed, trial),
                                      fixed, threshold);
    ++out.entries[i].samples;
  }
  for (int i = 0; i < n; ++i) {
    if (out.entries[i].samples > 0) out.entries[i].survival = total[i] / out.entries[i].samples;
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) {
              const bool sa = a.samples > 0;
              const bool sb = b.samples > 0;
              if (sa != sb) return sa;
              if (sa && a.survival != b.survival) return a.survival > b.survival;
              return a.canonical_index < b.canonical_index;
            });
  return out;
}

void write_rank_curve(const std::filesystem::path& path, const ActionCatalog& ranked) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "rank,action,canonical_index,survival,samples\n";
  for (int r = 0; r < ranked.size(); ++r) {
    const CatalogEntry& e = ranked.entries[r];
    out << r << "," << encode_action(e.action) << "," << e.canonical_index << ","
        << detail::format_double(e.survival) << "," << e.samples << "\n";
  }
}

}  // namespace gridenv
