#pragma once

#include <filesystem>

#include "gridenv/action_space.hpp"
#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"

namespace gridenv {

// Survival of one action replayed on one trial episode: steps survived /
// episode length. Safe steps take the no-op; the action is applied at the
// first step and, with replay "fixed", whenever the line loadings call for
// the agent again.
double action_trial_survival(const Environment& env, const Action& action, std::uint64_t seed,
                             bool fixed_replay, double threshold);

// Simulates `budget` episodes (-1: trials_per_action per entry) spread
// round-robin over a seeded permutation of the catalog. Trial j of every
// action uses the same episode seed. The result lists sampled entries by
// survival (descending, ties by canonical index), then unsampled ones.
// Throws std::invalid_argument for an empty catalog or a zero budget.
ActionCatalog rank_actions(const Environment& env, const ActionCatalog& catalog,
                           const RankConfig& config, double threshold = 0.95);

// Rank curve: rank, action, canonical index, survival, samples.
void write_rank_curve(const std::filesystem::path& path, const ActionCatalog& ranked);

}  // namespace gridenv
