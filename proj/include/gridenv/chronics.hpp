#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gridenv/grid.hpp"
#include "gridenv/rng.hpp"

namespace gridenv {

inline constexpr int kStepsPerHour = 12;
inline constexpr int kStepsPerDay = 288;
inline constexpr int kStepsPerWeek = 7 * kStepsPerDay;
inline constexpr int kDefaultEpisodeLength = 28 * kStepsPerDay;  // 8064
inline constexpr double kStepHours = 5.0 / 60.0;

// Dense row-major (time x column) series.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& at(int t, int i) { return data_[std::size_t(t) * cols_ + i]; }
  double at(int t, int i) const { return data_[std::size_t(t) * cols_ + i]; }
  std::span<const double> row(int t) const {
    return {data_.data() + std::size_t(t) * cols_, std::size_t(cols_)};
  }

  bool operator==(const TimeSeries&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct MaintenanceEvent {
  int line = 0;
  int start = 0;     // step index into the chronics
  int duration = 0;  // steps

  bool operator==(const MaintenanceEvent&) const = default;
};

// Scenario data at 5-minute resolution. Row 0 is Monday 00:00.
struct Chronics {
  int horizon = 0;
  TimeSeries load;          // horizon x n_loads, MW demand
  TimeSeries gen_plan;      // horizon x n_gens: fossil = scheduled dispatch,
                            // renewable = available output
  std::vector<MaintenanceEvent> maintenance;  // sorted by (line, start)

  bool operator==(const Chronics&) const = default;
};

struct ChronicsConfig {
  int horizon = 2 * kDefaultEpisodeLength;
  std::uint64_t seed = 1;
  double demand_scale = 1.0;
  double daily_amplitude = 0.2;   // relative swing of the daily demand cycle
  double weekend_factor = 0.9;    // demand multiplier on Saturday and Sunday
  double demand_noise = 0.01;     // sigma of the lognormal demand noise
  bool renewables = true;
  double solar_peak_factor = 0.8;
  double wind_mean = 0.4;
  double wind_persistence = 0.995;
  double wind_volatility = 0.01;
  double maintenance_rate = 0.0;  // expected events per line per week
  int maintenance_duration = 12;  // steps
  std::vector<int> maintenance_lines;  // empty means every line
};

Chronics generate_chronics(const Grid& grid, const ChronicsConfig& config);

// Throws std::invalid_argument naming the first violated invariant.
void validate_chronics(const Grid& grid, const Chronics& chronics);

// Uniform over [0, horizon - episode_length]. Throws std::invalid_argument
// when the chronics are shorter than one episode.
int sample_episode_start(const Chronics& chronics, int episode_length, Rng& rng);

// Directory layout: manifest.txt, loads.csv, dispatch.csv (fossil columns),
// renewables.csv (renewable columns), maintenance.csv.
void write_chronics(const Grid& grid, const Chronics& chronics,
                    const std::filesystem::path& dir);
Chronics load_chronics(const Grid& grid, const std::filesystem::path& dir);

// Steps until the next maintenance of `line` starting at or after `row`
// (0 while one is active, -1 when none) and that event's remaining duration.
struct MaintenanceLookahead {
  int time_to_next = -1;
  int duration = 0;
};
MaintenanceLookahead next_maintenance(const Chronics& chronics, int line, int row);

// Remaining steps of a maintenance covering `row`, or 0.
int active_maintenance(const Chronics& chronics, int line, int row);

}  // namespace gridenv
