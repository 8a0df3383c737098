#include "gridenv/chronics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gridenv/error.hpp"
#include "text_util.hpp"

namespace gridenv {

namespace {

constexpr double kRampSlack = 1e-9;

double hour_of_day(int step) { return (step % kStepsPerDay) / double(kStepsPerHour); }

// 1 on Saturday and Sunday, 0 on weekdays, linear over the six hours
// around each weekend boundary so demand changes stay gradual.
double weekend_weight(int step) {
  const double h = (step % kStepsPerWeek) / double(kStepsPerHour);  // hours since Monday 00:00
  const double sat = 5 * 24.0;
  const double mon = 7 * 24.0;
  auto ramp = [](double x) { return std::clamp((x + 3.0) / 6.0, 0.0, 1.0); };
  return std::min(ramp(h - sat), 1.0 - ramp(h - mon)) + (h < 3.0 ? 1.0 - ramp(h) : 0.0);
}

// Demand multiplier without noise: daily cycle with a 04:00 trough and a
// 16:00 peak, lowered on weekends.
double demand_shape(const ChronicsConfig& cfg, int step) {
  const double h = hour_of_day(step);
  const double daily = 1.0 - cfg.daily_amplitude * std::cos(2.0 * M_PI * (h - 4.0) / 24.0);
  return cfg.demand_scale * daily * (1.0 - (1.0 - cfg.weekend_factor) * weekend_weight(step));
}

// Splits `total` over fossil units proportionally to headroom, inside each
// unit's [lo, hi] window. Returns the part of `total` that did not fit.
double allocate(double total, const std::vector<int>& units, const std::vector<double>& lo,
                const std::vector<double>& hi, std::vector<double>& out) {
  double base = 0.0;
  for (int u : units) {
    out[u] = lo[u];
    base += lo[u];
  }
  double remaining = total - base;
  if (remaining <= 0.0) return remaining;
  std::vector<int> open = units;
  while (remaining > 1e-12 && !open.empty()) {
    double room = 0.0;
    for (int u : open) room += hi[u] - out[u];
    if (room <= 1e-12) break;
    const double share = std::min(1.0, remaining / room);
    double used = 0.0;
    std::vector<int> still_open;
    for (int u : open) {
      const double add = share * (hi[u] - out[u]);
      out[u] += add;
      used += add;
      if (hi[u] - out[u] > 1e-12) still_open.push_back(u);
    }
    remaining -= used;
    open = std::move(still_open);
    if (share >= 1.0) break;
  }
  return remaining;
}

}  // namespace

Chronics generate_chronics(const Grid& grid, const ChronicsConfig& cfg) {
  if (cfg.horizon <= 0) throw std::invalid_argument("chronics horizon must be >= 1");
  const int T = cfg.horizon;
  Rng rng(cfg.seed);
  Chronics c;
  c.horizon = T;
  c.load = TimeSeries(T, grid.n_loads());
  c.gen_plan = TimeSeries(T, grid.n_gens());

  std::vector<double> expected_total(T, 0.0);
  const double sigma = cfg.demand_noise;
  for (int t = 0; t < T; ++t) {
    const double shape = demand_shape(cfg, t);
    for (int l = 0; l < grid.n_loads(); ++l) {
      const double expected = grid.loads()[l].p_base * shape;
      expected_total[t] += expected;
      const double noise = sigma > 0.0 ? std::exp(sigma * rng.normal() - 0.5 * sigma * sigma) : 1.0;
      c.load.at(t, l) = expected * noise;
    }
  }

  std::vector<double> renewable_total(T, 0.0);
  std::vector<int> fossil;
  for (int g = 0; g < grid.n_gens(); ++g) {
    const Generator& gen = grid.generators()[g];
    if (!gen.renewable()) {
      fossil.push_back(g);
      continue;
    }
    double level = cfg.wind_mean;
    double cloud = 1.0;
    for (int t = 0; t < T; ++t) {
      double avail = 0.0;
      if (cfg.renewables) {
        if (gen.kind == GenKind::Wind) {
          level = cfg.wind_mean + cfg.wind_persistence * (level - cfg.wind_mean) +
                  cfg.wind_volatility * rng.normal();
          level = std::clamp(level, 0.0, 1.0);
          avail = gen.p_max * level;
        } else {
          cloud = 0.65 + 0.98 * (cloud - 0.65) + 0.02 * rng.normal();
          cloud = std::clamp(cloud, 0.3, 1.0);
          const double sun = std::max(0.0, std::sin(M_PI * (hour_of_day(t) - 6.0) / 12.0));
          avail = gen.p_max * cfg.solar_peak_factor * sun * cloud;
        }
      }
      avail = std::clamp(avail, 0.0, gen.p_max);
      c.gen_plan.at(t, g) = avail;
      renewable_total[t] += avail;
    }
  }

  std::vector<double> lo(grid.n_gens()), hi(grid.n_gens()), out(grid.n_gens(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int g : fossil) {
      const Generator& gen = grid.generators()[g];
      lo[g] = gen.p_min;
      hi[g] = gen.p_max;
      if (t > 0) {
        const double prev = c.gen_plan.at(t - 1, g);
        lo[g] = std::max(lo[g], prev - gen.ramp_down);
        hi[g] = std::min(hi[g], prev + gen.ramp_up);
        if (lo[g] > hi[g]) lo[g] = hi[g] = std::clamp(prev, gen.p_min, gen.p_max);
      }
    }
    allocate(expected_total[t] - renewable_total[t], fossil, lo, hi, out);
    for (int g : fossil) c.gen_plan.at(t, g) = out[g];
  }

  if (cfg.maintenance_rate > 0.0 && cfg.maintenance_duration > 0) {
    std::vector<int> lines = cfg.maintenance_lines;
    if (lines.empty()) {
      for (int l = 0; l < grid.n_lines(); ++l) lines.push_back(l);
    }
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    const double per_day = cfg.maintenance_rate / 7.0;
    for (int line : lines) {
      if (line < 0 || line >= grid.n_lines()) {
        throw std::invalid_argument("maintenance line " + std::to_string(line) + " out of range");
      }
      int busy_until = 0;
      for (int day = 0; day * kStepsPerDay < T; ++day) {
        if (!rng.bernoulli(per_day)) continue;
        // Work starts between 08:00 and 16:00.
        const int start = day * kStepsPerDay + 8 * kStepsPerHour +
                          static_cast<int>(rng.below(8 * kStepsPerHour));
        if (start < busy_until || start >= T) continue;
        const int duration = std::min(cfg.maintenance_duration, T - start);
        c.maintenance.push_back({line, start, duration});
        busy_until = start + duration;
      }
    }
  }
  return c;
}

void validate_chronics(const Grid& grid, const Chronics& c) {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (c.horizon <= 0) fail("horizon must be >= 1");
  if (c.load.rows() != c.horizon || c.load.cols() != grid.n_loads()) fail("load series shape");
  if (c.gen_plan.rows() != c.horizon || c.gen_plan.cols() != grid.n_gens()) {
    fail("generator series shape");
  }
  for (int t = 0; t < c.horizon; ++t) {
    for (int l = 0; l < grid.n_loads(); ++l) {
      const double d = c.load.at(t, l);
      if (!std::isfinite(d) || d < 0.0) {
        fail("negative or non-finite demand at step " + std::to_string(t));
      }
    }
    for (int g = 0; g < grid.n_gens(); ++g) {
      const Generator& gen = grid.generators()[g];
      const double p = c.gen_plan.at(t, g);
      if (!std::isfinite(p)) fail("non-finite generator plan at step " + std::to_string(t));
      if (gen.renewable()) {
        if (p < 0.0 || p > gen.p_max) {
          fail("availability of generator " + std::to_string(g) + " outside [0, p_max] at step " +
               std::to_string(t));
        }
      } else if (t > 0) {
        const double d = p - c.gen_plan.at(t - 1, g);
        if (d > gen.ramp_up + kRampSlack || -d > gen.ramp_down + kRampSlack) {
          fail("schedule of generator " + std::to_string(g) + " breaks its ramp at step " +
               std::to_string(t));
        }
      }
    }
  }
  for (std::size_t i = 0; i < c.maintenance.size(); ++i) {
    const MaintenanceEvent& m = c.maintenance[i];
    if (m.line < 0 || m.line >= grid.n_lines()) fail("maintenance on unknown line");
    if (m.start < 0 || m.duration <= 0 || m.start + m.duration > c.horizon) {
      fail("maintenance window outside the horizon");
    }
    for (std::size_t j = i + 1; j < c.maintenance.size(); ++j) {
      const MaintenanceEvent& o = c.maintenance[j];
      if (o.line == m.line && o.start < m.start + m.duration && m.start < o.start + o.duration) {
        fail("overlapping maintenance windows on line " + std::to_string(m.line));
      }
    }
  }
}

int sample_episode_start(const Chronics& chronics, int episode_length, Rng& rng) {
  if (episode_length <= 0) throw std::invalid_argument("episode length must be >= 1");
  if (chronics.horizon < episode_length) {
    throw std::invalid_argument("chronics horizon " + std::to_string(chronics.horizon) +
                                " is shorter than one episode (" +
                                std::to_string(episode_length) + " steps)");
  }
  return static_cast<int>(rng.below(std::uint64_t(chronics.horizon - episode_length) + 1));
}

MaintenanceLookahead next_maintenance(const Chronics& chronics, int line, int row) {
  MaintenanceLookahead best;
  for (const MaintenanceEvent& m : chronics.maintenance) {
    if (m.line != line || m.start + m.duration <= row) continue;
    const int wait = std::max(0, m.start - row);
    if (best.time_to_next < 0 || wait < best.time_to_next) {
      best.time_to_next = wait;
      best.duration = m.start + m.duration - std::max(row, m.start);
    }
  }
  return best;
}

int active_maintenance(const Chronics& chronics, int line, int row) {
  for (const MaintenanceEvent& m : chronics.maintenance) {
    if (m.line == line && m.start <= row && row < m.start + m.duration) {
      return m.start + m.duration - row;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Files

namespace {

void write_series(const std::filesystem::path& path, const TimeSeries& s,
                  const std::vector<int>& cols, const std::string& prefix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << prefix << cols[i];
  }
  out << "\n";
  for (int t = 0; t < s.rows(); ++t) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out << (i ? "," : "") << detail::format_double(s.at(t, cols[i]));
    }
    out << "\n";
  }
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(detail::trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void read_series(const std::filesystem::path& path, TimeSeries& s, const std::vector<int>& cols,
                 const std::string& prefix, int horizon) {
  const std::string text = read_file(path);
  const std::string src = path.string();
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError(src, 1, "missing header");
  const auto header = split_csv(detail::trim(lines[0]));
  if (cols.empty() && (header.size() == 1 && header[0].empty())) {
    // Empty family (e.g. no renewables): header line is blank.
  } else {
    if (header.size() != cols.size()) {
      throw ParseError(src, 1, "expected " + std::to_string(cols.size()) + " columns, got " +
                                   std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (header[i] != prefix + std::to_string(cols[i])) {
        throw ParseError(src, 1, "column " + std::to_string(i) + " should be '" + prefix +
                                     std::to_string(cols[i]) + "', got '" +
                                     std::string(header[i]) + "'");
      }
    }
  }
  int t = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto row = detail::trim(lines[n]);
    if (row.empty() && cols.empty() && t < horizon) {
      ++t;
      continue;
    }
    if (row.empty()) continue;
    if (t >= horizon) throw ParseError(src, int(n) + 1, "more rows than the manifest horizon");
    const auto fields = split_csv(row);
    if (fields.size() != cols.size()) {
      throw ParseError(src, int(n) + 1, "expected " + std::to_string(cols.size()) + " values");
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      auto v = detail::to_double(fields[i]);
      if (!v) throw ParseError(src, int(n) + 1, "value '" + std::string(fields[i]) + "' is not a number");
      s.at(t, cols[i]) = *v;
    }
    ++t;
  }
  if (t != horizon) {
    throw ParseError(src, int(lines.size()), "expected " + std::to_string(horizon) +
                                                 " rows, got " + std::to_string(t));
  }
}

}  // namespace

void write_chronics(const Grid& grid, const Chronics& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<int> loads, fossil, renewable;
  for (int l = 0; l < grid.n_loads(); ++l) loads.push_back(l);
  for (int g = 0; g < grid.n_gens(); ++g) {
    (grid.generators()[g].renewable() ? renewable : fossil).push_back(g);
  }
  {
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
    m << "format_version = 1\n"
      << "grid = " << grid.name() << "\n"
      << "horizon = " << c.horizon << "\n"
      << "step_minutes = 5\n"
      << "loads = " << grid.n_loads() << "\n"
      << "generators = " << grid.n_gens() << "\n";
  }
  write_series(dir / "loads.csv", c.load, loads, "load_");
  write_series(dir / "dispatch.csv", c.gen_plan, fossil, "gen_");
  write_series(dir / "renewables.csv", c.gen_plan, renewable, "gen_");
  std::ofstream mt(dir / "maintenance.csv");
  mt << "line,start,duration\n";
  for (const MaintenanceEvent& e : c.maintenance) {
    mt << e.line << "," << e.start << "," << e.duration << "\n";
  }
}

Chronics load_chronics(const Grid& grid, const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / "manifest.txt";
  const std::string text = read_file(manifest);
  Chronics c;
  int line_no = 0;
  bool have_version = false;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    const auto line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(manifest.string(), line_no, "expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    auto as_int = [&]() {
      auto v = detail::to_int(value);
      if (!v) throw ParseError(manifest.string(), line_no, "'" + std::string(key) + "' is not an integer");
      return static_cast<int>(*v);
    };
    if (key == "format_version") {
      if (as_int() != 1) throw ParseError(manifest.string(), line_no, "unsupported format_version");
      have_version = true;
    } else if (key == "horizon") {
      c.horizon = as_int();
    } else if (key == "loads") {
      if (as_int() != grid.n_loads()) {
        throw ParseError(manifest.string(), line_no, "load count does not match the grid");
      }
    } else if (key == "generators") {
      if (as_int() != grid.n_gens()) {
        throw ParseError(manifest.string(), line_no, "generator count does not match the grid");
      }
    } else if (key == "grid" || key == "step_minutes") {
      // informational
    } else {
      throw ParseError(manifest.string(), line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_version) throw ParseError(manifest.string(), line_no, "missing format_version");
  if (c.horizon <= 0) throw ParseError(manifest.string(), line_no, "horizon must be >= 1");

  std::vector<int> loads, fossil, renewable;
  for (int l = 0; l < grid.n_loads(); ++l) loads.push_back(l);
  for (int g = 0; g < grid.n_gens(); ++g) {
    (grid.generators()[g].renewable() ? renewable : fossil).push_back(g);
  }
  c.load = TimeSeries(c.horizon, grid.n_loads());
  c.gen_plan = TimeSeries(c.horizon, grid.n_gens());
  read_series(dir / "loads.csv", c.load, loads, "load_", c.horizon);
  read_series(dir / "dispatch.csv", c.gen_plan, fossil, "gen_", c.horizon);
  read_series(dir / "renewables.csv", c.gen_plan, renewable, "gen_", c.horizon);

  const std::filesystem::path mpath = dir / "maintenance.csv";
  const std::string mtext = read_file(mpath);
  line_no = 0;
  for (auto raw : detail::split_lines(mtext)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line_no == 1) {
      if (line != "line,start,duration") {
        throw ParseError(mpath.string(), 1, "header must be 'line,start,duration'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw ParseError(mpath.string(), line_no, "expected 3 fields");
    auto a = detail::to_int(f[0]), b = detail::to_int(f[1]), d = detail::to_int(f[2]);
    if (!a || !b || !d) throw ParseError(mpath.string(), line_no, "fields must be integers");
    c.maintenance.push_back({int(*a), int(*b), int(*d)});
  }
  try {
    validate_chronics(grid, c);
  } catch (const std::invalid_argument& e) {
    throw ParseError("chronics in '" + dir.string() + "' are invalid: " + e.what());
  }
  return c;
}

}  // namespace gridenv
