#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

#include "gridenv/environment.hpp"

namespace gridenv {

const Slice& ObservationLayout::slice(const std::string& name) const {
  for (const Slice& s : slices) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("observation has no slice '" + name + "'");
}

ObservationLayout observation_layout(const Grid& grid, TaskKind task, ObservationFeatures f) {
  ObservationLayout out;
  auto add = [&out](std::string name, int length) {
    out.slices.push_back({std::move(name), out.size, length});
    out.size += length;
  };
  const int ng = grid.n_gens();
  const int nd = grid.n_loads();
  const int nl = grid.n_lines();
  add("time", 6);
  add("gen_p", ng);
  add("gen_theta", ng);
  add("load_p", nd);
  add("load_theta", nd);
  add("rho", nl);
  add("line_cooldown", nl);
  if (task == TaskKind::Topology) {
    add("topo_vect", grid.n_elements());
    add("line_status", nl);
    add("time_overflow", nl);
    add("sub_cooldown", grid.n_subs());
  } else {
    add("target_dispatch", ng);
    add("actual_dispatch", ng);
    add("gen_margin_up", ng);
    add("gen_margin_down", ng);
    add("gen_p_curtailed", ng);
    add("curtailment", ng);
    add("curtail_limit", ng);
  }
  if (f.maintenance) {
    add("time_next_maintenance", nl);
    add("duration_next_maintenance", nl);
  }
  if (f.storage) {
    const int ns = grid.n_storages();
    add("storage_charge", ns);
    add("storage_power_target", ns);
    add("storage_power", ns);
    add("storage_theta", ns);
  }
  return out;
}

std::vector<double> Environment::observe(const EnvState& s) const {
  const Grid& g = *grid_;
  std::vector<double> o;
  o.reserve(layout_.size);
  const int row = std::min(s.start + std::max(s.t - 1, 0), chronics_->horizon - 1);
  auto cyc = [&o](double value, double period) {
    const double a = 2.0 * std::numbers::pi * value / period;
    o.push_back(std::sin(a));
    o.push_back(std::cos(a));
  };
  cyc((row % kStepsPerHour) * 5.0, 60.0);
  cyc((row % kStepsPerDay) / kStepsPerHour, 24.0);
  cyc((row / kStepsPerDay) % 7, 7.0);
  auto theta_at = [&](int pos) {
    const int b = g.busbar_of(pos, s.topo.topo_vect[pos]);
    return s.flows.theta.empty() ? 0.0 : s.flows.theta[b];
  };
  for (double p : s.gen_p) o.push_back(p);
  for (int i = 0; i < g.n_gens(); ++i) o.push_back(theta_at(g.gen_pos(i)));
  for (double p : s.load_p) o.push_back(p);
  for (int i = 0; i < g.n_loads(); ++i) o.push_back(theta_at(g.load_pos(i)));
  for (int l = 0; l < g.n_lines(); ++l) o.push_back(s.flows.rho.empty() ? 0.0 : s.flows.rho[l]);
  for (int c : s.line_cooldown) o.push_back(c);
  if (config_.task == TaskKind::Topology) {
    std::vector<double> topo(s.topo.topo_vect.begin(), s.topo.topo_vect.end());
    for (int l = 0; l < g.n_lines(); ++l) {
      if (!s.topo.line_status[l]) {
        topo[g.line_or_pos(l)] = -1.0;
        topo[g.line_ex_pos(l)] = -1.0;
      }
    }
    o.insert(o.end(), topo.begin(), topo.end());
    for (int l = 0; l < g.n_lines(); ++l) o.push_back(s.topo.line_status[l] ? 1.0 : 0.0);
    for (int c : s.overflow) o.push_back(c);
    for (int c : s.sub_cooldown) o.push_back(c);
  } else {
    const int ng = g.n_gens();
    for (double v : s.gen_target) o.push_back(v);
    for (double v : s.gen_p) o.push_back(v);
    for (int i = 0; i < ng; ++i) {
      const Generator& gen = g.generators()[i];
      o.push_back(gen.renewable() ? 0.0 : std::min(gen.p_max, s.gen_p[i] + gen.ramp_up) - s.gen_p[i]);
    }
    for (int i = 0; i < ng; ++i) {
      const Generator& gen = g.generators()[i];
      o.push_back(gen.renewable() ? 0.0
                                  : s.gen_p[i] - std::max(gen.p_min, s.gen_p[i] - gen.ramp_down));
    }
    for (int i = 0; i < ng; ++i) {
      const bool ren = g.generators()[i].renewable();
      o.push_back(ren ? s.gen_target[i] - s.gen_p[i] : 0.0);
    }
    for (int i = 0; i < ng; ++i) {
      const bool ren = g.generators()[i].renewable();
      o.push_back(ren && s.gen_target[i] > 0.0 ? 1.0 - s.gen_p[i] / s.gen_target[i] : 0.0);
    }
    for (double v : s.curtail_limit) o.push_back(v);
  }
  if (features_.maintenance) {
    std::vector<double> dur;
    for (int l = 0; l < g.n_lines(); ++l) {
      const MaintenanceLookahead m = next_maintenance(*chronics_, l, row);
      o.push_back(m.time_to_next);
      dur.push_back(m.duration);
    }
    o.insert(o.end(), dur.begin(), dur.end());
  }
  if (features_.storage) {
    for (double v : s.storage_charge) o.push_back(v);
    for (double v : s.storage_target) o.push_back(v);
    for (double v : s.storage_p) o.push_back(v);
    for (int k = 0; k < g.n_storages(); ++k) o.push_back(theta_at(g.storage_pos(k)));
  }
  return o;
}

SpaceSpec Environment::spec() const {
  SpaceSpec s;
  s.observation = layout_;
  if (config_.task == TaskKind::Topology) {
    s.discrete_actions = actions_.size();
  } else {
    s.bounds = bounds_;
  }
  return s;
}

std::string SpaceSpec::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["observation"]["size"] = observation.size;
  nlohmann::json slices = nlohmann::json::array();
  for (const Slice& s : observation.slices) {
    slices.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
  }
  j["observation"]["slices"] = std::move(slices);
  if (discrete_actions > 0) {
    j["action"] = {{"kind", "discrete"}, {"n", discrete_actions}};
  } else {
    j["action"] = {{"kind", "continuous"}, {"low", bounds.lower}, {"high", bounds.upper}};
  }
  return j.dump();
}

}  // namespace gridenv
