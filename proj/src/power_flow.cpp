#include "gridenv/power_flow.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridenv {

namespace {

constexpr double kBalanceTolerance = 1e-6;  // MW

struct LineEnds {
  int from;
  int to;
};

LineEnds line_busbars(const Grid& grid, const TopologyState& topo, int line) {
  const int o = grid.line_or_pos(line);
  const int e = grid.line_ex_pos(line);
  return {grid.busbar_of(o, topo.topo_vect[o]), grid.busbar_of(e, topo.topo_vect[e])};
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

Islands detect_islands(const Grid& grid, const TopologyState& topo) {
  const int nb = grid.n_busbars();
  std::vector<bool> in_service(nb, false);
  std::vector<bool> injection(nb, false);
  std::vector<bool> load(nb, false);
  for (int pos = 0; pos < grid.n_elements(); ++pos) {
    const ElementRef e = grid.element(pos);
    const int b = grid.busbar_of(pos, topo.topo_vect[pos]);
    switch (e.kind) {
      case ElementKind::Load:
        load[b] = true;
        [[fallthrough]];
      case ElementKind::Generator:
      case ElementKind::Storage:
        injection[b] = true;
        in_service[b] = true;
        break;
      case ElementKind::LineOrigin:
      case ElementKind::LineExtremity:
        if (topo.line_status[e.index]) in_service[b] = true;
        break;
    }
  }

  std::vector<int> parent(nb);
  std::iota(parent.begin(), parent.end(), 0);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (!topo.line_status[l]) continue;
    const LineEnds ends = line_busbars(grid, topo, l);
    const int a = find_root(parent, ends.from);
    const int b = find_root(parent, ends.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  Islands out;
  out.component.assign(nb, -1);
  std::vector<int> root_to_comp(nb, -1);
  for (int b = 0; b < nb; ++b) {
    if (!in_service[b]) continue;
    const int r = find_root(parent, b);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = out.n_components();
      out.members.emplace_back();
      out.has_injection.push_back(false);
      out.has_load.push_back(false);
    }
    const int c = root_to_comp[r];
    out.component[b] = c;
    out.members[c].push_back(b);
    if (injection[b]) out.has_injection[c] = true;
    if (load[b]) out.has_load[c] = true;
  }
  // Components are numbered by their lowest busbar, so a strict comparison
  // keeps the lowest-busbar component on ties.
  for (int c = 0; c < out.n_components(); ++c) {
    if (out.main_component < 0 ||
        out.members[c].size() > out.members[out.main_component].size()) {
      out.main_component = c;
    }
  }
  for (int c = 0; c < out.n_components(); ++c) {
    if (c == out.main_component) continue;
    if (out.has_injection[c]) ++out.n_stranded;
    if (out.has_load[c]) out.load_islanded = true;
  }
  return out;
}

std::vector<double> busbar_injections(const Grid& grid, const TopologyState& topo,
                                      std::span<const double> gen_p,
                                      std::span<const double> load_p,
                                      std::span<const double> storage_p) {
  std::vector<double> inj(grid.n_busbars(), 0.0);
  for (int g = 0; g < grid.n_gens(); ++g) {
    const int pos = grid.gen_pos(g);
    inj[grid.busbar_of(pos, topo.topo_vect[pos])] += gen_p[g];
  }
  for (int s = 0; s < grid.n_storages(); ++s) {
    const int pos = grid.storage_pos(s);
    inj[grid.busbar_of(pos, topo.topo_vect[pos])] += storage_p[s];
  }
  for (int l = 0; l < grid.n_loads(); ++l) {
    const int pos = grid.load_pos(l);
    inj[grid.busbar_of(pos, topo.topo_vect[pos])] -= load_p[l];
  }
  return inj;
}

FlowSolution solve_dc(const Grid& grid, const TopologyState& topo,
                      std::span<const double> injections) {
  return solve_dc(grid, topo, detect_islands(grid, topo), injections);
}

FlowSolution solve_dc(const Grid& grid, const TopologyState& topo, const Islands& islands,
                      std::span<const double> injections) {
  const int nb = grid.n_busbars();
  const double base = grid.base_mva();
  FlowSolution sol;
  sol.flow.assign(grid.n_lines(), 0.0);
  sol.rho.assign(grid.n_lines(), 0.0);
  sol.theta.assign(nb, 0.0);

  auto reject = [&sol](std::string why) {
    sol.feasible = false;
    sol.reason = std::move(why);
    return sol;
  };

  if (static_cast<int>(injections.size()) != nb) {
    return reject("injection vector has " + std::to_string(injections.size()) +
                  " entries, grid has " + std::to_string(nb) + " busbars");
  }
  for (int b = 0; b < nb; ++b) {
    if (!std::isfinite(injections[b])) return reject("non-finite injection");
    if (islands.component[b] < 0 && std::abs(injections[b]) > kBalanceTolerance) {
      return reject("injection at out-of-service busbar " + std::to_string(b));
    }
  }

  // Lines grouped by component; both ends always share one.
  std::vector<std::vector<int>> comp_lines(islands.n_components());
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (!topo.line_status[l]) continue;
    comp_lines[islands.component[line_busbars(grid, topo, l).from]].push_back(l);
  }

  std::vector<int> local(nb, -1);
  for (int c = 0; c < islands.n_components(); ++c) {
    const auto& members = islands.members[c];
    double balance = 0.0;
    for (int b : members) balance += injections[b];
    if (std::abs(balance) > kBalanceTolerance) {
      return reject("island " + std::to_string(c) + " unbalanced by " + std::to_string(balance) +
                    " MW");
    }
    const int n = static_cast<int>(members.size()) - 1;  // reference removed
    if (n == 0) continue;
    for (int i = 0; i <= n; ++i) local[members[i]] = i - 1;  // reference -> -1

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * comp_lines[c].size());
    for (int l : comp_lines[c]) {
      const LineEnds ends = line_busbars(grid, topo, l);
      const double y = 1.0 / grid.lines()[l].reactance;
      const int i = local[ends.from];
      const int j = local[ends.to];
      if (i >= 0) triplets.emplace_back(i, i, y);
      if (j >= 0) triplets.emplace_back(j, j, y);
      if (i >= 0 && j >= 0) {
        triplets.emplace_back(i, j, -y);
        triplets.emplace_back(j, i, -y);
      }
    }
    Eigen::SparseMatrix<double> B(n, n);
    B.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd p(n);
    for (int i = 1; i <= n; ++i) p[i - 1] = injections[members[i]] / base;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                          Eigen::AMDOrdering<int>>
        solver(B);
    if (solver.info() != Eigen::Success) return reject("singular susceptance matrix");
    Eigen::VectorXd theta = solver.solve(p);
    // One refinement pass keeps nodal residuals at round-off level.
    const Eigen::VectorXd r = p - B * theta;
    theta += solver.solve(r);
    if (solver.info() != Eigen::Success || !theta.allFinite()) {
      return reject("susceptance solve failed");
    }
    for (int i = 1; i <= n; ++i) sol.theta[members[i]] = theta[i - 1];
  }

  for (int l = 0; l < grid.n_lines(); ++l) {
    if (!topo.line_status[l]) continue;
    const LineEnds ends = line_busbars(grid, topo, l);
    const Line& line = grid.lines()[l];
    sol.flow[l] = base * (sol.theta[ends.from] - sol.theta[ends.to]) / line.reactance;
    sol.rho[l] = std::abs(sol.flow[l]) / line.thermal_limit;
  }
  sol.feasible = true;
  sol.losses = estimate_losses(grid, sol);
  return sol;
}

double estimate_losses(const Grid& grid, const FlowSolution& solution) {
  const double base = grid.base_mva();
  double total = 0.0;
  for (int l = 0; l < grid.n_lines(); ++l) {
    const double pu = solution.flow[l] / base;
    total += grid.lines()[l].resistance * pu * pu * base;
  }
  return total;
}

std::vector<double> losses_per_component(const Grid& grid, const TopologyState& topo,
                                         const Islands& islands, const FlowSolution& solution) {
  const double base = grid.base_mva();
  std::vector<double> out(islands.n_components(), 0.0);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (!topo.line_status[l]) continue;
    const int c = islands.component[line_busbars(grid, topo, l).from];
    const double pu = solution.flow[l] / base;
    out[c] += grid.lines()[l].resistance * pu * pu * base;
  }
  return out;
}

}  // namespace gridenv
