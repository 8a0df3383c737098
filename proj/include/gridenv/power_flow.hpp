#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridenv/grid.hpp"

namespace gridenv {

// Busbar connectivity under a topology. A busbar is in service when at least
// one injection element or one connected line end sits on it.
struct Islands {
  std::vector<int> component;                // per busbar, -1 when out of service
  std::vector<std::vector<int>> members;     // busbars of each component, ascending
  std::vector<bool> has_injection;           // per component
  std::vector<bool> has_load;                // per component
  int main_component = -1;                   // most busbars, ties to the lowest busbar
  int n_stranded = 0;                        // components with injections, not main
  bool load_islanded = false;                // a non-main component holds a load

  int n_components() const { return static_cast<int>(members.size()); }
};

Islands detect_islands(const Grid& grid, const TopologyState& topo);

struct FlowSolution {
  std::vector<double> flow;   // MW, positive from origin to extremity; 0 when disconnected
  std::vector<double> rho;    // |flow| / thermal_limit
  std::vector<double> theta;  // busbar voltage angles, radians; 0 out of service
  double losses = 0.0;        // MW, quadratic resistive proxy
  bool feasible = false;
  std::string reason;         // why the solve was rejected, empty when feasible
};

// Net active injection per busbar (2 per substation), MW:
// generation + storage discharge - load. Storage power is positive when
// discharging.
std::vector<double> busbar_injections(const Grid& grid, const TopologyState& topo,
                                      std::span<const double> gen_p,
                                      std::span<const double> load_p,
                                      std::span<const double> storage_p);

// DC power flow. `injections` has one entry per busbar and must balance
// within every island (1e-6 MW); the lowest busbar of each island is its
// angle reference. Unbalanced or singular inputs produce feasible = false.
FlowSolution solve_dc(const Grid& grid, const TopologyState& topo,
                      std::span<const double> injections);

// Same, reusing an already computed island partition of `topo`.
FlowSolution solve_dc(const Grid& grid, const TopologyState& topo, const Islands& islands,
                      std::span<const double> injections);

// sum over connected lines of r * (flow / base)^2 * base, MW.
double estimate_losses(const Grid& grid, const FlowSolution& solution);

// Loss estimate restricted to lines inside each component, indexed like
// islands.members.
std::vector<double> losses_per_component(const Grid& grid, const TopologyState& topo,
                                         const Islands& islands, const FlowSolution& solution);

}  // namespace gridenv
