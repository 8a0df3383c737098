#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gridenv {

enum class GenKind { Fossil, Wind, Solar };

struct Substation {
  std::string name;
};

struct Line {
  int from_sub = 0;
  int to_sub = 0;
  double reactance = 0.0;      // per unit on the grid base
  double resistance = 0.01;    // per unit, feeds the loss proxy only
  double thermal_limit = 0.0;  // MW
};

struct Generator {
  int sub = 0;
  GenKind kind = GenKind::Fossil;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;    // MW per step
  double ramp_down = 0.0;  // MW per step
  double marginal_cost = 0.0;

  bool renewable() const { return kind != GenKind::Fossil; }
};

struct Load {
  int sub = 0;
  double p_base = 0.0;  // MW, nominal demand scaled by the chronics generator
};

struct Storage {
  int sub = 0;
  double energy_capacity = 0.0;  // MWh
  double p_charge_max = 0.0;     // MW
  double p_discharge_max = 0.0;  // MW
  double initial_charge = 0.0;   // MWh
};

// Declared component counts of a named scenario.
struct Inventory {
  int substations = 0;
  int lines = 0;
  int generators = 0;
  int loads = 0;
  int storages = 0;

  bool operator==(const Inventory&) const = default;
};

struct GridData {
  std::string name;
  double base_mva = 100.0;
  std::vector<Substation> substations;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<Storage> storages;
  std::optional<Inventory> declared;
  std::vector<int> difficulty_levels;  // action counts per difficulty level
};

enum class ElementKind { Load, Generator, Storage, LineOrigin, LineExtremity };

struct ElementRef {
  ElementKind kind;
  int index;
};

// Static electrical network. Immutable once constructed; the constructor
// enforces referential integrity and the scalar invariants of every
// component.
//
// Topology vectors list elements grouped by substation (substation 0 first).
// Within a substation the order is loads, generators, storages, then line
// ends, each group sorted by component index.
class Grid {
 public:
  explicit Grid(GridData data);

  const std::string& name() const { return data_.name; }
  double base_mva() const { return data_.base_mva; }
  const std::vector<Substation>& substations() const { return data_.substations; }
  const std::vector<Line>& lines() const { return data_.lines; }
  const std::vector<Generator>& generators() const { return data_.generators; }
  const std::vector<Load>& loads() const { return data_.loads; }
  const std::vector<Storage>& storages() const { return data_.storages; }
  const std::vector<int>& difficulty_levels() const { return data_.difficulty_levels; }
  Inventory inventory() const;

  int n_subs() const { return static_cast<int>(data_.substations.size()); }
  int n_lines() const { return static_cast<int>(data_.lines.size()); }
  int n_gens() const { return static_cast<int>(data_.generators.size()); }
  int n_loads() const { return static_cast<int>(data_.loads.size()); }
  int n_storages() const { return static_cast<int>(data_.storages.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }
  int n_busbars() const { return 2 * n_subs(); }

  int sub_start(int sub) const { return sub_start_[sub]; }
  int sub_size(int sub) const { return sub_start_[sub + 1] - sub_start_[sub]; }
  int element_sub(int pos) const { return element_sub_[pos]; }
  ElementRef element(int pos) const { return elements_[pos]; }

  int load_pos(int i) const { return load_pos_[i]; }
  int gen_pos(int i) const { return gen_pos_[i]; }
  int storage_pos(int i) const { return storage_pos_[i]; }
  int line_or_pos(int i) const { return line_or_pos_[i]; }
  int line_ex_pos(int i) const { return line_ex_pos_[i]; }

  // Busbar index of the element at `pos` given its busbar label (1 or 2).
  int busbar_of(int pos, int bus) const { return 2 * element_sub_[pos] + (bus - 1); }

 private:
  GridData data_;
  std::vector<ElementRef> elements_;
  std::vector<int> element_sub_;
  std::vector<int> sub_start_;
  std::vector<int> load_pos_, gen_pos_, storage_pos_, line_or_pos_, line_ex_pos_;
};

// Parses the scenario text format. `source` names the input in errors.
Grid parse_grid(std::string_view text, const std::string& source = "<string>");
Grid load_grid(const std::filesystem::path& path);
std::string format_grid(const Grid& grid);

std::string_view to_string(GenKind kind);

// Agent-controllable configuration: one busbar label (1 or 2) per element and
// one connection flag per line.
struct TopologyState {
  std::vector<std::int8_t> topo_vect;
  std::vector<bool> line_status;

  bool operator==(const TopologyState&) const = default;
};

// All elements on busbar 1, all lines connected.
TopologyState reference_topology(const Grid& grid);

struct SubstationAssignment {
  int sub = 0;
  std::vector<std::int8_t> buses;  // one label per element of the substation

  bool operator==(const SubstationAssignment&) const = default;
};

struct LineStatusChange {
  int line = 0;
  bool connected = true;

  bool operator==(const LineStatusChange&) const = default;
};

using TopologyChange = std::variant<std::monostate, SubstationAssignment, LineStatusChange>;

// Returns a copy of `state` with only the targeted elements changed. Throws
// ActionError on unknown ids, wrong assignment length, or labels outside {1,2}.
TopologyState apply_topology(const Grid& grid, const TopologyState& state,
                             const TopologyChange& change);

// Number of entries in which two busbar vectors differ.
int hamming_distance(const TopologyState& a, const TopologyState& b);

// Number of distinct non-trivial two-busbar splits of a substation with k
// elements, with busbar-label symmetry removed: 2^(k-1) - 1, and 0 for k <= 1.
std::uint64_t bus_split_count(int k);

// Canonical splits of a k-element substation: element 0 fixed to busbar 1,
// at least one element on busbar 2. Ordered by the bitmask of elements
// 1..k-1 on busbar 2 (bit i-1 set means element i on busbar 2).
std::vector<std::vector<std::int8_t>> enumerate_substation_splits(int k);

// FNV-1a hash of the busbar labels and line flags, used in trajectory logs.
std::uint64_t topology_hash(const TopologyState& state);

}  // namespace gridenv
