#include "gridenv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gridenv/error.hpp"
#include "text_util.hpp"

namespace gridenv {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw IntegrityError(what);
}

void check_sub(int sub, int n_subs, const std::string& owner) {
  require(sub >= 0 && sub < n_subs, owner + " references substation " + std::to_string(sub) +
                                        " (grid has " + std::to_string(n_subs) + ")");
}

}  // namespace

std::string_view to_string(GenKind kind) {
  switch (kind) {
    case GenKind::Fossil:
      return "fossil";
    case GenKind::Wind:
      return "wind";
    case GenKind::Solar:
      return "solar";
  }
  return "?";
}

Grid::Grid(GridData data) : data_(std::move(data)) {
  const int n_subs = static_cast<int>(data_.substations.size());
  require(n_subs > 0, "grid '" + data_.name + "' has no substations");
  require(std::isfinite(data_.base_mva) && data_.base_mva > 0.0, "base_mva must be > 0");

  for (std::size_t i = 0; i < data_.lines.size(); ++i) {
    const Line& l = data_.lines[i];
    const std::string who = "line " + std::to_string(i);
    check_sub(l.from_sub, n_subs, who);
    check_sub(l.to_sub, n_subs, who);
    require(l.from_sub != l.to_sub, who + " connects substation " +
                                        std::to_string(l.from_sub) + " to itself");
    require(l.reactance > 0.0, who + ": reactance must be > 0");
    require(l.resistance >= 0.0, who + ": resistance must be >= 0");
    require(l.thermal_limit > 0.0, who + ": thermal_limit must be > 0");
  }
  for (std::size_t i = 0; i < data_.generators.size(); ++i) {
    const Generator& g = data_.generators[i];
    const std::string who = "generator " + std::to_string(i);
    check_sub(g.sub, n_subs, who);
    require(g.p_min <= g.p_max, who + ": p_min > p_max");
    require(g.p_min >= 0.0, who + ": p_min must be >= 0");
    require(g.ramp_up >= 0.0 && g.ramp_down >= 0.0, who + ": ramps must be >= 0");
    require(g.marginal_cost >= 0.0, who + ": marginal cost must be >= 0");
  }
  for (std::size_t i = 0; i < data_.loads.size(); ++i) {
    const Load& l = data_.loads[i];
    check_sub(l.sub, n_subs, "load " + std::to_string(i));
    require(l.p_base >= 0.0, "load " + std::to_string(i) + ": p_base must be >= 0");
  }
  for (std::size_t i = 0; i < data_.storages.size(); ++i) {
    const Storage& s = data_.storages[i];
    const std::string who = "storage " + std::to_string(i);
    check_sub(s.sub, n_subs, who);
    require(s.energy_capacity >= 0.0 && s.p_charge_max >= 0.0 && s.p_discharge_max >= 0.0,
            who + ": bounds must be >= 0");
    require(s.initial_charge >= 0.0 && s.initial_charge <= s.energy_capacity,
            who + ": initial charge outside [0, capacity]");
  }
  if (data_.declared) {
    const Inventory have = inventory();
    const Inventory& want = *data_.declared;
    require(have == want,
            "grid '" + data_.name + "' inventory mismatch: declared " +
                std::to_string(want.substations) + "/" + std::to_string(want.lines) + "/" +
                std::to_string(want.generators) + "/" + std::to_string(want.loads) + "/" +
                std::to_string(want.storages) + ", found " + std::to_string(have.substations) +
                "/" + std::to_string(have.lines) + "/" + std::to_string(have.generators) + "/" +
                std::to_string(have.loads) + "/" + std::to_string(have.storages));
  }
  for (std::size_t i = 1; i < data_.difficulty_levels.size(); ++i) {
    require(data_.difficulty_levels[i] > data_.difficulty_levels[i - 1],
            "difficulty levels must be strictly increasing");
  }
  if (!data_.difficulty_levels.empty()) {
    require(data_.difficulty_levels.front() >= 1, "difficulty levels must be >= 1");
  }

  // Element layout, grouped by substation. Lines are visited in index order,
  // so line ends within a substation come out sorted by line index.
  std::vector<std::vector<ElementRef>> per_sub(n_subs);
  for (int i = 0; i < n_loads(); ++i) per_sub[data_.loads[i].sub].push_back({ElementKind::Load, i});
  for (int i = 0; i < n_gens(); ++i)
    per_sub[data_.generators[i].sub].push_back({ElementKind::Generator, i});
  for (int i = 0; i < n_storages(); ++i)
    per_sub[data_.storages[i].sub].push_back({ElementKind::Storage, i});
  for (int i = 0; i < n_lines(); ++i) {
    per_sub[data_.lines[i].from_sub].push_back({ElementKind::LineOrigin, i});
    per_sub[data_.lines[i].to_sub].push_back({ElementKind::LineExtremity, i});
  }
  load_pos_.assign(n_loads(), -1);
  gen_pos_.assign(n_gens(), -1);
  storage_pos_.assign(n_storages(), -1);
  line_or_pos_.assign(n_lines(), -1);
  line_ex_pos_.assign(n_lines(), -1);
  sub_start_.assign(n_subs + 1, 0);
  for (int s = 0; s < n_subs; ++s) {
    sub_start_[s] = static_cast<int>(elements_.size());
    for (const ElementRef& e : per_sub[s]) {
      const int pos = static_cast<int>(elements_.size());
      elements_.push_back(e);
      element_sub_.push_back(s);
      switch (e.kind) {
        case ElementKind::Load:
          load_pos_[e.index] = pos;
          break;
        case ElementKind::Generator:
          gen_pos_[e.index] = pos;
          break;
        case ElementKind::Storage:
          storage_pos_[e.index] = pos;
          break;
        case ElementKind::LineOrigin:
          line_or_pos_[e.index] = pos;
          break;
        case ElementKind::LineExtremity:
          line_ex_pos_[e.index] = pos;
          break;
      }
    }
  }
  sub_start_[n_subs] = static_cast<int>(elements_.size());
}

Inventory Grid::inventory() const {
  return {n_subs(), n_lines(), n_gens(), n_loads(), n_storages()};
}

// ---------------------------------------------------------------------------
// Scenario text format

namespace {

enum class Section { Header, Substations, Lines, Generators, Loads, Storages };

struct RowReader {
  const std::string& source;
  int line_no;
  std::vector<std::string_view> tokens;
  std::size_t positional;  // tokens before the first key=value option

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source, line_no, what);
  }

  void expect_positional(std::size_t n, const char* layout) const {
    if (positional != n) {
      fail("expected " + std::to_string(n) + " fields (" + layout + "), got " +
           std::to_string(positional));
    }
  }

  double number(std::size_t i, const char* field) const {
    auto v = detail::to_double(tokens[i]);
    if (!v || !std::isfinite(*v)) fail(std::string("field '") + field + "' is not a number");
    return *v;
  }

  int integer(std::size_t i, const char* field) const {
    auto v = detail::to_int(tokens[i]);
    if (!v) fail(std::string("field '") + field + "' is not an integer");
    return static_cast<int>(*v);
  }

  std::optional<double> option(std::string_view key) const {
    for (std::size_t i = positional; i < tokens.size(); ++i) {
      const auto eq = tokens[i].find('=');
      if (tokens[i].substr(0, eq) != key) continue;
      auto v = detail::to_double(tokens[i].substr(eq + 1));
      if (!v || !std::isfinite(*v)) fail("option '" + std::string(key) + "' is not a number");
      return v;
    }
    return std::nullopt;
  }

  void check_options(std::initializer_list<std::string_view> allowed) const {
    for (std::size_t i = positional; i < tokens.size(); ++i) {
      const auto key = tokens[i].substr(0, tokens[i].find('='));
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) fail("unknown option '" + std::string(key) + "'");
    }
  }

  void check_id(std::size_t expected) const {
    const int id = integer(0, "id");
    if (id != static_cast<int>(expected)) {
      fail("ids must be consecutive from 0: expected " + std::to_string(expected) + ", got " +
           std::to_string(id));
    }
  }
};

double default_cost(GenKind kind) { return kind == GenKind::Fossil ? 40.0 : 0.0; }

}  // namespace

Grid parse_grid(std::string_view text, const std::string& source) {
  GridData data;
  Section section = Section::Header;
  bool have_version = false;
  int line_no = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++line_no;
    const std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
      const std::string_view name = line.substr(1, line.size() - 2);
      if (name == "substations") {
        section = Section::Substations;
      } else if (name == "lines") {
        section = Section::Lines;
      } else if (name == "generators") {
        section = Section::Generators;
      } else if (name == "loads") {
        section = Section::Loads;
      } else if (name == "storages") {
        section = Section::Storages;
      } else {
        throw ParseError(source, line_no, "unknown section [" + std::string(name) + "]");
      }
      if (!have_version) throw ParseError(source, line_no, "missing format_version header");
      continue;
    }

    if (section == Section::Header) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
      const std::string_view key = detail::trim(line.substr(0, eq));
      const std::string_view value = detail::trim(line.substr(eq + 1));
      const auto fields = detail::split_ws(value);
      auto ints = [&](std::size_t min_count) {
        std::vector<int> out;
        for (auto f : fields) {
          auto v = detail::to_int(f);
          if (!v) throw ParseError(source, line_no, "'" + std::string(key) + "' expects integers");
          out.push_back(static_cast<int>(*v));
        }
        if (out.size() < min_count) {
          throw ParseError(source, line_no, "'" + std::string(key) + "' expects at least " +
                                                std::to_string(min_count) + " values");
        }
        return out;
      };
      if (key == "format_version") {
        auto v = detail::to_int(value);
        if (!v) throw ParseError(source, line_no, "format_version is not an integer");
        if (*v != 1) {
          throw ParseError(source, line_no, "unsupported format_version " + std::string(value));
        }
        have_version = true;
      } else if (key == "name") {
        data.name = std::string(value);
      } else if (key == "base_mva") {
        auto v = detail::to_double(value);
        if (!v) throw ParseError(source, line_no, "base_mva is not a number");
        data.base_mva = *v;
      } else if (key == "inventory") {
        auto v = ints(4);
        if (v.size() > 5) throw ParseError(source, line_no, "inventory takes 4 or 5 counts");
        data.declared = Inventory{v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] : 0};
      } else if (key == "difficulty") {
        data.difficulty_levels = ints(1);
      } else {
        throw ParseError(source, line_no, "unknown header key '" + std::string(key) + "'");
      }
      continue;
    }

    RowReader row{source, line_no, detail::split_ws(line), 0};
    while (row.positional < row.tokens.size() &&
           row.tokens[row.positional].find('=') == std::string_view::npos) {
      ++row.positional;
    }
    switch (section) {
      case Section::Substations: {
        if (row.positional < 1 || row.positional > 2) row.fail("expected: id [name]");
        row.check_options({});
        row.check_id(data.substations.size());
        data.substations.push_back(
            {row.positional == 2 ? std::string(row.tokens[1])
                                 : "sub_" + std::to_string(data.substations.size())});
        break;
      }
      case Section::Lines: {
        row.expect_positional(5, "id from to reactance thermal_limit");
        row.check_options({"r"});
        row.check_id(data.lines.size());
        Line l;
        l.from_sub = row.integer(1, "from");
        l.to_sub = row.integer(2, "to");
        l.reactance = row.number(3, "reactance");
        l.thermal_limit = row.number(4, "thermal_limit");
        l.resistance = row.option("r").value_or(0.01);
        data.lines.push_back(l);
        break;
      }
      case Section::Generators: {
        row.expect_positional(7, "id sub kind p_min p_max ramp_up ramp_down");
        row.check_options({"cost"});
        row.check_id(data.generators.size());
        Generator g;
        g.sub = row.integer(1, "sub");
        const std::string_view kind = row.tokens[2];
        if (kind == "fossil") {
          g.kind = GenKind::Fossil;
        } else if (kind == "wind") {
          g.kind = GenKind::Wind;
        } else if (kind == "solar") {
          g.kind = GenKind::Solar;
        } else {
          row.fail("generator kind must be fossil, wind or solar, got '" + std::string(kind) + "'");
        }
        g.p_min = row.number(3, "p_min");
        g.p_max = row.number(4, "p_max");
        g.ramp_up = row.number(5, "ramp_up");
        g.ramp_down = row.number(6, "ramp_down");
        g.marginal_cost = row.option("cost").value_or(default_cost(g.kind));
        data.generators.push_back(g);
        break;
      }
      case Section::Loads: {
        row.expect_positional(3, "id sub p_base");
        row.check_options({});
        row.check_id(data.loads.size());
        data.loads.push_back({row.integer(1, "sub"), row.number(2, "p_base")});
        break;
      }
      case Section::Storages: {
        row.expect_positional(5, "id sub energy_capacity p_charge_max p_discharge_max");
        row.check_options({"initial"});
        row.check_id(data.storages.size());
        Storage s;
        s.sub = row.integer(1, "sub");
        s.energy_capacity = row.number(2, "energy_capacity");
        s.p_charge_max = row.number(3, "p_charge_max");
        s.p_discharge_max = row.number(4, "p_discharge_max");
        s.initial_charge = row.option("initial").value_or(0.5 * s.energy_capacity);
        data.storages.push_back(s);
        break;
      }
      case Section::Header:
        break;
    }
  }
  if (!have_version) throw ParseError(source, line_no, "missing format_version header");
  return Grid(std::move(data));
}

Grid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str(), path.string());
}

std::string format_grid(const Grid& grid) {
  std::ostringstream out;
  auto num = detail::format_double;
  out << "format_version = 1\n";
  out << "name = " << grid.name() << "\n";
  out << "base_mva = " << num(grid.base_mva()) << "\n";
  const Inventory inv = grid.inventory();
  out << "inventory = " << inv.substations << " " << inv.lines << " " << inv.generators << " "
      << inv.loads << " " << inv.storages << "\n";
  if (!grid.difficulty_levels().empty()) {
    out << "difficulty =";
    for (int n : grid.difficulty_levels()) out << " " << n;
    out << "\n";
  }
  out << "\n[substations]\n";
  for (int i = 0; i < grid.n_subs(); ++i) out << i << " " << grid.substations()[i].name << "\n";
  out << "\n[lines]\n";
  for (int i = 0; i < grid.n_lines(); ++i) {
    const Line& l = grid.lines()[i];
    out << i << " " << l.from_sub << " " << l.to_sub << " " << num(l.reactance) << " "
        << num(l.thermal_limit) << " r=" << num(l.resistance) << "\n";
  }
  out << "\n[generators]\n";
  for (int i = 0; i < grid.n_gens(); ++i) {
    const Generator& g = grid.generators()[i];
    out << i << " " << g.sub << " " << to_string(g.kind) << " " << num(g.p_min) << " "
        << num(g.p_max) << " " << num(g.ramp_up) << " " << num(g.ramp_down)
        << " cost=" << num(g.marginal_cost) << "\n";
  }
  out << "\n[loads]\n";
  for (int i = 0; i < grid.n_loads(); ++i) {
    out << i << " " << grid.loads()[i].sub << " " << num(grid.loads()[i].p_base) << "\n";
  }
  if (grid.n_storages() > 0) {
    out << "\n[storages]\n";
    for (int i = 0; i < grid.n_storages(); ++i) {
      const Storage& s = grid.storages()[i];
      out << i << " " << s.sub << " " << num(s.energy_capacity) << " " << num(s.p_charge_max)
          << " " << num(s.p_discharge_max) << " initial=" << num(s.initial_charge) << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Topology

TopologyState reference_topology(const Grid& grid) {
  return {std::vector<std::int8_t>(grid.n_elements(), 1),
          std::vector<bool>(grid.n_lines(), true)};
}

TopologyState apply_topology(const Grid& grid, const TopologyState& state,
                             const TopologyChange& change) {
  TopologyState next = state;
  if (const auto* a = std::get_if<SubstationAssignment>(&change)) {
    if (a->sub < 0 || a->sub >= grid.n_subs()) {
      throw ActionError("unknown substation " + std::to_string(a->sub));
    }
    if (static_cast<int>(a->buses.size()) != grid.sub_size(a->sub)) {
      throw ActionError("substation " + std::to_string(a->sub) + " has " +
                        std::to_string(grid.sub_size(a->sub)) + " elements, assignment has " +
                        std::to_string(a->buses.size()));
    }
    for (std::size_t i = 0; i < a->buses.size(); ++i) {
      if (a->buses[i] != 1 && a->buses[i] != 2) {
        throw ActionError("busbar label " + std::to_string(a->buses[i]) + " outside {1, 2}");
      }
      next.topo_vect[grid.sub_start(a->sub) + i] = a->buses[i];
    }
  } else if (const auto* l = std::get_if<LineStatusChange>(&change)) {
    if (l->line < 0 || l->line >= grid.n_lines()) {
      throw ActionError("unknown line " + std::to_string(l->line));
    }
    next.line_status[l->line] = l->connected;
  }
  return next;
}

int hamming_distance(const TopologyState& a, const TopologyState& b) {
  int d = 0;
  const std::size_t n = std::min(a.topo_vect.size(), b.topo_vect.size());
  for (std::size_t i = 0; i < n; ++i) d += a.topo_vect[i] != b.topo_vect[i];
  return d;
}

std::uint64_t bus_split_count(int k) {
  if (k <= 1) return 0;
  if (k > 64) throw std::out_of_range("bus_split_count: k > 64 overflows");
  return (std::uint64_t{1} << (k - 1)) - 1;
}

std::vector<std::vector<std::int8_t>> enumerate_substation_splits(int k) {
  std::vector<std::vector<std::int8_t>> out;
  if (k <= 1) return out;
  if (k > 24) throw std::out_of_range("enumerate_substation_splits: k > 24 is impractical");
  const std::uint32_t n = std::uint32_t{1} << (k - 1);
  out.reserve(n - 1);
  for (std::uint32_t mask = 1; mask < n; ++mask) {
    std::vector<std::int8_t> buses(k, 1);
    for (int i = 1; i < k; ++i) {
      if (mask & (std::uint32_t{1} << (i - 1))) buses[i] = 2;
    }
    out.push_back(std::move(buses));
  }
  return out;
}

std::uint64_t topology_hash(const TopologyState& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (auto b : state.topo_vect) mix(static_cast<std::uint8_t>(b));
  mix(0xff);
  for (bool s : state.line_status) mix(s ? 1 : 0);
  return h;
}

}  // namespace gridenv
