#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "gridenv/action_space.hpp"
#include "gridenv/chronics.hpp"
#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"
#include "gridenv/grid.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return GRIDENV_SOURCE_DIR; }
inline std::filesystem::path data(const std::string& rel) { return source_dir() / "data" / rel; }
inline std::filesystem::path test_data(const std::string& rel) {
  return source_dir() / "tests" / "data" / rel;
}

inline gridenv::Grid bus14() { return gridenv::load_grid(data("scenarios/bus14.grid")); }

inline gridenv::EnvConfig calm_config(int episode_length = 288) {
  gridenv::EnvConfig c;
  c.scenario = data("scenarios/bus14.grid");
  c.episode_length = episode_length;
  c.chronics.horizon = 2016;
  return c;
}

// Fresh temporary directory below the test working directory.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing_support
