#pragma once

#include <stdexcept>
#include <string>

namespace gridenv {

// Malformed scenario, config or chronics input. Carries the source location
// when one is known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Referential integrity violation in a grid description.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration that cannot be turned into a runnable environment.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An action that cannot be decoded at all (wrong shape, unknown ids,
// out-of-bounds values). Distinct from a well-formed action that the engine
// ignores because of cooldowns.
class ActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gridenv
