#pragma once

#include <stdexcept>
#include <string>

namespace droplet {

// Input violates a documented precondition (CLI exit code 2).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Structurally invalid data, e.g. an occupancy vector breaking a
// conservation law.
class MalformedInput : public PreconditionError {
 public:
  explicit MalformedInput(const std::string& what) : PreconditionError(what) {}
};

// Enumeration or sampling work would exceed the configured budget
// (CLI exit code 3).
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace detail
}  // namespace droplet
