#pragma once

#include <stdexcept>
#include <string>

namespace dfw {

// Raised when an iterative numerical routine fails or a non-finite value
// shows up where a finite one is required.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a graph sequence cannot produce a graph satisfying its
// constraints (connectivity) within the retry budget.
class DegenerateTopologyError : public std::runtime_error {
 public:
  explicit DegenerateTopologyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dfw
