#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace forum {

// An oracle returned data whose shape contradicts the declared dimensions.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// A problem was asked for an optional capability it does not provide
// (exact lower-level solution, Jacobian, Hessian-vector products, ...).
struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// An iteration produced a non-finite value. step_index is the iteration
// at which the divergence was detected.
struct DivergenceError : std::runtime_error {
  std::int64_t step_index;
  DivergenceError(const std::string& what, std::int64_t step)
      : std::runtime_error(what), step_index(step) {}
};

// Invalid configuration (bad field value, unparsable document, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace forum
