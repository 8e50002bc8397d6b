#pragma once

#include <string>

#include "forum/core/errors.hpp"
#include "forum/core/types.hpp"

namespace forum {

// Oracle bundle for one multi-objective bi-level problem
//
//   min_z (F_1(z), ..., F_m(z))   s.t.  omega in argmin_w f(alpha, w),
//
// with z = (alpha, omega). Gradients over z order the alpha block first.
// Implementations must be safe for concurrent read-only evaluation and
// deterministic: identical inputs return identical vectors.
class ProblemOracle {
 public:
  virtual ~ProblemOracle() = default;

  virtual Dims dims() const = 0;
  virtual std::string name() const = 0;

  virtual double ul_value(Index i, const DecisionPoint& z) const = 0;
  virtual Vector ul_grad(Index i, const DecisionPoint& z) const = 0;

  virtual double ll_value(const DecisionPoint& z) const = 0;
  virtual Vector ll_grad(const DecisionPoint& z) const = 0;

  // Optional capabilities. Defaults report absence and throw.
  virtual bool has_exact_ll_solution() const { return false; }
  virtual Vector exact_ll_solution(const Vector& /*alpha*/) const {
    throw CapabilityError(name() + ": exact_ll_solution not provided");
  }

  virtual bool has_ll_solution_jacobian() const { return false; }
  virtual Matrix ll_solution_jacobian(const Vector& /*alpha*/) const {
    throw CapabilityError(name() + ": ll_solution_jacobian not provided");
  }

  virtual bool has_ll_hvp() const { return false; }
  // (d^2 f / d omega^2) v, v of length p.
  virtual Vector ll_hvp_ww(const DecisionPoint& /*z*/, const Vector& /*v*/) const {
    throw CapabilityError(name() + ": ll_hvp_ww not provided");
  }
  // Transpose cross product: maps v of length p to the alpha-space vector
  // (d/d alpha) <grad_omega f, v>, length n.
  virtual Vector ll_hvp_aw(const DecisionPoint& /*z*/, const Vector& /*v*/) const {
    throw CapabilityError(name() + ": ll_hvp_aw not provided");
  }

  virtual AssumptionConstants assumption_constants() const { return {}; }

  // Convenience views of the lower-level gradient blocks.
  Vector ll_grad_alpha(const DecisionPoint& z) const {
    return ll_grad(z).head(dims().n);
  }
  Vector ll_grad_omega(const DecisionPoint& z) const {
    return ll_grad(z).tail(dims().p);
  }
};

}  // namespace forum
