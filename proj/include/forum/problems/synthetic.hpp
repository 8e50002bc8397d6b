#pragma once

#include <algorithm>
#include <cmath>

#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/types.hpp"

namespace forum {

// Three-variable synthetic problem with a known optimal set:
//
//   min_{a, w}  ( ||w - (1, a)||^2 , ||w - (2, a)||^2 )
//   s.t.        w in argmin ||w - (a, a)||^2
//
// Both objectives and the lower level are quadratics, so every oracle is
// closed-form: w*(a) = (a, a), Jacobian (1, 1)', H_ww = 2I. The optimal
// set is the segment {a = w1 = w2 = c, c in [1, 2]}.
//
// Constants: strong convexity in w is 2; the full lower-level Hessian
//   [[4, -2, -2], [-2, 2, 0], [-2, 0, 2]]
// has eigenvalues {0, 2, 6}, so the gradient's Lipschitz constant over z
// is 6. The upper-level Hessians have largest eigenvalue 4.
class SyntheticProblem final : public ProblemOracle {
 public:
  Dims dims() const override { return {1, 2, 2}; }
  std::string name() const override { return "synthetic"; }

  double ul_value(Index i, const DecisionPoint& z) const override {
    const double t = target(i);
    const double d1 = z.omega[0] - t;
    const double d2 = z.omega[1] - z.alpha[0];
    return d1 * d1 + d2 * d2;
  }

  Vector ul_grad(Index i, const DecisionPoint& z) const override {
    const double t = target(i);
    Vector g(3);
    g[0] = -2.0 * (z.omega[1] - z.alpha[0]);
    g[1] = 2.0 * (z.omega[0] - t);
    g[2] = 2.0 * (z.omega[1] - z.alpha[0]);
    return g;
  }

  double ll_value(const DecisionPoint& z) const override {
    const double d1 = z.omega[0] - z.alpha[0];
    const double d2 = z.omega[1] - z.alpha[0];
    return d1 * d1 + d2 * d2;
  }

  Vector ll_grad(const DecisionPoint& z) const override {
    const double d1 = z.omega[0] - z.alpha[0];
    const double d2 = z.omega[1] - z.alpha[0];
    Vector g(3);
    g[0] = -2.0 * (d1 + d2);
    g[1] = 2.0 * d1;
    g[2] = 2.0 * d2;
    return g;
  }

  bool has_exact_ll_solution() const override { return true; }
  Vector exact_ll_solution(const Vector& alpha) const override {
    return Vector::Constant(2, alpha[0]);
  }

  bool has_ll_solution_jacobian() const override { return true; }
  Matrix ll_solution_jacobian(const Vector& /*alpha*/) const override {
    return Matrix::Ones(2, 1);
  }

  bool has_ll_hvp() const override { return true; }
  Vector ll_hvp_ww(const DecisionPoint& /*z*/, const Vector& v) const override {
    return 2.0 * v;
  }
  Vector ll_hvp_aw(const DecisionPoint& /*z*/, const Vector& v) const override {
    return Vector::Constant(1, -2.0 * (v[0] + v[1]));
  }

  AssumptionConstants assumption_constants() const override {
    AssumptionConstants c;
    c.lip_ul_grad = 4.0;
    c.strong_convexity = 2.0;
    c.lip_ll_grad = 6.0;
    return c;
  }

 private:
  static double target(Index i) { return i == 0 ? 1.0 : 2.0; }
};

inline SyntheticProblem synthetic_appendix_problem() { return {}; }

// Euclidean distance from z to the optimal segment: the closest point is
// (c, c, c) with c = clamp((a + w1 + w2) / 3, 1, 2).
inline double dist_to_pareto(const DecisionPoint& z) {
  if (z.n() != 1 || z.p() != 2)
    throw StructuralError("dist_to_pareto expects dimensions (1, 2)");
  const double mean = (z.alpha[0] + z.omega[0] + z.omega[1]) / 3.0;
  const double c = std::clamp(mean, 1.0, 2.0);
  const double da = z.alpha[0] - c;
  const double d1 = z.omega[0] - c;
  const double d2 = z.omega[1] - c;
  return std::sqrt(da * da + d1 * d1 + d2 * d2);
}

}  // namespace forum
