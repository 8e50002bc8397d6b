#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/types.hpp"
#include "forum/core/workspace.hpp"

namespace forum {

// Runs exactly T steps of gradient descent on f(alpha, .) from omega_init:
//   w^{t+1} = w^t - eta * grad_omega f(alpha, w^t).
// T = 0 returns omega_init unchanged. Throws DivergenceError (with the
// offending step index) if an iterate stops being finite.
inline Vector solve_ll(const ProblemOracle& problem, const Vector& alpha,
                       const Vector& omega_init, int T, double eta,
                       WorkspaceMeter* meter = nullptr) {
  const Index p = problem.dims().p;
  ScopedWorkspace ws(meter, 2 * p);  // iterate + gradient buffer
  DecisionPoint z(alpha, omega_init);
  for (int t = 0; t < T; ++t) {
    const Vector g = problem.ll_grad(z).tail(p);
    z.omega -= eta * g;
    if (!z.omega.allFinite())
      throw DivergenceError("lower-level iterate became non-finite", t);
  }
  return z.omega;
}

// Approximate constraint data at z for a given T-step iterate omega_T:
//   q~    = f(z) - f(alpha, omega_T)
//   grad  = grad_z f(z) - [grad_alpha f(alpha, omega_T); 0]
//   phi   = rho/2 * ||grad||^2
struct ConstraintEval {
  Vector omega_T;
  double q_tilde = 0.0;
  Vector grad_q_tilde;
  double phi = 0.0;
};

inline ConstraintEval constraint_eval(const ProblemOracle& problem,
                                      const DecisionPoint& z, const Vector& omega_T,
                                      double rho, WorkspaceMeter* meter = nullptr) {
  const Dims d = problem.dims();
  ScopedWorkspace ws(meter, 2 * (d.n + d.p) + d.n);
  ConstraintEval out;
  out.omega_T = omega_T;
  const DecisionPoint shifted(z.alpha, omega_T);
  out.q_tilde = problem.ll_value(z) - problem.ll_value(shifted);
  out.grad_q_tilde = problem.ll_grad(z);
  out.grad_q_tilde.head(d.n) -= problem.ll_grad(shifted).head(d.n);
  out.phi = 0.5 * rho * out.grad_q_tilde.squaredNorm();
  return out;
}

struct ExactConstraint {
  double q = 0.0;
  Vector grad_q;
};

// Exact constraint q(z) = f(z) - f(alpha, omega*(alpha)) and its gradient.
// The value-function gradient needs no Jacobian of omega*: since
// grad_omega f vanishes at omega*, grad_alpha f*(alpha) equals the partial
// gradient grad_alpha f(alpha, omega*).
inline ExactConstraint exact_constraint(const ProblemOracle& problem,
                                        const DecisionPoint& z) {
  if (!problem.has_exact_ll_solution())
    throw CapabilityError(problem.name() +
                          ": exact_constraint needs exact_ll_solution");
  const Dims d = problem.dims();
  const Vector omega_star = problem.exact_ll_solution(z.alpha);
  const DecisionPoint at_opt(z.alpha, omega_star);
  ExactConstraint out;
  out.q = problem.ll_value(z) - problem.ll_value(at_opt);
  out.grad_q = problem.ll_grad(z);
  out.grad_q.head(d.n) -= problem.ll_grad(at_opt).head(d.n);
  return out;
}

// One row of the gradient-error decay table: the measured approximation
// error ||grad q~(z; T) - grad q(z)|| against the analytic bound
// L_f (1 - c eta / 2)^T ||omega^0 - omega*||.
struct Lemma1Row {
  int T = 0;
  double measured = 0.0;
  double bound = 0.0;
};

struct Lemma1Table {
  std::vector<Lemma1Row> rows;

  bool all_within(double slack = 1e-9) const {
    for (const auto& r : rows)
      if (r.measured > r.bound + slack) return false;
    return true;
  }
};

// Tabulates the gradient approximation error of the T-step constraint
// against its exponential-decay bound, for T = 0..T_max. The lower-level
// solve starts at z.omega. Requires the exact lower-level solution and
// the constants (c, L_f); the bound is valid for eta <= 2 / (L_f + c).
inline Lemma1Table lemma1_bound_check(const ProblemOracle& problem,
                                      const DecisionPoint& z, double eta,
                                      int T_max) {
  const AssumptionConstants constants = problem.assumption_constants();
  if (!constants.strong_convexity || !constants.lip_ll_grad)
    throw CapabilityError(problem.name() +
                          ": lemma1_bound_check needs constants (c, L_f)");
  const double c = *constants.strong_convexity;
  const double lip = *constants.lip_ll_grad;

  const ExactConstraint exact = exact_constraint(problem, z);
  const Vector omega_star = problem.exact_ll_solution(z.alpha);
  const double init_dist = (z.omega - omega_star).norm();
  const double decay = 1.0 - 0.5 * c * eta;

  Lemma1Table table;
  table.rows.reserve(T_max + 1);
  Vector omega_t = z.omega;  // iterate shared across T: one extra step per row
  for (int T = 0; T <= T_max; ++T) {
    if (T > 0) omega_t = solve_ll(problem, z.alpha, omega_t, 1, eta);
    const ConstraintEval approx = constraint_eval(problem, z, omega_t, 0.0);
    Lemma1Row row;
    row.T = T;
    row.measured = (approx.grad_q_tilde - exact.grad_q).norm();
    row.bound = lip * std::pow(decay, T) * init_dist;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace forum
