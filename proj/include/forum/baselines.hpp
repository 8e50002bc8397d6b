#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "forum/core/config.hpp"
#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/types.hpp"
#include "forum/core/workspace.hpp"
#include "forum/direction.hpp"
#include "forum/driver.hpp"
#include "forum/lower_level.hpp"

namespace forum {

// Total derivatives dF_i(alpha, omega(alpha)) / d alpha, one per objective.
struct Hypergradients {
  std::vector<Vector> per_objective;  // each of length n
};

// Hypergradients through the exact lower-level solution map:
//   dF_i/dalpha = grad_alpha F_i(alpha, w*) + J' grad_omega F_i(alpha, w*),
// J = d w*(alpha) / d alpha. Needs the exact solution and its Jacobian.
inline Hypergradients exact_hypergradients(const ProblemOracle& problem,
                                           const Vector& alpha,
                                           WorkspaceMeter* meter = nullptr) {
  if (!problem.has_exact_ll_solution() || !problem.has_ll_solution_jacobian())
    throw CapabilityError(problem.name() +
                          ": exact hypergradients need exact_ll_solution and "
                          "ll_solution_jacobian");
  const Dims d = problem.dims();
  ScopedWorkspace ws(meter, d.p * d.n + d.m * d.n);
  const Vector omega_star = problem.exact_ll_solution(alpha);
  const Matrix jac = problem.ll_solution_jacobian(alpha);
  const DecisionPoint z(alpha, omega_star);
  Hypergradients out;
  out.per_objective.reserve(d.m);
  for (Index i = 0; i < d.m; ++i) {
    const Vector g = problem.ul_grad(i, z);
    out.per_objective.push_back(g.head(d.n) + jac.transpose() * g.tail(d.p));
  }
  return out;
}

// Hypergradients by reverse accumulation through T gradient-descent steps
// (iterative differentiation). The forward trajectory of T+1 iterates is
// stored, which is what makes this baseline's memory grow with T; the
// backward sweep applies the step Jacobians
//   d w^{t+1}/d w^t   = I - eta * H_ww(alpha, w^t)
//   d w^{t+1}/d alpha = -eta * H_wa(alpha, w^t)
// as Hessian-vector products in reverse order.
inline Hypergradients unrolled_hypergradients(const ProblemOracle& problem,
                                              const Vector& alpha,
                                              const Vector& omega_init, int T,
                                              double eta,
                                              WorkspaceMeter* meter = nullptr) {
  if (!problem.has_ll_hvp())
    throw CapabilityError(problem.name() +
                          ": unrolled hypergradients need hvp oracles");
  const Dims d = problem.dims();
  ScopedWorkspace trajectory_ws(meter, (static_cast<std::int64_t>(T) + 1) * d.p);

  std::vector<Vector> trajectory;
  trajectory.reserve(T + 1);
  trajectory.push_back(omega_init);
  for (int t = 0; t < T; ++t) {
    DecisionPoint z(alpha, trajectory.back());
    const Vector g = problem.ll_grad(z).tail(d.p);
    Vector next = trajectory.back() - eta * g;
    if (!next.allFinite())
      throw DivergenceError("unrolled trajectory became non-finite", t);
    trajectory.push_back(std::move(next));
  }

  ScopedWorkspace reverse_ws(meter, d.m * d.n + d.p);
  const DecisionPoint z_final(alpha, trajectory.back());
  Hypergradients out;
  out.per_objective.reserve(d.m);
  for (Index i = 0; i < d.m; ++i) {
    const Vector g = problem.ul_grad(i, z_final);
    Vector g_alpha = g.head(d.n);
    Vector v = g.tail(d.p);
    for (int t = T - 1; t >= 0; --t) {
      const DecisionPoint zt(alpha, trajectory[t]);
      g_alpha -= eta * problem.ll_hvp_aw(zt, v);
      v -= eta * problem.ll_hvp_ww(zt, v);
    }
    out.per_objective.push_back(std::move(g_alpha));
  }
  return out;
}

struct MomlConfig {
  enum class Mode { kExact, kUnrolled };

  int K = 100;
  int T = 10;       // unrolled mode only
  double mu = 0.1;
  double eta = 0.1; // unrolled mode only
  Mode mode = Mode::kExact;
  bool warm_start = true;
  std::uint64_t seed = 0;
  QpConfig qp;
  int metric_stride = 1;

  void validate() const {
    if (K < 0) throw ConfigError("K must be >= 0");
    if (T < 0) throw ConfigError("T must be >= 0");
    if (mu <= 0) throw ConfigError("mu must be > 0");
    if (eta <= 0) throw ConfigError("eta must be > 0");
    if (metric_stride < 0) throw ConfigError("metric_stride must be >= 0");
    qp.validate();
  }
};

struct MomlStep {
  Vector alpha_next;
  Vector omega_used;  // the lower-level solution the hypergradients saw
  Hypergradients hypergradients;
  MgdaResult mgda;
};

// One ITD baseline step: compute hypergradients (exact or unrolled),
// aggregate them with the min-norm weights, and move alpha along the
// common-descent direction.
inline MomlStep moml_step(const ProblemOracle& problem, const Vector& alpha,
                          const Vector& omega_init, const MomlConfig& config,
                          WorkspaceMeter* meter = nullptr) {
  MomlStep out;
  if (config.mode == MomlConfig::Mode::kExact) {
    if (!problem.has_exact_ll_solution() || !problem.has_ll_solution_jacobian())
      throw CapabilityError(problem.name() +
                            ": moml exact mode needs exact_ll_solution and "
                            "ll_solution_jacobian");
    out.omega_used = problem.exact_ll_solution(alpha);
    out.hypergradients = exact_hypergradients(problem, alpha, meter);
  } else {
    out.omega_used =
        solve_ll(problem, alpha, omega_init, config.T, config.eta, meter);
    out.hypergradients =
        unrolled_hypergradients(problem, alpha, omega_init, config.T,
                                config.eta, meter);
  }
  out.mgda = mgda_direction(out.hypergradients.per_objective, config.qp, meter);
  out.alpha_next = alpha + config.mu * out.mgda.direction;
  if (!out.alpha_next.allFinite())
    throw DivergenceError("moml alpha became non-finite", 0);
  return out;
}

// Runs the ITD baseline for K iterations. Trace rows reuse the common
// record shape: F values and metrics are evaluated at (alpha_k, omega_k)
// where omega_k is the lower-level solution used by the hypergradients;
// kkt_residual holds the squared norm of the min-norm hypergradient
// combination (the Pareto stationarity measure of the reduced problem);
// q_tilde and nu stay empty.
inline RunResult run_moml(const ProblemOracle& problem, const DecisionPoint& z0,
                          const MomlConfig& config,
                          const OptimalityGap& gap_fn = nullptr,
                          WorkspaceMeter* external_meter = nullptr) {
  config.validate();
  const Dims d = problem.dims();
  if (z0.n() != d.n || z0.p() != d.p)
    throw StructuralError("z0 does not match problem dimensions");

  RunResult result;
  result.seed = config.seed;
  result.final_point = z0;
  if (config.K == 0) return result;

  WorkspaceMeter local_meter;
  WorkspaceMeter* meter = external_meter ? external_meter : &local_meter;
  ScopedWorkspace state_ws(meter, d.n + d.p);

  Vector alpha = z0.alpha;
  Vector omega = z0.omega;
  const Vector omega_cold = z0.omega;
  using clock = std::chrono::steady_clock;

  for (std::int64_t k = 0; k <= config.K; ++k) {
    const bool terminal = (k == config.K);
    meter->mark();
    const auto t0 = clock::now();
    MomlStep step;
    try {
      step = moml_step(problem, alpha,
                       config.warm_start ? omega : omega_cold, config, meter);
    } catch (const DivergenceError& err) {
      result.diverged = true;
      result.warnings.push_back(std::string("diverged at iteration ") +
                                std::to_string(k) + ": " + err.what());
      return result;
    }
    const auto t1 = clock::now();

    IterateRecord record;
    record.k = k;
    record.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
    record.workspace_floats = meter->peak();
    record.lambda_tilde = step.mgda.lambda;
    record.direction_norm = step.mgda.direction.norm();

    const DecisionPoint z_eval(alpha, step.omega_used);
    record.F_values.resize(d.m);
    for (Index i = 0; i < d.m; ++i)
      record.F_values[i] = problem.ul_value(i, z_eval);

    const bool want_metrics =
        config.metric_stride > 0 &&
        (terminal || k % config.metric_stride == 0);
    if (want_metrics) {
      record.kkt_residual = step.mgda.direction.squaredNorm();
      if (problem.has_exact_ll_solution())
        record.q_exact = exact_constraint(problem, z_eval).q;
      else
        record.approx_metrics = true;
      if (gap_fn) record.optimality_gap = gap_fn(z_eval);
      if (record.q_exact)
        result.max_q_exact = std::max(result.max_q_exact, *record.q_exact);
    }

    result.trace.push_back(std::move(record));
    result.final_point = DecisionPoint(alpha, step.omega_used);
    if (terminal) break;
    alpha = step.alpha_next;
    omega = step.omega_used;
    result.steps_executed = k + 1;
  }

  result.completed_all_iterations = true;
  return result;
}

}  // namespace forum
