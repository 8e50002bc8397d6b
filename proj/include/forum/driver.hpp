#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forum/core/config.hpp"
#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/types.hpp"
#include "forum/core/workspace.hpp"
#include "forum/direction.hpp"
#include "forum/lower_level.hpp"

namespace forum {

// One trace row. Metric fields are empty when the problem cannot supply
// them (or metrics are disabled); approx_metrics marks rows whose exact
// constraint was estimated with extra lower-level steps instead of a
// closed-form solution.
struct IterateRecord {
  std::int64_t k = 0;
  Vector F_values;
  std::optional<double> q_tilde;
  std::optional<double> q_exact;
  std::optional<double> kkt_residual;
  std::optional<double> optimality_gap;
  SimplexWeights lambda_tilde;
  std::optional<double> nu;
  double direction_norm = 0.0;
  double wall_time_seconds = 0.0;
  std::int64_t workspace_floats = 0;
  bool approx_metrics = false;
};

// Squared norm of the weighted stationarity residual
//   || sum_i lambda_i grad F_i + nu grad q ||^2,
// the KKT measure of the constrained reformulation.
inline double kkt_residual(const SimplexWeights& lambda_tilde, double nu,
                           const std::vector<Vector>& grads_F,
                           const Vector& grad_q_exact) {
  Vector resid = nu * grad_q_exact;
  for (Index i = 0; i < lambda_tilde.size(); ++i)
    resid += lambda_tilde[i] * grads_F[i];
  return resid.squaredNorm();
}

enum class StepVerdict { kContinue, kConverged, kStalled };

inline const char* to_string(StepVerdict v) {
  switch (v) {
    case StepVerdict::kConverged: return "converged";
    case StepVerdict::kStalled: return "stalled";
    default: return "continue";
  }
}

// Early-exit decision for one record. Converged once both the KKT measure
// and the exact constraint are available and below metric_tol; stalled
// after stall_window consecutive records with direction_norm < stall_tol
// and no convergence. consecutive_stalled is caller-held fold state.
inline StepVerdict stopping_check(const IterateRecord& record,
                                  const StoppingTolerances& tols,
                                  int& consecutive_stalled) {
  if (record.kkt_residual && record.q_exact &&
      *record.kkt_residual < tols.metric_tol &&
      *record.q_exact < tols.metric_tol)
    return StepVerdict::kConverged;
  if (record.direction_norm < tols.stall_tol) {
    if (++consecutive_stalled >= tols.stall_window)
      return StepVerdict::kStalled;
  } else {
    consecutive_stalled = 0;
  }
  return StepVerdict::kContinue;
}

class StoppingMonitor {
 public:
  explicit StoppingMonitor(StoppingTolerances tols) : tols_(tols) {}

  StepVerdict observe(const IterateRecord& record) {
    return stopping_check(record, tols_, consecutive_stalled_);
  }

 private:
  StoppingTolerances tols_;
  int consecutive_stalled_ = 0;
};

// Everything one iteration produces, before metrics are attached.
struct StepResult {
  DecisionPoint z_next;
  SimplexWeights lambda_tilde;
  IterateRecord record;
  ConstraintEval constraint;
  std::vector<Vector> grads_F;
  DualSolution dual;
  DirectionSolution dir;
};

// One iteration at z_k: lower-level solve (warm start from z.omega or cold
// from omega_cold), constraint evaluation, all m upper-level gradients, the
// dual weight problem, momentum smoothing, nu and the direction, then the
// z update (per-block step sizes when configured). Throws DivergenceError
// if z_{k+1} is non-finite.
inline StepResult forum_step(const ProblemOracle& problem, const DecisionPoint& z,
                             const SimplexWeights& lambda_tilde_prev,
                             std::int64_t k, const ForumConfig& config,
                             const Vector& omega_cold,
                             WorkspaceMeter* meter = nullptr) {
  const Dims d = problem.dims();
  StepResult out;

  const Vector& omega_init = config.warm_start ? z.omega : omega_cold;
  const Vector omega_T =
      solve_ll(problem, z.alpha, omega_init, config.T, config.eta, meter);
  out.constraint = constraint_eval(problem, z, omega_T, config.rho, meter);

  ScopedWorkspace grads_ws(meter, d.m * (d.n + d.p));
  out.grads_F.reserve(d.m);
  for (Index i = 0; i < d.m; ++i) out.grads_F.push_back(problem.ul_grad(i, z));

  out.dual = solve_dual_qp(out.grads_F, out.constraint.grad_q_tilde,
                           out.constraint.phi, config.qp, meter);
  const double beta_k = beta_schedule(k, config.beta_exponent);
  out.lambda_tilde = momentum_update(lambda_tilde_prev, out.dual.lambda, beta_k);
  out.dir = assemble_direction(out.lambda_tilde, out.grads_F,
                               out.constraint.grad_q_tilde, out.constraint.phi,
                               config.qp.grad_floor, meter);

  out.z_next = z;
  if (config.per_block_steps) {
    out.z_next.alpha += config.per_block_steps->first * out.dir.direction.head(d.n);
    out.z_next.omega += config.per_block_steps->second * out.dir.direction.tail(d.p);
  } else {
    out.z_next.alpha += config.mu * out.dir.direction.head(d.n);
    out.z_next.omega += config.mu * out.dir.direction.tail(d.p);
  }

  out.record.k = k;
  out.record.F_values.resize(d.m);
  for (Index i = 0; i < d.m; ++i) out.record.F_values[i] = problem.ul_value(i, z);
  out.record.q_tilde = out.constraint.q_tilde;
  out.record.lambda_tilde = out.lambda_tilde;
  out.record.nu = out.dir.nu;
  out.record.direction_norm = out.dir.direction.norm();

  if (!out.z_next.all_finite())
    throw DivergenceError("iterate z became non-finite", k);
  return out;
}

struct RunResult {
  std::vector<IterateRecord> trace;
  DecisionPoint final_point;
  StepVerdict verdict = StepVerdict::kContinue;
  bool diverged = false;
  bool completed_all_iterations = false;
  std::int64_t steps_executed = 0;  // z updates applied
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  double max_q_exact = 0.0;  // post-hoc check of the boundedness assumption
};

// Distance-to-optimum hook; the harness wires a problem-specific gap
// (e.g. distance to a known Pareto set) when one exists.
using OptimalityGap = std::function<double(const DecisionPoint&)>;

namespace detail {

struct MetricEval {
  std::optional<double> q;
  std::optional<double> kkt;
  bool approximate = false;
};

inline MetricEval eval_exact_metrics(const ProblemOracle& problem,
                                     const DecisionPoint& z,
                                     const StepResult& step,
                                     const ForumConfig& config) {
  MetricEval out;
  if (problem.has_exact_ll_solution()) {
    const ExactConstraint exact = exact_constraint(problem, z);
    out.q = exact.q;
    out.kkt = kkt_residual(step.lambda_tilde, step.dir.nu, step.grads_F,
                           exact.grad_q);
    return out;
  }
  // No closed form: refine the step's T-step iterate with
  // metric_ll_factor * T extra descent steps.
  const int extra = config.metric_ll_factor * std::max(config.T, 1);
  const Vector omega_eval =
      solve_ll(problem, z.alpha, step.constraint.omega_T, extra, config.eta);
  const ConstraintEval refined = constraint_eval(problem, z, omega_eval, 0.0);
  out.q = refined.q_tilde;
  out.kkt = kkt_residual(step.lambda_tilde, step.dir.nu, step.grads_F,
                         refined.grad_q_tilde);
  out.approximate = true;
  return out;
}

}  // namespace detail

// Runs K iterations from z_0 and appends a terminal metrics row evaluated
// at z_K (its direction is computed but not applied). Deterministic given
// (problem, z_0, config); per-row wall time covers the update computation
// only, never the metric bookkeeping.
inline RunResult run_forum(const ProblemOracle& problem, const DecisionPoint& z0,
                           const ForumConfig& config,
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
  ScopedWorkspace state_ws(meter, (d.n + d.p) + d.p + d.m);  // z, cold init, weights

  const Vector omega_cold = z0.omega;
  DecisionPoint z = z0;
  SimplexWeights lambda_tilde = SimplexWeights::uniform(d.m);
  StoppingMonitor monitor(config.early_stop.value_or(StoppingTolerances{}));
  bool warned_negative_q = false;

  const bool metrics_on = config.metric_stride > 0;
  using clock = std::chrono::steady_clock;

  for (std::int64_t k = 0; k <= config.K; ++k) {
    const bool terminal = (k == config.K);
    meter->mark();
    const auto t0 = clock::now();
    StepResult step;
    try {
      step = forum_step(problem, z, lambda_tilde, k, config, omega_cold, meter);
    } catch (const DivergenceError& err) {
      result.diverged = true;
      result.warnings.push_back(std::string("diverged at iteration ") +
                                std::to_string(k) + ": " + err.what());
      return result;
    }
    const auto t1 = clock::now();
    step.record.wall_time_seconds =
        std::chrono::duration<double>(t1 - t0).count();
    step.record.workspace_floats = meter->peak();

    if (step.constraint.q_tilde < -1e-9 && !warned_negative_q) {
      warned_negative_q = true;
      result.warnings.push_back(
          "q_tilde fell below -1e-9 at iteration " + std::to_string(k) +
          " (value " + std::to_string(step.constraint.q_tilde) +
          "); lower-level descent may be diverging");
    }

    const bool want_metrics =
        metrics_on && (terminal || k % config.metric_stride == 0);
    if (want_metrics) {
      const detail::MetricEval metrics =
          detail::eval_exact_metrics(problem, z, step, config);
      step.record.q_exact = metrics.q;
      step.record.kkt_residual = metrics.kkt;
      step.record.approx_metrics = metrics.approximate;
      if (gap_fn) step.record.optimality_gap = gap_fn(z);
      if (metrics.q) result.max_q_exact = std::max(result.max_q_exact, *metrics.q);
    }

    result.trace.push_back(std::move(step.record));
    if (terminal) break;

    z = step.z_next;
    lambda_tilde = step.lambda_tilde;
    result.final_point = z;
    result.steps_executed = k + 1;

    if (config.early_stop) {
      const StepVerdict verdict = monitor.observe(result.trace.back());
      if (verdict != StepVerdict::kContinue) {
        result.verdict = verdict;
        return result;
      }
    }
  }

  result.completed_all_iterations = true;
  return result;
}

}  // namespace forum
