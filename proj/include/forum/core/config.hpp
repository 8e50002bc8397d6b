#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "forum/core/errors.hpp"

namespace forum {

// Settings for the per-iteration dual subproblem solver.
struct QpConfig {
  int max_iters = 1000;
  double tolerance = 1e-10;  // on the projected-gradient-mapping norm
  double grad_floor = 1e-12; // ||grad q|| below this counts as zero

  void validate() const {
    if (max_iters < 1) throw ConfigError("qp.max_iters must be >= 1");
    if (tolerance <= 0) throw ConfigError("qp.tolerance must be > 0");
    if (grad_floor < 0) throw ConfigError("qp.grad_floor must be >= 0");
  }
};

// The weight on the new QP solution at iteration k is
// beta_k = (k+1)^(-exponent): equal to 1 at k = 0 and decaying to 0.
inline double beta_schedule(std::int64_t k, double exponent) {
  return std::pow(static_cast<double>(k) + 1.0, -exponent);
}

// Optional early-exit thresholds. A run converges once both the KKT
// measure and the exact constraint value drop below metric_tol; it stalls
// after stall_window consecutive iterations with a direction norm below
// stall_tol and no convergence.
struct StoppingTolerances {
  double metric_tol = 1e-6;
  double stall_tol = 1e-12;
  int stall_window = 50;

  void validate() const {
    if (metric_tol < 0 || stall_tol < 0)
      throw ConfigError("stopping tolerances must be >= 0");
    if (stall_window < 1) throw ConfigError("stall_window must be >= 1");
  }
};

struct ForumConfig {
  int K = 100;               // upper-level iterations
  int T = 10;                // lower-level gradient steps per iteration
  double mu = 0.1;           // upper-level step size
  double eta = 0.1;          // lower-level step size
  double rho = 0.5;          // constraint-margin constant, phi_k = rho/2 ||grad q~||^2
  double beta_exponent = 0.75;
  bool warm_start = true;    // lower-level init: omega_k if true, the run's omega_0 if false
  // Distinct step sizes (mu_alpha, mu_omega) for the two blocks of z;
  // unset means the single mu applies to all of z.
  std::optional<std::pair<double, double>> per_block_steps;
  std::uint64_t seed = 0;
  QpConfig qp;

  // Metric bookkeeping (not part of the update rule). metric_stride 0
  // disables per-iteration metrics; s > 0 evaluates them every s-th
  // iteration and at the final point. When a problem has no exact
  // lower-level solution, metric gradients use metric_ll_factor * T
  // extra descent steps and are flagged approximate.
  int metric_stride = 1;
  int metric_ll_factor = 10;

  // Early exit is off by default: the algorithm runs a fixed K.
  std::optional<StoppingTolerances> early_stop;

  void validate() const {
    if (K < 0) throw ConfigError("K must be >= 0");
    if (T < 0) throw ConfigError("T must be >= 0");
    if (mu <= 0) throw ConfigError("mu must be > 0");
    if (eta <= 0) throw ConfigError("eta must be > 0");
    if (rho < 0) throw ConfigError("rho must be >= 0");
    if (!(beta_exponent > 0.0) || beta_exponent > 1.0)
      throw ConfigError("beta_exponent must lie in (0, 1]");
    if (per_block_steps) {
      if (per_block_steps->first < 0 || per_block_steps->second < 0)
        throw ConfigError("per_block_steps entries must be >= 0");
    }
    if (metric_stride < 0) throw ConfigError("metric_stride must be >= 0");
    if (metric_ll_factor < 1) throw ConfigError("metric_ll_factor must be >= 1");
    if (early_stop) early_stop->validate();
    qp.validate();
  }
};

}  // namespace forum
