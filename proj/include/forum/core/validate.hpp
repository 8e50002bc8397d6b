#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/rng.hpp"
#include "forum/core/types.hpp"

namespace forum {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double worst_error = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::string problem;
  std::vector<ValidationCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.passed; });
  }
};

namespace detail {

// Central finite difference of a scalar function along coordinate i.
template <typename F>
double central_diff(F&& f, Vector x, Index i, double h) {
  const double xi = x[i];
  x[i] = xi + h;
  const double up = f(x);
  x[i] = xi - h;
  const double down = f(x);
  x[i] = xi;
  return (up - down) / (2.0 * h);
}

inline void require_length(const std::string& oracle, const Vector& v, Index want) {
  if (v.size() != want)
    throw StructuralError(oracle + " returned length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(want));
}

}  // namespace detail

// Diagnostic checks of an oracle bundle at seeded random points:
// shape consistency, gradient finiteness, central-finite-difference
// agreement (step 1e-5, relative tolerance 1e-4), lower-level
// stationarity at the exact solution when provided (tolerance 1e-8),
// and Hessian-vector-product symmetry when provided.
inline ValidationReport validate_problem(const ProblemOracle& problem,
                                         int samples, std::uint64_t seed) {
  const Dims dims = problem.dims();
  if (!dims.valid())
    throw StructuralError(problem.name() + ": dims() must satisfy n,p,m >= 1");

  Rng rng(seed);
  const double fd_step = 1e-5;
  const double fd_rtol = 1e-4;

  ValidationReport report;
  report.problem = problem.name();

  ValidationCheck finite{"gradient_finiteness", true, 0.0, ""};
  ValidationCheck fd_ul{"ul_grad_finite_difference", true, 0.0, ""};
  ValidationCheck fd_ll{"ll_grad_finite_difference", true, 0.0, ""};
  ValidationCheck stationarity{"ll_stationarity_at_exact_solution", true, 0.0, ""};
  ValidationCheck hvp_sym{"hvp_symmetry", true, 0.0, ""};

  const bool has_exact = problem.has_exact_ll_solution();
  const bool has_hvp = problem.has_ll_hvp();

  auto ll_at = [&](const Vector& zflat) {
    return problem.ll_value(DecisionPoint::from_flat(dims.n, dims.p, zflat));
  };

  for (int s = 0; s < samples; ++s) {
    DecisionPoint z(rng.normal_vector(dims.n), rng.normal_vector(dims.p));
    const Vector zflat = z.flat();

    const Vector gll = problem.ll_grad(z);
    detail::require_length("ll_grad", gll, dims.n + dims.p);
    if (!gll.allFinite() || !std::isfinite(problem.ll_value(z))) {
      finite.passed = false;
      finite.detail = "non-finite ll oracle output";
    }

    for (Index i = 0; i < dims.n + dims.p; ++i) {
      const double fd = detail::central_diff(ll_at, zflat, i, fd_step);
      const double err = std::abs(fd - gll[i]);
      const double scale = std::max(1.0, gll.cwiseAbs().maxCoeff());
      fd_ll.worst_error = std::max(fd_ll.worst_error, err / scale);
    }

    for (Index obj = 0; obj < dims.m; ++obj) {
      const Vector gul = problem.ul_grad(obj, z);
      detail::require_length("ul_grad", gul, dims.n + dims.p);
      if (!gul.allFinite() || !std::isfinite(problem.ul_value(obj, z))) {
        finite.passed = false;
        finite.detail = "non-finite ul oracle output (objective " +
                        std::to_string(obj) + ")";
      }
      auto ul_at = [&](const Vector& zf) {
        return problem.ul_value(obj, DecisionPoint::from_flat(dims.n, dims.p, zf));
      };
      for (Index i = 0; i < dims.n + dims.p; ++i) {
        const double fd = detail::central_diff(ul_at, zflat, i, fd_step);
        const double err = std::abs(fd - gul[i]);
        const double scale = std::max(1.0, gul.cwiseAbs().maxCoeff());
        fd_ul.worst_error = std::max(fd_ul.worst_error, err / scale);
      }
    }

    if (has_exact) {
      const Vector omega_star = problem.exact_ll_solution(z.alpha);
      detail::require_length("exact_ll_solution", omega_star, dims.p);
      DecisionPoint at_opt(z.alpha, omega_star);
      const double resid = problem.ll_grad(at_opt).tail(dims.p).norm();
      stationarity.worst_error = std::max(stationarity.worst_error, resid);
    }

    if (has_hvp) {
      const Vector u = rng.normal_vector(dims.p);
      const Vector v = rng.normal_vector(dims.p);
      const Vector hu = problem.ll_hvp_ww(z, u);
      detail::require_length("ll_hvp_ww", hu, dims.p);
      const Vector hv = problem.ll_hvp_ww(z, v);
      const double lhs = v.dot(hu);
      const double rhs = u.dot(hv);
      const double scale = std::max(1.0, std::max(std::abs(lhs), std::abs(rhs)));
      hvp_sym.worst_error = std::max(hvp_sym.worst_error, std::abs(lhs - rhs) / scale);
      detail::require_length("ll_hvp_aw", problem.ll_hvp_aw(z, v), dims.n);
    }
  }

  fd_ul.passed = fd_ul.worst_error <= fd_rtol;
  fd_ll.passed = fd_ll.worst_error <= fd_rtol;
  stationarity.passed = stationarity.worst_error <= 1e-8;
  hvp_sym.passed = hvp_sym.worst_error <= 1e-10;
  if (!has_exact) stationarity.detail = "skipped: no exact_ll_solution";
  if (!has_hvp) hvp_sym.detail = "skipped: no hvp oracles";

  report.checks = {finite, fd_ul, fd_ll, stationarity, hvp_sym};
  return report;
}

}  // namespace forum
