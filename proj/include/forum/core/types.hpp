#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <utility>

namespace forum {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Problem dimensions: n upper-level variables, p lower-level variables,
// m upper-level objectives.
struct Dims {
  Index n = 0;
  Index p = 0;
  Index m = 0;

  bool valid() const { return n >= 1 && p >= 1 && m >= 1; }
};

// Joint decision variable z = (alpha, omega). The two blocks are stored
// separately; flat() concatenates them (alpha first) when a single vector
// is needed.
struct DecisionPoint {
  Vector alpha;
  Vector omega;

  DecisionPoint() = default;
  DecisionPoint(Vector a, Vector w) : alpha(std::move(a)), omega(std::move(w)) {}

  Index n() const { return alpha.size(); }
  Index p() const { return omega.size(); }

  Vector flat() const {
    Vector z(alpha.size() + omega.size());
    z << alpha, omega;
    return z;
  }

  static DecisionPoint from_flat(Index n, Index p, const Vector& z) {
    return DecisionPoint(z.head(n), z.tail(p));
  }

  bool all_finite() const { return alpha.allFinite() && omega.allFinite(); }
};

// A point on the probability simplex: entries >= 0 (tolerance 1e-12 after
// projection), summing to 1 within 1e-10.
struct SimplexWeights {
  Vector lambda;

  SimplexWeights() = default;
  explicit SimplexWeights(Vector v) : lambda(std::move(v)) {}

  Index size() const { return lambda.size(); }
  double operator[](Index i) const { return lambda[i]; }

  static SimplexWeights uniform(Index m) {
    return SimplexWeights(Vector::Constant(m, 1.0 / static_cast<double>(m)));
  }

  bool on_simplex(double nonneg_tol = 1e-12, double sum_tol = 1e-10) const {
    if (lambda.size() == 0) return false;
    if (lambda.minCoeff() < -nonneg_tol) return false;
    return std::abs(lambda.sum() - 1.0) <= sum_tol;
  }
};

// Regularity constants of a problem, when analytically known. lip_ul_grad
// and ul_bound describe the upper-level gradients (Lipschitz constant and
// a bound on |F_i|, ||grad F_i||); strong_convexity is the modulus of the
// lower-level objective in omega; lip_ll_grad is the Lipschitz constant of
// the full lower-level gradient with respect to z.
struct AssumptionConstants {
  std::optional<double> lip_ul_grad;      // L_F
  std::optional<double> ul_bound;         // M
  std::optional<double> strong_convexity; // c
  std::optional<double> lip_ll_grad;      // L_f
};

}  // namespace forum
