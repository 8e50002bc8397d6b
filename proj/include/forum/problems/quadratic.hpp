#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "forum/core/problem.hpp"
#include "forum/core/rng.hpp"
#include "forum/core/types.hpp"

namespace forum {

// Strongly convex quadratic family for property tests and benchmarks:
//
//   f(a, w)  = ||w - A a - b||^2 + kappa ||w||^2,   kappa >= 0
//   F_i(z)   = ||z - t_i||^2
//
// with closed-form solution w*(a) = (A a + b) / (1 + kappa), Jacobian
// A / (1 + kappa), and analytic Hessian-vector products.
class QuadraticProblem final : public ProblemOracle {
 public:
  QuadraticProblem(Matrix A, Vector b, double kappa, std::vector<Vector> targets)
      : A_(std::move(A)), b_(std::move(b)), kappa_(kappa),
        targets_(std::move(targets)) {
    // Gradient Lipschitz constant over z from the singular values of A:
    // in the SVD basis the Hessian splits into 2x2 blocks
    // [[2 s^2, -2 s], [-2 s, 2(1+kappa)]] plus 2(1+kappa) identity.
    Eigen::BDCSVD<Matrix> svd(A_);
    double lip = 2.0 * (1.0 + kappa_);
    for (Index i = 0; i < svd.singularValues().size(); ++i) {
      const double s2 = svd.singularValues()[i] * svd.singularValues()[i];
      const double mid = s2 + 1.0 + kappa_;
      const double gap = s2 - (1.0 + kappa_);
      lip = std::max(lip, mid + std::sqrt(gap * gap + 4.0 * s2));
    }
    lip_ll_ = lip;
  }

  Dims dims() const override {
    return {A_.cols(), A_.rows(), static_cast<Index>(targets_.size())};
  }
  std::string name() const override { return "random_quadratic"; }

  double ul_value(Index i, const DecisionPoint& z) const override {
    return (z.flat() - targets_[i]).squaredNorm();
  }
  Vector ul_grad(Index i, const DecisionPoint& z) const override {
    return 2.0 * (z.flat() - targets_[i]);
  }

  double ll_value(const DecisionPoint& z) const override {
    const Vector r = z.omega - A_ * z.alpha - b_;
    return r.squaredNorm() + kappa_ * z.omega.squaredNorm();
  }

  Vector ll_grad(const DecisionPoint& z) const override {
    const Vector r = z.omega - A_ * z.alpha - b_;
    Vector g(A_.cols() + A_.rows());
    g.head(A_.cols()) = -2.0 * (A_.transpose() * r);
    g.tail(A_.rows()) = 2.0 * r + 2.0 * kappa_ * z.omega;
    return g;
  }

  bool has_exact_ll_solution() const override { return true; }
  Vector exact_ll_solution(const Vector& alpha) const override {
    return (A_ * alpha + b_) / (1.0 + kappa_);
  }

  bool has_ll_solution_jacobian() const override { return true; }
  Matrix ll_solution_jacobian(const Vector& /*alpha*/) const override {
    return A_ / (1.0 + kappa_);
  }

  bool has_ll_hvp() const override { return true; }
  Vector ll_hvp_ww(const DecisionPoint& /*z*/, const Vector& v) const override {
    return 2.0 * (1.0 + kappa_) * v;
  }
  Vector ll_hvp_aw(const DecisionPoint& /*z*/, const Vector& v) const override {
    return -2.0 * (A_.transpose() * v);
  }

  AssumptionConstants assumption_constants() const override {
    AssumptionConstants c;
    c.lip_ul_grad = 2.0;
    c.strong_convexity = 2.0 * (1.0 + kappa_);
    c.lip_ll_grad = lip_ll_;
    return c;
  }

  double kappa() const { return kappa_; }

 private:
  Matrix A_;
  Vector b_;
  double kappa_;
  std::vector<Vector> targets_;
  double lip_ll_ = 0.0;
};

inline QuadraticProblem random_quadratic(std::uint64_t seed, Index n, Index p,
                                         Index m) {
  Rng rng(seed);
  Matrix A(p, n);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = rng.normal();
  Vector b = rng.normal_vector(p);
  const double kappa = rng.uniform(0.1, 1.0);
  std::vector<Vector> targets;
  targets.reserve(m);
  for (Index i = 0; i < m; ++i) targets.push_back(rng.normal_vector(n + p));
  return QuadraticProblem(std::move(A), std::move(b), kappa, std::move(targets));
}

}  // namespace forum
