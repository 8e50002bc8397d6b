#pragma once

// Test-side oracles, kept independent of the library code they check:
// central finite differences, brute-force simplex grids for the dual
// weight problem and for Euclidean projection. Everything here works from
// raw vectors with its own arithmetic.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace oracles {

using Vector = Eigen::VectorXd;

inline double central_diff(const std::function<double(const Vector&)>& f,
                           Vector x, Eigen::Index i, double h = 1e-5) {
  const double xi = x[i];
  x[i] = xi + h;
  const double up = f(x);
  x[i] = xi - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = central_diff(f, x, i, h);
  return g;
}

// Dual objective of the direction subproblem, written out directly from
// the gradient vectors:
//   nu(lambda) = max(sum_i lambda_i (2 phi - <gq, gF_i>) / ||gq||^2, 0)
//   h(lambda)  = 1/2 || sum_i lambda_i gF_i + nu gq ||^2 - nu phi
// with nu = 0 when gq vanishes.
inline double dual_objective(const std::vector<Vector>& grads_F,
                             const Vector& grad_q, double phi,
                             const Vector& lambda) {
  const double s = grad_q.squaredNorm();
  double nu = 0.0;
  if (s > 1e-24) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      acc += lambda[i] * (2.0 * phi - grad_q.dot(grads_F[i])) / s;
    nu = acc > 0.0 ? acc : 0.0;
  }
  Vector combo = nu * grad_q;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    combo += lambda[i] * grads_F[i];
  return 0.5 * combo.squaredNorm() - nu * phi;
}

// Brute-force minimum of the dual objective over the simplex: a coarse
// grid pass followed by one local refinement around the best point.
// Supports m in {1, 2, 3}.
struct GridMinimum {
  Vector lambda;
  double value = std::numeric_limits<double>::infinity();
};

inline GridMinimum grid_dual_minimum(const std::vector<Vector>& grads_F,
                                     const Vector& grad_q, double phi,
                                     double resolution = 1e-3) {
  const int m = static_cast<int>(grads_F.size());
  GridMinimum best;

  auto consider = [&](const Vector& lambda) {
    const double v = dual_objective(grads_F, grad_q, phi, lambda);
    if (v < best.value) {
      best.value = v;
      best.lambda = lambda;
    }
  };

  auto sweep = [&](double lo1, double hi1, double lo2, double hi2, double step) {
    if (m == 1) {
      consider(Vector::Ones(1));
      return;
    }
    if (m == 2) {
      for (double a = lo1; a <= hi1 + 0.5 * step; a += step) {
        const double l1 = std::min(std::max(a, 0.0), 1.0);
        Vector lambda(2);
        lambda << l1, 1.0 - l1;
        consider(lambda);
      }
      return;
    }
    for (double a = lo1; a <= hi1 + 0.5 * step; a += step) {
      const double l1 = std::min(std::max(a, 0.0), 1.0);
      for (double b = lo2; b <= hi2 + 0.5 * step; b += step) {
        const double l2 = std::min(std::max(b, 0.0), 1.0 - l1);
        Vector lambda(3);
        lambda << l1, l2, 1.0 - l1 - l2;
        consider(lambda);
      }
    }
  };

  sweep(0.0, 1.0, 0.0, 1.0, resolution);
  if (m >= 2) {
    const double l1 = best.lambda[0];
    const double l2 = m == 3 ? best.lambda[1] : 0.0;
    sweep(l1 - resolution, l1 + resolution, l2 - resolution, l2 + resolution,
          resolution * 1e-2);
  }
  return best;
}

// Brute-force Euclidean projection onto the simplex via a dense grid.
inline Vector grid_simplex_projection(const Vector& v, double resolution = 1e-4) {
  const int m = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector& lambda) {
    const double d = (lambda - v).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = lambda;
    }
  };
  if (m == 2) {
    for (double a = 0.0; a <= 1.0 + 0.5 * resolution; a += resolution) {
      Vector lambda(2);
      lambda << std::min(a, 1.0), 1.0 - std::min(a, 1.0);
      consider(lambda);
    }
  } else if (m == 3) {
    for (double a = 0.0; a <= 1.0 + 0.5 * resolution; a += resolution) {
      for (double b = 0.0; b + a <= 1.0 + 0.5 * resolution; b += resolution) {
        const double l1 = std::min(a, 1.0);
        const double l2 = std::min(b, 1.0 - l1);
        Vector lambda(3);
        lambda << l1, l2, 1.0 - l1 - l2;
        consider(lambda);
      }
    }
  }
  return best;
}

}  // namespace oracles
