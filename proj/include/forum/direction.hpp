#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "forum/core/config.hpp"
#include "forum/core/types.hpp"
#include "forum/core/workspace.hpp"

namespace forum {

// Euclidean projection onto the probability simplex (sort-then-shift).
inline SimplexWeights project_simplex(const Vector& v) {
  const Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  int support = 0;
  for (Index j = 0; j < m; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(j) + 1;
    }
  }
  (void)support;
  Vector out(m);
  for (Index i = 0; i < m; ++i) out[i] = std::max(v[i] - tau, 0.0);
  return SimplexWeights(out);
}

// Inner products of the stacked gradients (grad F_1, ..., grad F_m, grad q~),
// plus the margin phi. Everything the dual subproblem needs is in here, so
// its per-iteration cost depends only on m.
struct GramData {
  Matrix gram;  // (m+1) x (m+1), symmetric PSD
  double phi = 0.0;

  Index m() const { return gram.rows() - 1; }
  double ff(Index i, Index j) const { return gram(i, j); }
  double fq(Index i) const { return gram(i, gram.rows() - 1); }
  double qq() const { return gram(gram.rows() - 1, gram.rows() - 1); }
};

inline GramData build_gram(const std::vector<Vector>& grads_F, const Vector& grad_q,
                           double phi, WorkspaceMeter* meter = nullptr) {
  const Index m = static_cast<Index>(grads_F.size());
  ScopedWorkspace ws(meter, (m + 1) * (m + 1));
  GramData g;
  g.phi = phi;
  g.gram.resize(m + 1, m + 1);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i; j < m; ++j) {
      g.gram(i, j) = g.gram(j, i) = grads_F[i].dot(grads_F[j]);
    }
    g.gram(i, m) = g.gram(m, i) = grads_F[i].dot(grad_q);
  }
  g.gram(m, m) = grad_q.dot(grad_q);
  return g;
}

// Closed-form constraint multiplier for given simplex weights:
//   nu(lambda) = max(sum_i lambda_i pi_i, 0),
//   pi_i = (2 phi - <grad q~, grad F_i>) / ||grad q~||^2.
// When ||grad q~|| < grad_floor the multiplier is defined as 0.
inline double compute_nu(const SimplexWeights& lambda,
                         const std::vector<Vector>& grads_F, const Vector& grad_q,
                         double phi, double grad_floor) {
  const double s = grad_q.squaredNorm();
  if (s < grad_floor * grad_floor) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < lambda.size(); ++i)
    acc += lambda[i] * (2.0 * phi - grad_q.dot(grads_F[i])) / s;
  return std::max(acc, 0.0);
}

struct DualSolution {
  SimplexWeights lambda;
  double dual_objective = 0.0;
  bool exact = false;  // false when the solver hit max_iters above tolerance
  int iterations = 0;
  double grad_map_norm = 0.0;
};

namespace detail {

// Dual objective in lambda with nu substituted:
//   h(lambda) = 1/2 ||sum lambda_i gF_i + nu(lambda) gq||^2 - nu(lambda) phi.
// Piecewise quadratic, convex; the two pieces meet where sum lambda_i pi_i = 0.
struct DualObjective {
  const GramData& g;
  Index m;
  bool constrained;   // false: plain min-norm over the F gradients (nu == 0)
  Vector pi;          // per-objective pi_i, empty when !constrained

  DualObjective(const GramData& gram, double grad_floor)
      : g(gram), m(gram.m()) {
    const double s = g.qq();
    constrained = s >= grad_floor * grad_floor && s > 0.0;
    if (constrained) {
      pi.resize(m);
      for (Index i = 0; i < m; ++i) pi[i] = (2.0 * g.phi - g.fq(i)) / s;
    }
  }

  double nu(const Vector& lambda) const {
    if (!constrained) return 0.0;
    return std::max(pi.dot(lambda), 0.0);
  }

  double value(const Vector& lambda) const {
    double quad = 0.0;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) quad += lambda[i] * lambda[j] * g.ff(i, j);
    if (!constrained) return 0.5 * quad;
    const double v = nu(lambda);
    double cross = 0.0;
    for (Index i = 0; i < m; ++i) cross += lambda[i] * g.fq(i);
    return 0.5 * (quad + 2.0 * v * cross + v * v * g.qq()) - v * g.phi;
  }

  // Subgradient; at the kink the nu = 0 branch is taken (the branches
  // agree in value there).
  Vector gradient(const Vector& lambda) const {
    Vector grad = Vector::Zero(m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) grad[i] += g.ff(i, j) * lambda[j];
    if (!constrained) return grad;
    const double sum_pi = pi.dot(lambda);
    if (sum_pi <= 0.0) return grad;
    for (Index i = 0; i < m; ++i)
      grad[i] += sum_pi * g.fq(i) + g.phi * pi[i];
    return grad;
  }

  // Trace bounds on the branch Hessians give a safe inverse step size.
  double lipschitz_bound() const {
    double tr_a = 0.0;
    for (Index i = 0; i < m; ++i) tr_a += g.ff(i, i);
    if (!constrained) return tr_a;
    double tr_u = 0.0;
    for (Index i = 0; i < m; ++i)
      tr_u += g.ff(i, i) + 2.0 * pi[i] * g.fq(i) + pi[i] * pi[i] * g.qq();
    return std::max(tr_a, tr_u);
  }
};

// Exact minimizer over one face via the KKT system of the equality-
// constrained quadratic  min 1/2 x'Hx + c'x  s.t.  Ex = e. Two rounds of
// iterative refinement recover near-machine accuracy on ill-conditioned
// faces. Returns false when the system is inconsistent (no stationary
// point on the face).
inline bool solve_equality_qp(const Matrix& H, const Vector& c, const Matrix& E,
                              const Vector& e, Vector& x) {
  const Index nv = H.rows();
  const Index nc = E.rows();
  Matrix kkt = Matrix::Zero(nv + nc, nv + nc);
  kkt.topLeftCorner(nv, nv) = H;
  kkt.topRightCorner(nv, nc) = E.transpose();
  kkt.bottomLeftCorner(nc, nv) = E;
  Vector rhs(nv + nc);
  rhs << -c, e;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
  Vector sol = cod.solve(rhs);
  for (int round = 0; round < 2; ++round)
    sol += cod.solve(rhs - kkt * sol);
  const double scale = std::max(1.0, rhs.norm());
  if ((kkt * sol - rhs).norm() > 1e-8 * scale) return false;
  x = sol.head(nv);
  return true;
}

// Enumerates the faces of the simplex and, per face, the three active-set
// cases of the (lambda, gamma) program: gamma = 0, gamma = pi'lambda
// substituted, and the kink gamma = pi'lambda = 0. Every candidate is
// projected back onto the simplex and scored with the true objective, so
// the best candidate is the exact minimizer up to linear-solve precision.
inline void enumerate_faces(const DualObjective& h, Vector& best,
                            double& best_value) {
  const Index m = h.m;
  Matrix A(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) A(i, j) = h.g.ff(i, j);

  std::vector<Index> face;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    face.clear();
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) face.push_back(i);
    const Index f = static_cast<Index>(face.size());

    Matrix Af(f, f);
    for (Index a = 0; a < f; ++a)
      for (Index b = 0; b < f; ++b) Af(a, b) = A(face[a], face[b]);
    Matrix ones_row = Matrix::Ones(1, f);

    auto consider = [&](const Vector& lambda_face) {
      Vector full = Vector::Zero(m);
      for (Index a = 0; a < f; ++a) full[face[a]] = lambda_face[a];
      const Vector lambda = project_simplex(full).lambda;
      const double value = h.value(lambda);
      if (value < best_value) {
        best_value = value;
        best = lambda;
      }
    };

    Vector x;
    // nu = 0 branch.
    if (solve_equality_qp(Af, Vector::Zero(f), ones_row, Vector::Ones(1), x))
      consider(x);

    if (!h.constrained) continue;

    Vector pi_f(f), b_f(f);
    for (Index a = 0; a < f; ++a) {
      pi_f[a] = h.pi[face[a]];
      b_f[a] = h.g.fq(face[a]);
    }
    // nu = pi'lambda substituted into the objective.
    Matrix Hf = Af + pi_f * b_f.transpose() + b_f * pi_f.transpose() +
                h.g.qq() * pi_f * pi_f.transpose();
    if (solve_equality_qp(Hf, (-h.g.phi) * pi_f, ones_row, Vector::Ones(1), x))
      consider(x);
    // Kink: pi'lambda = 0 as a second equality.
    Matrix E(2, f);
    E.row(0).setOnes();
    E.row(1) = pi_f.transpose();
    Vector e(2);
    e << 1.0, 0.0;
    if (solve_equality_qp(Af, Vector::Zero(f), E, e, x)) consider(x);
  }
}

inline constexpr Index kFaceEnumerationLimit = 8;

inline DualSolution minimize_dual(const GramData& gram, const QpConfig& qp) {
  const Index m = gram.m();
  DualObjective h(gram, qp.grad_floor);

  DualSolution out;
  if (m == 1) {
    out.lambda = SimplexWeights(Vector::Ones(1));
    out.dual_objective = h.value(out.lambda.lambda);
    out.exact = true;
    return out;
  }

  Vector lambda = SimplexWeights::uniform(m).lambda;
  const double lip = h.lipschitz_bound();
  if (!(lip > 0.0)) {  // all gradients vanish: objective is identically 0
    out.lambda = SimplexWeights(lambda);
    out.dual_objective = 0.0;
    out.exact = true;
    return out;
  }

  // Projected (sub)gradient descent from the uniform point; ties at the
  // kink take the nu = 0 branch.
  const double step = 1.0 / lip;
  Vector best = lambda;
  double best_value = h.value(lambda);
  bool converged = false;
  int iters = 0;
  double map_norm = 0.0;
  for (; iters < qp.max_iters; ++iters) {
    const Vector next = project_simplex(lambda - step * h.gradient(lambda)).lambda;
    map_norm = (lambda - next).norm() / step;
    lambda = next;
    const double value = h.value(lambda);
    if (value < best_value) {
      best_value = value;
      best = lambda;
    }
    if (map_norm <= qp.tolerance) {
      converged = true;
      ++iters;
      break;
    }
  }

  // The constant-step subgradient iteration can stall above tolerance when
  // the minimizer sits exactly on the kink, so refine with a closed-form
  // active-set enumeration (exact for modest m).
  bool enumerated = false;
  if (m <= kFaceEnumerationLimit) {
    enumerate_faces(h, best, best_value);
    enumerated = true;
  }

  out.lambda = SimplexWeights(best);
  out.dual_objective = best_value;
  out.exact = converged || enumerated;
  out.iterations = iters;
  out.grad_map_norm = map_norm;
  return out;
}

}  // namespace detail

// Solves the dual weight problem
//   min_{lambda in simplex} 1/2 ||sum_i lambda_i grad F_i + nu(lambda) grad q~||^2
//                           - nu(lambda) phi
// with nu(lambda) in closed form. When ||grad q~|| < grad_floor this
// degenerates to the min-norm (MGDA) problem over the F gradients.
inline DualSolution solve_dual_qp(const std::vector<Vector>& grads_F,
                                  const Vector& grad_q, double phi,
                                  const QpConfig& qp,
                                  WorkspaceMeter* meter = nullptr) {
  const GramData gram = build_gram(grads_F, grad_q, phi, meter);
  return detail::minimize_dual(gram, qp);
}

inline DualSolution solve_dual_qp(const GramData& gram, const QpConfig& qp) {
  return detail::minimize_dual(gram, qp);
}

// Momentum smoothing of the weight sequence:
//   lambda~^k = (1 - beta_k) lambda~^{k-1} + beta_k lambda^k.
// A convex combination, so the simplex is preserved and
// ||lambda~^k - lambda~^{k-1}||_1 <= 2 beta_k.
inline SimplexWeights momentum_update(const SimplexWeights& lambda_prev,
                                      const SimplexWeights& lambda_k, double beta_k) {
  return SimplexWeights((1.0 - beta_k) * lambda_prev.lambda +
                        beta_k * lambda_k.lambda);
}

// The update direction d = -(sum_i lambda_i grad F_i + nu grad q~) with its
// diagnostics. constraint_slack = -phi - <grad q~, d> is nonnegative by
// construction of nu (it equals phi on the active branch).
struct DirectionSolution {
  SimplexWeights lambda;
  double nu = 0.0;
  Vector direction;
  double dual_objective = 0.0;
  double constraint_slack = 0.0;
};

inline DirectionSolution assemble_direction(const SimplexWeights& lambda,
                                            const std::vector<Vector>& grads_F,
                                            const Vector& grad_q, double phi,
                                            double grad_floor,
                                            WorkspaceMeter* meter = nullptr) {
  const Index dim = grad_q.size();
  ScopedWorkspace ws(meter, dim);
  DirectionSolution out;
  out.lambda = lambda;
  out.nu = compute_nu(lambda, grads_F, grad_q, phi, grad_floor);
  Vector combo = Vector::Zero(dim);
  for (Index i = 0; i < lambda.size(); ++i) combo += lambda[i] * grads_F[i];
  combo += out.nu * grad_q;
  out.direction = -combo;
  out.dual_objective = 0.5 * combo.squaredNorm() - out.nu * phi;
  out.constraint_slack = -phi - grad_q.dot(out.direction);
  return out;
}

struct MgdaResult {
  SimplexWeights lambda;
  Vector direction;
  bool exact = false;
};

// Min-norm element of the convex hull of the given gradients, negated:
// the classic common-descent direction. Solved by the same dual routine
// with the constraint gradient absent.
inline MgdaResult mgda_direction(const std::vector<Vector>& grads,
                                 const QpConfig& qp,
                                 WorkspaceMeter* meter = nullptr) {
  const Index dim = grads.empty() ? 0 : grads.front().size();
  const Vector no_constraint = Vector::Zero(dim);
  const DualSolution dual = solve_dual_qp(grads, no_constraint, 0.0, qp, meter);
  MgdaResult out;
  out.lambda = dual.lambda;
  out.exact = dual.exact;
  out.direction = Vector::Zero(dim);
  for (Index i = 0; i < out.lambda.size(); ++i)
    out.direction -= out.lambda[i] * grads[i];
  return out;
}

}  // namespace forum
