#include <catch2/catch_amalgamated.hpp>

#include "forum/core/rng.hpp"
#include "forum/direction.hpp"
#include "support/oracles.hpp"

using namespace forum;

namespace {

Vector make_vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

std::vector<Vector> random_grads(Rng& rng, Index m, Index dim) {
  std::vector<Vector> g;
  for (Index i = 0; i < m; ++i) g.push_back(rng.normal_vector(dim));
  return g;
}

}  // namespace

TEST_CASE("simplex projection on known points") {
  CHECK(project_simplex(make_vec({0.5, 0.5})).lambda == make_vec({0.5, 0.5}));
  CHECK(project_simplex(make_vec({2.0, 0.0})).lambda == make_vec({1.0, 0.0}));
  const Vector shifted = project_simplex(make_vec({0.6, 0.9})).lambda;
  CHECK(shifted[0] == Catch::Approx(0.35).margin(1e-12));
  CHECK(shifted[1] == Catch::Approx(0.65).margin(1e-12));
  CHECK(project_simplex(make_vec({5.0})).lambda == make_vec({1.0}));
}

TEST_CASE("simplex projection agrees with the grid oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const Vector v2 = 2.0 * rng.normal_vector(2);
    const Vector mine = project_simplex(v2).lambda;
    const Vector grid = oracles::grid_simplex_projection(v2, 1e-4);
    CHECK((mine - grid).cwiseAbs().maxCoeff() < 2e-4);
    CHECK(SimplexWeights(mine).on_simplex());
  }
  for (int trial = 0; trial < 4; ++trial) {
    const Vector v3 = 2.0 * rng.normal_vector(3);
    const Vector mine = project_simplex(v3).lambda;
    const Vector grid = oracles::grid_simplex_projection(v3, 2e-3);
    CHECK((mine - grid).cwiseAbs().maxCoeff() < 4e-3);
    CHECK(SimplexWeights(mine).on_simplex());
  }
}

TEST_CASE("closed-form multiplier on worked examples") {
  const double floor = 1e-12;
  SECTION("positive branch") {
    const std::vector<Vector> grads = {make_vec({1.0, 0.0})};
    const double nu = compute_nu(SimplexWeights(make_vec({1.0})), grads,
                                 make_vec({0.0, 1.0}), 0.25, floor);
    CHECK(nu == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("negative clamp") {
    const std::vector<Vector> grads = {make_vec({0.0, 2.0})};
    const double nu = compute_nu(SimplexWeights(make_vec({1.0})), grads,
                                 make_vec({0.0, 1.0}), 0.25, floor);
    CHECK(nu == 0.0);
  }
  SECTION("degenerate constraint gradient") {
    const std::vector<Vector> grads = {make_vec({1.0, 1.0})};
    const double nu = compute_nu(SimplexWeights(make_vec({1.0})), grads,
                                 make_vec({0.0, 0.0}), 0.25, floor);
    CHECK(nu == 0.0);
  }
}

TEST_CASE("dual qp: singleton simplex") {
  QpConfig qp;
  const std::vector<Vector> grads = {make_vec({1.0, 0.0})};
  const Vector gq = make_vec({0.0, 1.0});
  const DualSolution sol = solve_dual_qp(grads, gq, 0.25, qp);
  REQUIRE(sol.lambda.size() == 1);
  CHECK(sol.lambda[0] == 1.0);
  CHECK(sol.exact);
  // nu = 0.5, so h = 0.5*||(1, 0.5)||^2 - 0.5*0.25.
  CHECK(sol.dual_objective == Catch::Approx(0.5 * 1.25 - 0.125).margin(1e-12));
}

TEST_CASE("dual qp: opposite gradients with no constraint direction") {
  QpConfig qp;
  const std::vector<Vector> grads = {make_vec({1.0, 2.0}),
                                     make_vec({-1.0, -2.0})};
  const DualSolution sol = solve_dual_qp(grads, make_vec({0.0, 0.0}), 0.0, qp);
  CHECK(sol.lambda[0] == Catch::Approx(0.5).margin(1e-10));
  CHECK(sol.lambda[1] == Catch::Approx(0.5).margin(1e-10));
  CHECK(sol.dual_objective == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("dual qp matches the brute-force grid oracle") {
  Rng rng(501);
  QpConfig qp;
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = trial % 2 == 0 ? 2 : 3;
    const std::vector<Vector> grads = random_grads(rng, m, 5);
    const Vector gq = rng.normal_vector(5);
    const double phi = 0.25 * gq.squaredNorm();  // rho = 0.5
    const DualSolution sol = solve_dual_qp(grads, gq, phi, qp);
    const auto grid = oracles::grid_dual_minimum(grads, gq, phi);
    INFO("trial " << trial << " solver " << sol.dual_objective << " grid "
                  << grid.value);
    CHECK(sol.dual_objective <= grid.value + 1e-6);
    CHECK(std::abs(sol.dual_objective - grid.value) < 1e-4);
    CHECK(sol.lambda.on_simplex());
  }
}

TEST_CASE("momentum update blends on the simplex") {
  const SimplexWeights prev(make_vec({1.0, 0.0}));
  const SimplexWeights next(make_vec({0.0, 1.0}));
  CHECK(momentum_update(prev, next, 1.0).lambda == next.lambda);
  const SimplexWeights mid = momentum_update(prev, next, 0.5);
  CHECK(mid.lambda == make_vec({0.5, 0.5}));

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const SimplexWeights a = project_simplex(rng.normal_vector(4));
    const SimplexWeights b = project_simplex(rng.normal_vector(4));
    const double beta = rng.uniform(1e-6, 1.0);
    const SimplexWeights mixed = momentum_update(a, b, beta);
    CHECK(mixed.on_simplex());
    // l1 step bound: the step is beta (b - a) and the simplex has l1
    // diameter 2.
    CHECK((mixed.lambda - a.lambda).cwiseAbs().sum() <= 2.0 * beta + 1e-12);
  }
}

TEST_CASE("assemble_direction on the worked example") {
  const std::vector<Vector> grads = {make_vec({1.0, 0.0})};
  const Vector gq = make_vec({0.0, 1.0});
  const DirectionSolution dir = assemble_direction(
      SimplexWeights(make_vec({1.0})), grads, gq, 0.25, 1e-12);
  CHECK(dir.nu == Catch::Approx(0.5).margin(1e-15));
  CHECK(dir.direction[0] == Catch::Approx(-1.0).margin(1e-15));
  CHECK(dir.direction[1] == Catch::Approx(-0.5).margin(1e-15));
  CHECK(dir.constraint_slack == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("assemble_direction degenerate reductions") {
  // nu = 0 with one objective: plain negative gradient.
  const std::vector<Vector> grads = {make_vec({0.0, 2.0})};
  const DirectionSolution dir = assemble_direction(
      SimplexWeights(make_vec({1.0})), grads, make_vec({0.0, 1.0}), 0.25, 1e-12);
  CHECK(dir.nu == 0.0);
  CHECK(dir.direction == make_vec({0.0, -2.0}));

  // All gradients zero: zero direction.
  const std::vector<Vector> zeros = {make_vec({0.0, 0.0}),
                                     make_vec({0.0, 0.0})};
  const DirectionSolution at_rest = assemble_direction(
      SimplexWeights::uniform(2), zeros, make_vec({0.0, 0.0}), 0.0, 1e-12);
  CHECK(at_rest.direction.norm() == 0.0);
  CHECK(at_rest.nu == 0.0);
}

TEST_CASE("construction identity and primal feasibility for random inputs") {
  Rng rng(88);
  QpConfig qp;
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 2 + trial % 3;
    const std::vector<Vector> grads = random_grads(rng, m, 6);
    const Vector gq = rng.normal_vector(6);
    const double phi = 0.25 * gq.squaredNorm();
    const DualSolution sol = solve_dual_qp(grads, gq, phi, qp);
    const DirectionSolution dir =
        assemble_direction(sol.lambda, grads, gq, phi, qp.grad_floor);

    // d = -(sum lambda_i gF_i + nu gq) componentwise.
    Vector combo = dir.nu * gq;
    for (Index i = 0; i < m; ++i) combo += sol.lambda[i] * grads[i];
    CHECK((dir.direction + combo).cwiseAbs().maxCoeff() <= 1e-12);

    // QP feasibility <gq, d> <= -phi whenever the gradient is alive.
    if (gq.norm() >= qp.grad_floor)
      CHECK(gq.dot(dir.direction) <= -phi + 1e-8);
  }
}

TEST_CASE("mgda on worked examples") {
  QpConfig qp;
  SECTION("orthogonal pair") {
    const std::vector<Vector> grads = {make_vec({1.0, 0.0}),
                                       make_vec({0.0, 1.0})};
    const MgdaResult r = mgda_direction(grads, qp);
    CHECK(r.lambda[0] == Catch::Approx(0.5).margin(1e-10));
    CHECK(r.direction[0] == Catch::Approx(-0.5).margin(1e-10));
    CHECK(r.direction[1] == Catch::Approx(-0.5).margin(1e-10));
  }
  SECTION("identical gradients keep the uniform tie-break") {
    const std::vector<Vector> grads = {make_vec({1.0, 2.0}),
                                       make_vec({1.0, 2.0})};
    const MgdaResult r = mgda_direction(grads, qp);
    CHECK(r.lambda[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(r.lambda[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK((r.direction + grads[0]).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("opposite-sign scalars cross zero") {
    const double alpha = 1.4;
    const std::vector<Vector> grads = {make_vec({2.0 * (alpha - 1.0)}),
                                       make_vec({2.0 * (alpha - 2.0)})};
    const MgdaResult r = mgda_direction(grads, qp);
    CHECK(std::abs(r.direction[0]) < 1e-8);
  }
}

TEST_CASE("mgda common-descent property on random instances") {
  Rng rng(404);
  QpConfig qp;
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 2 + trial % 4;
    const std::vector<Vector> grads = random_grads(rng, m, 5);
    const MgdaResult r = mgda_direction(grads, qp);
    const double d2 = r.direction.squaredNorm();
    for (Index i = 0; i < m; ++i)
      CHECK(grads[i].dot(r.direction) <= -d2 + 1e-8);
  }
}

TEST_CASE("two-gradient mgda agrees with the closed form") {
  Rng rng(19);
  QpConfig qp;
  for (int trial = 0; trial < 30; ++trial) {
    const Vector g1 = rng.normal_vector(4);
    const Vector g2 = rng.normal_vector(4);
    const MgdaResult r = mgda_direction({g1, g2}, qp);
    const double denom = (g1 - g2).squaredNorm();
    double t = denom > 0 ? (g2 - g1).dot(g2) / denom : 0.5;
    t = std::min(1.0, std::max(0.0, t));
    const Vector d = -(t * g1 + (1.0 - t) * g2);
    CHECK((r.direction - d).cwiseAbs().maxCoeff() < 1e-7);
  }
}
