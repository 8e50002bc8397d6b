#include <catch2/catch_amalgamated.hpp>

#include "forum/core/config.hpp"
#include "forum/core/errors.hpp"
#include "forum/core/rng.hpp"
#include "forum/core/types.hpp"
#include "forum/core/validate.hpp"
#include "forum/core/workspace.hpp"
#include "forum/problems/synthetic.hpp"

using namespace forum;

TEST_CASE("beta schedule values") {
  CHECK(beta_schedule(0, 0.75) == 1.0);
  CHECK(beta_schedule(15, 0.75) == Catch::Approx(0.125).epsilon(1e-15));
  CHECK(beta_schedule(3, 1.0) == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("beta schedule is strictly decreasing with beta_0 = 1") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double exponent = rng.uniform(1e-3, 1.0);
    CHECK(beta_schedule(0, exponent) == 1.0);
    double prev = 1.0;
    for (int k = 1; k <= 200; ++k) {
      const double b = beta_schedule(k, exponent);
      CHECK(b < prev);
      CHECK(b > 0.0);
      prev = b;
    }
  }
}

TEST_CASE("decision point flattening round-trips") {
  Vector a(2), w(3);
  a << 1.0, 2.0;
  w << 3.0, 4.0, 5.0;
  const DecisionPoint z(a, w);
  const Vector flat = z.flat();
  REQUIRE(flat.size() == 5);
  CHECK(flat[0] == 1.0);
  CHECK(flat[4] == 5.0);
  const DecisionPoint back = DecisionPoint::from_flat(2, 3, flat);
  CHECK(back.alpha == a);
  CHECK(back.omega == w);
}

TEST_CASE("simplex membership checks") {
  CHECK(SimplexWeights::uniform(4).on_simplex());
  Vector bad(2);
  bad << 0.7, 0.4;
  CHECK_FALSE(SimplexWeights(bad).on_simplex());
  bad << -0.1, 1.1;
  CHECK_FALSE(SimplexWeights(bad).on_simplex());
}

TEST_CASE("rng matches the standard mt19937_64 stream") {
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.raw();
  CHECK(x == 9981545732273789042ull);
}

TEST_CASE("rng draws are reproducible and well-ranged") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(9), d(9);
  for (int i = 0; i < 1000; ++i) CHECK(c.normal() == d.normal());
  Rng e(4);
  for (int i = 0; i < 1000; ++i) {
    const auto v = e.uniform_int(-3, 5);
    CHECK(v >= -3);
    CHECK(v <= 5);
  }
}

TEST_CASE("workspace meter tracks peak over nested buffers") {
  WorkspaceMeter meter;
  {
    ScopedWorkspace outer(&meter, 100);
    CHECK(meter.current() == 100);
    {
      ScopedWorkspace inner(&meter, 50);
      CHECK(meter.peak() == 150);
    }
    CHECK(meter.current() == 100);
  }
  CHECK(meter.current() == 0);
  CHECK(meter.peak() == 150);
  meter.mark();
  CHECK(meter.peak() == 0);
}

TEST_CASE("config validation rejects bad fields") {
  ForumConfig cfg;
  cfg.validate();
  cfg.mu = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.mu = 0.1;
  cfg.beta_exponent = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.beta_exponent = 0.75;
  cfg.rho = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("validate_problem passes on the synthetic problem") {
  const SyntheticProblem problem;
  const ValidationReport report = validate_problem(problem, 10, 42);
  for (const auto& check : report.checks) {
    INFO(check.name << " worst_error=" << check.worst_error);
    CHECK(check.passed);
  }
}

namespace {

// Oracle returning a gradient one entry short, for the structural check.
class BrokenProblem final : public ProblemOracle {
 public:
  Dims dims() const override { return {1, 2, 1}; }
  std::string name() const override { return "broken"; }
  double ul_value(Index, const DecisionPoint&) const override { return 0.0; }
  Vector ul_grad(Index, const DecisionPoint&) const override {
    return Vector::Zero(3);
  }
  double ll_value(const DecisionPoint&) const override { return 0.0; }
  Vector ll_grad(const DecisionPoint&) const override {
    return Vector::Zero(2);  // should be length 3
  }
};

}  // namespace

TEST_CASE("validate_problem reports structural errors by oracle name") {
  const BrokenProblem problem;
  try {
    validate_problem(problem, 1, 0);
    FAIL("expected StructuralError");
  } catch (const StructuralError& e) {
    CHECK(std::string(e.what()).find("ll_grad") != std::string::npos);
  }
}

TEST_CASE("stationarity holds exactly for the synthetic quadratic minimum") {
  const SyntheticProblem problem;
  Vector alpha(1);
  alpha << 1.7;
  const Vector omega_star = problem.exact_ll_solution(alpha);
  const DecisionPoint z(alpha, omega_star);
  CHECK(problem.ll_grad(z).tail(2).norm() == 0.0);
}
