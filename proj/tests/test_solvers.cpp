#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tailrisk/models.hpp"
#include "tailrisk/solvers.hpp"
#include "tailrisk/superquantile.hpp"

using namespace tailrisk;
using namespace tailrisk::testing;

namespace {

// f(x) = 0.5 sum_i h_i x_i^2
Oracle diagonal_quadratic(Vector h) {
  return [h = std::move(h)](const Vector& x) {
    return OracleResult{0.5 * (h.array() * x.array().square()).sum(),
                        (h.array() * x.array()).matrix()};
  };
}

Oracle half_square() { return diagonal_quadratic(Vector::Ones(1)); }

SolverConfig config_for(Algorithm algorithm) {
  SolverConfig c;
  c.algorithm = algorithm;
  return c;
}

// n = 1 dataset with x = 1, y = 0.
Dataset unit_sample() { return Dataset(Matrix::Ones(1, 1), Vector::Zero(1)); }

constexpr Algorithm kAll[] = {Algorithm::kSubgradient, Algorithm::kDualAveraging,
                              Algorithm::kGradientDescent, Algorithm::kAcceleratedGradient,
                              Algorithm::kLbfgs};

}  // namespace

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : kAll) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK(parse_algorithm("gd") == Algorithm::kGradientDescent);
  CHECK(parse_algorithm("agd") == Algorithm::kAcceleratedGradient);
  CHECK(parse_algorithm("dual-averaging") == Algorithm::kDualAveraging);
  CHECK_THROWS_AS(parse_algorithm("newton"), ParameterError);
  CHECK_FALSE(needs_smooth_oracle(Algorithm::kSubgradient));
  CHECK_FALSE(needs_smooth_oracle(Algorithm::kDualAveraging));
  CHECK(needs_smooth_oracle(Algorithm::kLbfgs));
}

TEST_CASE("SolverConfig validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = SolverConfig{};
  c.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = SolverConfig{};
  c.lbfgs_memory = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = SolverConfig{};
  c.initial_point = Vector::Zero(3);
  CHECK_THROWS_AS(minimize(half_square(), c, 2), ParameterError);
}

TEST_CASE("momentum sequence") {
  const std::vector<double> a = momentum_sequence(4);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 0.0);
  CHECK(a[1] == 1.0);
  CHECK(a[2] == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
  CHECK(a[3] == doctest::Approx((1.0 + std::sqrt(1.0 + 4.0 * a[2] * a[2])) / 2.0));
  CHECK(momentum_weight(a[1], a[2]) == 0.0);
  CHECK(momentum_weight(a[2], a[3]) < 0.0);
}

TEST_CASE("tune_initial_step") {
  SUBCASE("half square picks the largest grid point below 2") {
    Vector x0(1);
    x0 << 1.0;
    const StepTuning t = tune_initial_step(half_square(), x0);
    // grid is 2^k / 2; the largest value strictly below 2 is 1
    CHECK(t.step == 1.0);
    CHECK_FALSE(t.fallback);
  }
  SUBCASE("constant objective falls back") {
    const Oracle flat = [](const Vector& x) { return OracleResult{3.0, Vector::Ones(x.size())}; };
    const StepTuning t = tune_initial_step(flat, Vector::Zero(2));
    CHECK(t.fallback);
    CHECK(t.step == doctest::Approx(std::ldexp(1.0 / (1.0 + std::sqrt(2.0)), -20)));
  }
  SUBCASE("bitwise reproducible on a least-squares toy") {
    std::mt19937_64 gen(1);
    const LeastSquaresLoss lsq;
    const Dataset data = random_dataset(30, 4, gen);
    const Oracle f = make_exact_oracle(lsq, data, 0.7);
    CHECK(tune_initial_step(f, Vector::Zero(4)).step == tune_initial_step(f, Vector::Zero(4)).step);
  }
}

TEST_CASE("zero gradient at the start stops immediately") {
  for (Algorithm a : kAll) {
    SolverConfig c = config_for(a);
    const SolverResult r = minimize(half_square(), c, 1);
    CHECK(r.termination == Termination::kGradTol);
    CHECK(r.objective_trace.size() == 1);
    CHECK(r.solution[0] == 0.0);
  }
}

TEST_CASE("non-finite oracle output aborts with the partial run") {
  int calls = 0;
  const Oracle bad = [&](const Vector& x) {
    ++calls;
    if (calls >= 3) return OracleResult{std::numeric_limits<double>::quiet_NaN(), x};
    return OracleResult{0.5 * x.squaredNorm(), x};
  };
  SolverConfig c = config_for(Algorithm::kGradientDescent);
  c.step_size = 0.5;
  c.initial_point = Vector::Ones(2);
  try {
    minimize(bad, c, 2);
    FAIL("expected SolverAborted");
  } catch (const SolverAborted& e) {
    CHECK(e.partial().objective_trace.size() == 3);
    CHECK(e.partial().best_objective == doctest::Approx(0.25));
  }
}

TEST_CASE("subgradient and dual averaging on |w|") {
  const AbsoluteDeviationLoss abs_loss;
  const Dataset data = unit_sample();
  const Oracle f = make_exact_oracle(abs_loss, data, 0.5);
  for (Algorithm a : {Algorithm::kSubgradient, Algorithm::kDualAveraging}) {
    SolverConfig c = config_for(a);
    c.max_iters = 10000;
    c.initial_point = Vector::Ones(1);
    c.f_tol = 0.0;
    c.grad_tol = 0.0;
    const SolverResult r = minimize(f, c, 1);
    CHECK(r.best_objective <= 1e-2);
    CHECK(r.objective_trace.size() <= 10000);
  }
}

TEST_CASE("dual averaging unrolls along a constant gradient") {
  Vector g(2);
  g << 3.0, -4.0;
  const Oracle linear = [g](const Vector& x) { return OracleResult{g.dot(x), g}; };
  SolverConfig c = config_for(Algorithm::kDualAveraging);
  c.step_size = 0.5;  // first step length, 1 / alpha_hat
  c.max_iters = 6;
  c.f_tol = 0.0;
  c.record_iterates = true;
  const SolverResult r = minimize(linear, c, 2);
  REQUIRE(r.iterate_trace.size() == 6);
  for (std::size_t k = 0; k + 1 < r.iterate_trace.size(); ++k) {
    const Vector expected = -0.5 * std::sqrt(static_cast<double>(k + 1)) * g / g.norm();
    CHECK((r.iterate_trace[k + 1] - expected).norm() <= 1e-14);
  }
}

TEST_CASE("gradient descent on the unit quadratic") {
  SolverConfig c = config_for(Algorithm::kGradientDescent);
  c.step_size = 1.0;
  c.initial_point = Vector::Constant(1, 7.5);
  c.max_iters = 200;
  const SolverResult r = minimize(half_square(), c, 1);
  CHECK(r.termination == Termination::kGradTol);
  CHECK(r.objective_trace.size() <= 200);
}

TEST_CASE("accelerated gradient on quadratics") {
  SUBCASE("unit quadratic") {
    SolverConfig c = config_for(Algorithm::kAcceleratedGradient);
    c.step_size = 1.0;
    c.initial_point = Vector::Constant(1, -3.0);
    c.max_iters = 100;
    const SolverResult r = minimize(half_square(), c, 1);
    CHECK(r.termination == Termination::kGradTol);
  }
  SUBCASE("ill-conditioned: far fewer oracle calls than gradient descent") {
    Vector h(10);
    for (Eigen::Index i = 0; i < 10; ++i) h[i] = std::pow(10.0, -4.0 * i / 9.0);
    const Oracle f = diagonal_quadratic(h);
    SolverConfig c;
    c.step_size = 1.0;
    c.initial_point = Vector::Ones(10);
    c.max_iters = 200000;
    c.grad_tol = 1e-6;
    c.f_tol = 0.0;
    c.algorithm = Algorithm::kGradientDescent;
    const SolverResult gd = minimize(f, c, 10);
    c.algorithm = Algorithm::kAcceleratedGradient;
    const SolverResult agd = minimize(f, c, 10);
    CHECK(gd.termination == Termination::kGradTol);
    CHECK(agd.termination == Termination::kGradTol);
    CHECK(agd.oracle_calls * 10 <= gd.oracle_calls);
  }
}

TEST_CASE("L-BFGS") {
  SUBCASE("strongly convex quadratic") {
    Vector h(10);
    for (Eigen::Index i = 0; i < 10; ++i) h[i] = 1.0 + i;
    SolverConfig c = config_for(Algorithm::kLbfgs);
    c.initial_point = Vector::LinSpaced(10, -2.0, 3.0);
    c.grad_tol = 1e-10;
    c.f_tol = 0.0;
    c.max_iters = 50;
    const SolverResult r = minimize(diagonal_quadratic(h), c, 10);
    CHECK(r.termination == Termination::kGradTol);
  }
  SUBCASE("already optimal") {
    SolverConfig c = config_for(Algorithm::kLbfgs);
    const SolverResult r = minimize(diagonal_quadratic(Vector::Ones(4)), c, 4);
    CHECK(r.termination == Termination::kGradTol);
    CHECK(r.oracle_calls == 1);
  }
}

TEST_CASE("trace invariants and determinism") {
  std::mt19937_64 gen(44);
  const LeastSquaresLoss lsq;
  const Dataset data = random_dataset(60, 4, gen);
  for (Algorithm a : kAll) {
    SolverConfig c = config_for(a);
    c.max_iters = 150;
    const SolverResult r1 = train(lsq, data, RiskParams{0.8, 0.01, Penalty::kEuclidean}, c);
    const SolverResult r2 = train(lsq, data, RiskParams{0.8, 0.01, Penalty::kEuclidean}, c);
    CHECK(!r1.objective_trace.empty());
    CHECK(r1.objective_trace.size() <= 150);
    CHECK(r1.best_objective == *std::min_element(r1.objective_trace.begin(), r1.objective_trace.end()));
    CHECK(r1.objective_trace == r2.objective_trace);
    CHECK((r1.solution.array() == r2.solution.array()).all());
    if (a == Algorithm::kGradientDescent) {
      for (std::size_t k = 1; k < r1.objective_trace.size(); ++k) {
        CHECK(r1.objective_trace[k] <= r1.objective_trace[k - 1]);
      }
    }
  }
}

TEST_CASE("solvers agree on a convex superquantile toy") {
  std::mt19937_64 gen(50);
  const LeastSquaresLoss lsq;
  const Dataset data = random_dataset(50, 5, gen);
  const double p = 0.8;

  SolverConfig ref = config_for(Algorithm::kLbfgs);
  ref.max_iters = 2000;
  ref.f_tol = 0.0;
  const SolverResult lb = train(lsq, data, RiskParams{p, 1e-4, Penalty::kEuclidean}, ref);
  const double f_ref = exact_oracle(lsq, data, lb.solution, p).value;

  for (Algorithm a : {Algorithm::kSubgradient, Algorithm::kDualAveraging}) {
    SolverConfig c = config_for(a);
    c.max_iters = 20000;
    c.f_tol = 0.0;
    const SolverResult r = train(lsq, data, RiskParams{p, 1e-4, Penalty::kEuclidean}, c);
    CHECK(std::abs(r.best_objective - f_ref) <= 1e-3);
  }
  // Gradient descent against L-BFGS on the same, moderately smoothed objective.
  const RiskParams smooth{p, 1e-2, Penalty::kEuclidean};
  const SolverResult lb_smooth = train(lsq, data, smooth, ref);
  SolverConfig c = config_for(Algorithm::kGradientDescent);
  c.max_iters = 20000;
  c.f_tol = 0.0;
  const SolverResult gd = train(lsq, data, smooth, c);
  for (std::size_t k = 1; k < gd.objective_trace.size(); ++k) {
    REQUIRE(gd.objective_trace[k] <= gd.objective_trace[k - 1]);
  }
  CHECK(std::abs(gd.best_objective - lb_smooth.best_objective) <= 1e-6);
}

TEST_CASE("decreasing mu approaches the exact optimum") {
  std::mt19937_64 gen(51);
  const LeastSquaresLoss lsq;
  const Dataset data = random_dataset(50, 3, gen);
  const double p = 0.7;
  SolverConfig sub = config_for(Algorithm::kSubgradient);
  sub.max_iters = 40000;
  sub.f_tol = 0.0;
  const double f_star = train(lsq, data, RiskParams{p, 1.0, Penalty::kEuclidean}, sub).best_objective;

  SolverConfig c = config_for(Algorithm::kLbfgs);
  c.max_iters = 2000;
  const double dmax_bound = 0.5;  // d(q) <= 0.5 ||q||^2 <= 0.5 on K_p
  double previous = INFINITY;
  for (double mu : {1e-1, 1e-2, 1e-3}) {
    const SolverResult r = train(lsq, data, RiskParams{p, mu, Penalty::kEuclidean}, c);
    const double f = exact_oracle(lsq, data, r.solution, p).value;
    CHECK(f <= previous + 1e-9);
    CHECK(std::abs(f - f_star) <= mu * dmax_bound + 1e-3);
    previous = f;
  }
}
