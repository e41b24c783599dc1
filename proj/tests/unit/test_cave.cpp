#include "doctest.h"

#include <cmath>

#include "../oracles.hpp"
#include "helpers.hpp"
#include "inexp/cave.hpp"

using namespace inexp;

TEST_CASE("Generated instances satisfy the construction guarantees") {
  auto g = testing::rng(123);
  for (Index n : {Index(50), Index(200)}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = cave::generate(n, cave::default_density(n), seed);
      const Eigen::MatrixXd A(inst.A);
      CHECK(oracle::sigma_min(A) > 3.0);
      CHECK(inst.A.nonZeros() >= std::llround(cave::default_density(n) * n * n));
      CHECK((inst.A * inst.x_star - inst.x_star.cwiseAbs() - inst.b).norm() <=
            1e-10 * inst.b.norm());
      CHECK(inst.x_star.minCoeff() > cave::kSolutionLow);
      CHECK(inst.x_star.maxCoeff() < cave::kSolutionHigh);
      CHECK(inst.d == doctest::Approx(inst.x_star.sum()).epsilon(1e-15));
      CHECK(BudgetSimplex<double>(n, inst.d).contains(inst.x_star));
      for (int p = 0; p < 3; ++p) {
        const Vector<double> x = testing::random_vector(g, n, -300, 300);
        const Eigen::MatrixXd V(cave::clarke_element(inst, x));
        CHECK(oracle::sigma_min(V) >= 2.0 - 1e-8);
      }
    }
  }
}

TEST_CASE("Generation is deterministic in the seed") {
  const auto a = cave::generate(60, 0.05, 42);
  const auto b = cave::generate(60, 0.05, 42);
  const auto c = cave::generate(60, 0.05, 43);
  CHECK(Eigen::MatrixXd(a.A) == Eigen::MatrixXd(b.A));
  CHECK(a.b == b.b);
  CHECK(a.d == b.d);
  CHECK(a.b != c.b);
}

TEST_CASE("Generation argument checks") {
  CHECK_THROWS(cave::generate(1, 0.5, 0));
  CHECK_THROWS(cave::generate(50, 0.0, 0));
  CHECK_THROWS(cave::generate(50, 1.5, 0));
  CHECK_THROWS(cave::generate(200, 0.003, 0));
}

TEST_CASE("Default density keeps three nonzeros per row") {
  CHECK(cave::default_density(1000) == 0.003);
  CHECK(cave::default_density(5000) == 0.003);
  CHECK(cave::default_density(50) == doctest::Approx(0.06));
}

TEST_CASE("Residual, sign and Clarke element") {
  cave::CaveInstance inst;
  inst.A = sparse_diagonal<double>(Vector<double>::Constant(3, 4.0));
  inst.b = Vector<double>::Zero(3);
  inst.d = 10;
  Vector<double> x(3);
  x << 1.0, 0.0, -2.0;
  CHECK(cave::sgn(x) == Vector<double>((Eigen::Vector3d() << 1.0, 0.0, -1.0).finished()));
  CHECK(cave::residual(inst, x) ==
        Vector<double>((Eigen::Vector3d() << 3.0, 0.0, -10.0).finished()));
  const Eigen::MatrixXd V(cave::clarke_element(inst, x));
  CHECK(V.diagonal() == Eigen::Vector3d(3.0, 4.0, 5.0));
}

TEST_CASE("Start point, Gamma and eta") {
  const auto inst = cave::generate(50, 0.06, 1);
  const auto x0 = cave::start_point(inst);
  CHECK(x0.sum() == doctest::Approx(inst.d / 2));
  const double gamma = cave::lipschitz_gamma(inst);
  CHECK(gamma == doctest::Approx(oracle::sigma_max(Eigen::MatrixXd(inst.A)) + 1).epsilon(1e-8));
  // 0.9999 (1 - sqrt(0.2)) / (0.5 * 10 * (1 + sqrt(0.2)))
  CHECK(cave::default_eta(0.1, 10.0) == doctest::Approx(0.9999 * 0.0763932022500210));
  CHECK(cave::default_eta(0.1, 10.0) < eta_upper_bound(0.1, 0.5, 10.0));
}

TEST_CASE("Both methods solve small generated instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const cave::CaveProblem problem(cave::generate(100, 0.03, seed));
    const double gamma = cave::lipschitz_gamma(problem.instance());
    for (double theta : {1e-8, 1e-1}) {
      SolverConfig<double> cfg;
      cfg.schedule = ForcingSchedule<double>::constant(cave::default_eta(theta, gamma), theta);
      cfg.gamma_hint = gamma;
      cfg.lambda_hint = cave::kLambdaHint;
      cfg.keep_iterates = true;
      const auto trace = solve<double>(problem, cave::start_point(problem.instance()), cfg);
      CHECK(trace.status == SolveStatus::converged);
      CHECK(trace.final_residual < 1e-6);
      for (const auto& x : trace.iterates) {
        CHECK(problem.feasible_set().contains(x));
      }
    }
  }
}
