#include "doctest.h"

#include <cmath>
#include <vector>

#include "inexp/cave.hpp"
#include "inexp/newton.hpp"
#include "inexp/rates.hpp"

using namespace inexp;

namespace {

/// f(x) = x.^2 - 1 componentwise over a box that never binds.
template <typename Scalar>
class Squares final : public ConstrainedProblem<Scalar> {
 public:
  explicit Squares(Index n)
      : box_(Vector<Scalar>::Constant(n, Scalar(-100)), Vector<Scalar>::Constant(n, Scalar(100))) {}
  Index dimension() const override { return box_.dimension(); }
  Vector<Scalar> eval_f(const Vector<Scalar>& x) const override {
    return (x.array() * x.array() - Scalar(1)).matrix();
  }
  CsrMatrix<Scalar> clarke_element(const Vector<Scalar>& x) const override {
    return sparse_diagonal<Scalar>(Scalar(2) * x);
  }
  const FeasibleSet<Scalar>& feasible_set() const override { return box_; }
  std::optional<Vector<Scalar>> known_solution() const override {
    return Vector<Scalar>::Ones(box_.dimension());
  }

 private:
  Box<Scalar> box_;
};

cave::CaveInstance diag_instance() {
  cave::CaveInstance inst;
  inst.A = sparse_diagonal<double>(Vector<double>::Constant(2, 3.0));
  inst.x_star = Vector<double>(2);
  inst.x_star << 1.0, 2.0;
  inst.b = Vector<double>(2);
  inst.b << 2.0, 4.0;
  inst.d = 3.0;
  return inst;
}

}  // namespace

TEST_CASE("Forcing schedules") {
  const auto c = ForcingSchedule<double>::constant(0.2, 0.1);
  CHECK(c.at(5, 3.0).eta == 0.2);
  CHECK(c.at(5, 3.0).theta == 0.1);

  const auto v = ForcingSchedule<double>::vanishing(0.2, 0.1);
  CHECK(v.at(0, 1.0).eta == doctest::Approx(0.2));
  CHECK(v.at(3, 1.0).eta == doctest::Approx(0.05));
  CHECK(v.at(3, 1.0).theta == doctest::Approx(0.1 / 16));

  const auto p = ForcingSchedule<double>::residual_power(0.5, 0.2, 0.1);
  CHECK(p.at(0, 0.01).eta == doctest::Approx(0.02));
  CHECK(p.at(0, 0.01).theta == doctest::Approx(0.001));
  CHECK(p.at(0, 100.0).eta == 0.2);
  CHECK(p.at(0, 100.0).theta == 0.1);
}

TEST_CASE("Config validation") {
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.1, 0.1);
  CHECK(cfg.validate().size() == 1);

  cfg.gamma_hint = 2.0;
  cfg.lambda_hint = 0.5;
  CHECK(cfg.validate().empty());

  // (1 - sqrt(0.2)) / (0.5 * 2 * (1 + sqrt(0.2))) = 0.38197...
  cfg.schedule.eta_bar = 0.39;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.schedule.eta_bar = 0.38;
  CHECK_NOTHROW(cfg.validate());

  cfg.schedule.theta_bar = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg.schedule = ForcingSchedule<double>::residual_power(2.0, 0.1, 0.1);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg.schedule = ForcingSchedule<double>::constant(0.1, 0.1);
  cfg.residual_tol = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("eta upper bound") {
  CHECK(eta_upper_bound(0.0, 0.5, 4.0) == doctest::Approx(0.5));
  CHECK(eta_upper_bound(0.08, 1.0, 1.0) == doctest::Approx(0.6 / 1.4));
}

TEST_CASE_TEMPLATE("Exact mode reproduces classical Newton on x^2 - 1", Scalar, float, double) {
  const Squares<Scalar> problem(1);
  SolverConfig<Scalar> cfg;
  cfg.schedule = ForcingSchedule<Scalar>::constant(Scalar(0), Scalar(0));
  cfg.projection_mode = ProjectionMode::exact;
  cfg.residual_tol = std::is_same_v<Scalar, float> ? Scalar(1e-6) : Scalar(1e-14);
  cfg.keep_iterates = true;
  const auto trace = solve<Scalar>(problem, Vector<Scalar>::Constant(1, Scalar(0.5)), cfg);
  CHECK(trace.status == SolveStatus::converged);

  double x = 0.5;
  const double tol = std::is_same_v<Scalar, float> ? 1e-6 : 1e-10;
  for (const auto& it : trace.iterates) {
    CHECK(static_cast<double>(it[0]) == doctest::Approx(x).epsilon(tol));
    x = (x * x + 1) / (2 * x);
  }
  REQUIRE(trace.iterates.size() >= 4);
  CHECK(static_cast<double>(trace.iterates[1][0]) == doctest::Approx(1.25).epsilon(tol));
  CHECK(static_cast<double>(trace.iterates[2][0]) == doctest::Approx(1.025).epsilon(tol));
  CHECK(static_cast<double>(trace.iterates[3][0]) ==
        doctest::Approx(1.0003048780487804).epsilon(tol));
}

TEST_CASE("Quadratic convergence on x^2 - 1") {
  const Squares<double> problem(3);
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.0, 0.0);
  cfg.residual_tol = 1e-15;
  Vector<double> x0(3);
  x0 << 0.5, 2.0, 1.5;
  const auto trace = solve<double>(problem, x0, cfg);
  CHECK(trace.status == SolveStatus::converged);
  const auto est = estimate_order(trace);
  REQUIRE(est.confidence == OrderConfidence::ok);
  CHECK(est.order > 1.6);
}

TEST_CASE("Hand-solved 2x2 CAVE") {
  const cave::CaveProblem problem(diag_instance());
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.0, 0.0);
  cfg.projection_mode = ProjectionMode::exact;
  cfg.keep_iterates = true;
  const Vector<double> x0 = Vector<double>::Constant(2, 0.75);
  CHECK(problem.eval_f(x0).isApprox(Vector<double>((Eigen::Vector2d() << -0.5, -2.5).finished())));
  const auto trace = solve<double>(problem, x0, cfg);
  CHECK(trace.status == SolveStatus::converged);
  CHECK(trace.iterations() <= 2);
  CHECK((trace.final_point - problem.instance().x_star).norm() < 1e-12);
  REQUIRE(trace.steps.size() >= 1);
  CHECK((trace.steps[0] - Vector<double>((Eigen::Vector2d() << 0.25, 1.25).finished())).norm() <
        1e-12);
  CHECK_FALSE(trace.records[0].projected);
}

TEST_CASE("Trace records certificate fields") {
  const rates::SmoothProblem problem(10, 3);
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.3, 0.1);
  cfg.residual_tol = 1e-10;
  cfg.max_outer = 100;
  const Vector<double> x0 = problem.root() + Vector<double>::Constant(10, 0.05);
  const auto trace = solve<double>(problem, x0, cfg);
  CHECK(trace.status == SolveStatus::converged);
  for (const auto& r : trace.records) {
    CHECK(r.linear_certificate_ok);
    CHECK(r.linear_relative_residual <= r.eta_k);
    CHECK(r.iterate_feasible);
    CHECK(r.error_to_solution.has_value());
  }
  CHECK(trace.errors().size() == trace.records.size() + 1);
}

TEST_CASE("Immediate convergence and iteration cap") {
  const Squares<double> problem(2);
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.0, 0.0);
  cfg.residual_tol = 1e300;
  const auto trace = solve<double>(problem, Vector<double>::Constant(2, 3.0), cfg);
  CHECK(trace.status == SolveStatus::converged);
  CHECK(trace.iterations() == 0);

  cfg.residual_tol = 1e-300;
  cfg.max_outer = 2;
  const auto capped = solve<double>(problem, Vector<double>::Constant(2, 3.0), cfg);
  CHECK(capped.status == SolveStatus::max_iterations);
  CHECK(capped.iterations() == 2);
}

TEST_CASE("Infeasible start is rejected") {
  const cave::CaveProblem problem(diag_instance());
  SolverConfig<double> cfg;
  cfg.schedule = ForcingSchedule<double>::constant(0.0, 0.0);
  CHECK_THROWS(solve<double>(problem, Vector<double>::Constant(2, 5.0), cfg));
}

TEST_CASE("Order estimation on model sequences") {
  std::vector<double> linear;
  std::vector<double> quadratic{1e-1};
  for (int k = 0; k < 8; ++k) {
    linear.push_back(std::pow(0.5, k));
  }
  for (int k = 0; k < 3; ++k) {
    quadratic.push_back(quadratic.back() * quadratic.back());
  }
  const auto lin = estimate_order<double>(linear);
  const auto quad = estimate_order<double>(quadratic);
  CHECK(lin.order == doctest::Approx(1.0));
  CHECK(lin.pairs_used == 7);
  CHECK(quad.order == doctest::Approx(2.0));
  CHECK(quad.pairs_used == 3);

  const std::vector<double> short_seq{1e-1, 1e-2, 1e-4};
  CHECK(estimate_order<double>(short_seq).confidence == OrderConfidence::insufficient_data);

  // Pairs touching the floor are dropped.
  const std::vector<double> floored{1e-1, 1e-2, 1e-4, 1e-8, 1e-16, 1e-17};
  CHECK(estimate_order<double>(floored).pairs_used == 3);
}

TEST_CASE("Contraction and ratios") {
  const std::vector<double> down{1.0, 0.5, 0.1, 0.01};
  const std::vector<double> up{1.0, 0.5, 0.6};
  const std::vector<double> noise{1.0, 1e-3, 1e-15, 2e-15};
  CHECK(check_contraction<double>(down));
  CHECK_FALSE(check_contraction<double>(up));
  CHECK(check_contraction<double>(noise));
  const auto r = error_ratios<double>(down);
  REQUIRE(r.size() == 3);
  CHECK(r[2] == doctest::Approx(0.1));
}
