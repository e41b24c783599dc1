#include "doctest.h"

#include "inexp/rates.hpp"

using namespace inexp;
using namespace inexp::rates;

TEST_CASE("Smooth benchmark has its root") {
  const SmoothProblem p(12, 4);
  CHECK(p.eval_f(p.root()).norm() < 1e-14);
  CHECK(p.feasible_set().contains(p.root()));
  const Eigen::MatrixXd J(p.clarke_element(p.root()));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  CHECK(svd.singularValues().minCoeff() >= 1.0 - 1e-10);
  CHECK(svd.singularValues().maxCoeff() <= 4.0 + 1e-10);
}

TEST_CASE("Regime signatures on the smooth benchmark") {
  StudyOptions opt;
  opt.runs = 30;
  opt.regime = Regime::constant;
  const auto c = run_study(opt);
  CHECK(c.converged == 30);
  CHECK(c.median_order >= 0.9);
  CHECK(c.median_order <= 1.3);

  opt.regime = Regime::residual_power;
  opt.mu = 1.0;
  const auto r = run_study(opt);
  CHECK(r.signature_ok);
  CHECK(r.median_order >= 1.6);

  opt.mu = 0.5;
  const auto half = run_study(opt);
  CHECK(half.median_order > 1.2);
  CHECK(half.median_order < r.median_order);
}

TEST_CASE("Vanishing regime ratios fall below the constant ones") {
  StudyOptions opt;
  opt.runs = 30;
  opt.regime = Regime::constant;
  const auto c = run_study(opt);
  opt.regime = Regime::vanishing;
  const auto v = run_study(opt);
  CHECK(v.converged == 30);
  REQUIRE(v.mean_ratios.size() >= 4);
  REQUIRE(c.mean_ratios.size() >= 4);
  CHECK(v.mean_ratios[3] < 0.5 * c.mean_ratios[3]);
}

TEST_CASE("Signature checks") {
  StudyReport rep;
  rep.runs.resize(2);
  rep.converged = 2;
  rep.runs_with_order = 2;
  rep.median_order = 1.0;
  CHECK(regime_signature(Regime::constant, rep));
  CHECK_FALSE(regime_signature(Regime::residual_power, rep));
  rep.mean_ratios = {0.5, 0.3, 0.2, 0.1};
  CHECK(regime_signature(Regime::vanishing, rep));
  rep.mean_ratios = {0.5, 0.3, 0.1, 0.2};
  std::string why;
  CHECK_FALSE(regime_signature(Regime::vanishing, rep, &why));
  CHECK(why.find("strictly decreasing") != std::string::npos);
  rep.mean_ratios = {0.5, 0.3, 0.2, 0.1};
  rep.converged = 1;
  CHECK_FALSE(regime_signature(Regime::vanishing, rep));
}

TEST_CASE("CAVE runs converge from near the solution") {
  StudyOptions opt;
  opt.benchmark = Benchmark::cave;
  opt.regime = Regime::constant;
  const auto trace = run_single(opt, 3);
  CHECK(trace.status == SolveStatus::converged);
  CHECK(trace.final_error.has_value());
}

TEST_CASE("Parsing and argument checks") {
  CHECK(parse_regime("residual-power") == Regime::residual_power);
  CHECK(parse_regime("residual_power") == Regime::residual_power);
  CHECK_THROWS(parse_regime("fast"));
  CHECK(parse_benchmark("cave") == Benchmark::cave);
  CHECK_THROWS(parse_benchmark("x"));
  StudyOptions opt;
  opt.regime = Regime::residual_power;
  opt.mu = 2.0;
  CHECK_THROWS_AS(run_single(opt, 0), ConfigError);
  opt.mu = 1.0;
  opt.runs = 0;
  CHECK_THROWS(run_study(opt));
}
