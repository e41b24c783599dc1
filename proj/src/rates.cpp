#include "inexp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

#include "inexp/cave.hpp"
#include "random.hpp"

namespace inexp::rates {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::constant:
      return "constant";
    case Regime::vanishing:
      return "vanishing";
    case Regime::residual_power:
      return "residual-power";
  }
  return "unknown";
}

const char* to_string(Benchmark b) {
  return b == Benchmark::smooth ? "smooth" : "cave";
}

Regime parse_regime(const std::string& s) {
  if (s == "constant") return Regime::constant;
  if (s == "vanishing") return Regime::vanishing;
  if (s == "residual-power" || s == "residual_power") return Regime::residual_power;
  throw std::invalid_argument("unknown regime: " + s);
}

Benchmark parse_benchmark(const std::string& s) {
  if (s == "smooth") return Benchmark::smooth;
  if (s == "cave") return Benchmark::cave;
  throw std::invalid_argument("unknown problem: " + s);
}

namespace {

constexpr double kSmoothSpreadLow = 1.0;
constexpr double kSmoothSpreadHigh = 4.0;
constexpr double kBoxHalfWidth = 10.0;
constexpr double kStartDistance = 0.1;
constexpr double kCaveDensity = 0.1;
constexpr double kCaveStartRelative = 0.1;
constexpr double kCaveResidualFloorFactor = 1e3;
// Large enough to leave several pairs above the error floor, small enough
// to stay above the rounding floor of f.
constexpr double kStudyResidualTol = 1e-11;
constexpr int kStudyMaxOuter = 200;

Eigen::MatrixXd random_orthogonal(std::mt19937_64& engine, Index n) {
  Eigen::MatrixXd g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      g(i, j) = detail::uniform(engine, -1.0, 1.0);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

Vector<double> random_unit(std::mt19937_64& engine, Index n) {
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = detail::uniform(engine, -1.0, 1.0);
  }
  return v / norm2(v);
}

}  // namespace

SmoothProblem::SmoothProblem(Index n, std::uint64_t seed, double beta)
    : root_(n), beta_(beta), box_(Vector<double>::Zero(n), Vector<double>::Ones(n)) {
  if (n < 1) {
    throw std::invalid_argument("SmoothProblem: n must be positive");
  }
  auto engine = detail::substream(seed, 0);
  const Eigen::MatrixXd q1 = random_orthogonal(engine, n);
  const Eigen::MatrixXd q2 = random_orthogonal(engine, n);
  // A fresh spectrum per seed keeps LSQR stopping patterns from lining up
  // across the instances of a batch.
  Vector<double> s(n);
  for (Index i = 0; i < n; ++i) {
    s[i] = detail::uniform(engine, kSmoothSpreadLow, kSmoothSpreadHigh);
  }
  const Eigen::MatrixXd m = q1 * s.asDiagonal() * q2.transpose();
  M_ = m.sparseView();
  M_.makeCompressed();
  for (Index i = 0; i < n; ++i) {
    root_[i] = detail::uniform(engine, 1.0, 2.0);
  }
  const Vector<double> half = Vector<double>::Constant(n, kBoxHalfWidth);
  box_ = Box<double>(root_ - half, root_ + half);
}

Vector<double> SmoothProblem::eval_f(const Vector<double>& x) const {
  const Vector<double> e = x - root_;
  return M_ * e + beta_ * e.cwiseProduct(e);
}

CsrMatrix<double> SmoothProblem::clarke_element(const Vector<double>& x) const {
  CsrMatrix<double> J = M_ + sparse_diagonal<double>(2.0 * beta_ * (x - root_));
  J.makeCompressed();
  return J;
}

ForcingSchedule<double> study_schedule(Regime regime, double mu) {
  constexpr double eta = 0.2;
  constexpr double theta = 0.1;
  switch (regime) {
    case Regime::constant:
      return ForcingSchedule<double>::constant(eta, theta);
    case Regime::vanishing:
      return ForcingSchedule<double>::vanishing(eta, theta);
    case Regime::residual_power:
      return ForcingSchedule<double>::residual_power(mu, eta, theta);
  }
  return ForcingSchedule<double>::constant(eta, theta);
}

bool regime_signature(Regime regime, const StudyReport& report, std::string* why) {
  std::ostringstream msg;
  bool ok = false;
  switch (regime) {
    case Regime::constant:
      ok = report.runs_with_order > 0 && report.median_order >= 0.9 &&
           report.median_order <= 1.3;
      msg << "median order " << report.median_order << " expected in [0.9, 1.3]";
      break;
    case Regime::residual_power:
      ok = report.runs_with_order > 0 && report.median_order >= 1.6;
      msg << "median order " << report.median_order << " expected >= 1.6";
      break;
    case Regime::vanishing: {
      const auto& r = report.mean_ratios;
      const std::size_t w = kVanishingWindow;
      ok = r.size() >= w;
      for (std::size_t i = r.size() >= w ? r.size() - w : 0; ok && i + 1 < r.size(); ++i) {
        ok = r[i + 1] < r[i];
      }
      msg << r.size() << " mean ratios; last " << w << " expected strictly decreasing";
      break;
    }
  }
  const int total = static_cast<int>(report.runs.size());
  if (report.converged != total) {
    ok = false;
    msg << "; " << total - report.converged << " of " << total << " runs did not converge";
  }
  if (why) {
    *why = msg.str();
  }
  return ok;
}

SolveTrace<double> run_single(const StudyOptions& options, std::uint64_t seed) {
  if (options.regime == Regime::residual_power && !(options.mu > 0 && options.mu <= 1)) {
    throw ConfigError("mu must lie in (0, 1]");
  }
  SolverConfig<double> config;
  config.schedule = study_schedule(options.regime, options.mu);
  config.residual_tol = kStudyResidualTol;
  config.max_outer = kStudyMaxOuter;

  auto engine = detail::substream(seed, 1);
  if (options.benchmark == Benchmark::smooth) {
    const Index n = options.n > 0 ? options.n : 20;
    SmoothProblem problem(n, seed);
    const Vector<double> x0 = problem.root() + kStartDistance * random_unit(engine, n);
    return solve<double>(problem, x0, config);
  }
  const Index n = options.n > 0 ? options.n : 50;
  cave::CaveProblem problem(cave::generate(n, kCaveDensity, seed));
  const auto& inst = problem.instance();
  const double gamma = cave::lipschitz_gamma(inst);
  // eta_bar from the same formula as the experiments; theta_bar stays at the
  // study value.
  config.schedule.eta_bar = cave::default_eta(config.schedule.theta_bar, gamma);
  config.gamma_hint = gamma;
  config.lambda_hint = cave::kLambdaHint;
  // ||f|| cannot be evaluated below about eps ||A|| ||x||.
  config.residual_tol = std::max(
      kStudyResidualTol, kCaveResidualFloorFactor * std::numeric_limits<double>::epsilon() *
                             gamma * norm2(inst.x_star));
  // Move inward from x_star: x0 stays positive and below the budget, and f
  // is affine on the segment to x_star.
  Vector<double> x0 = inst.x_star;
  for (Index i = 0; i < n; ++i) {
    x0[i] -= kCaveStartRelative * inst.x_star[i] * detail::open_unit(engine);
  }
  return solve<double>(problem, x0, config);
}

StudyReport run_study(const StudyOptions& options) {
  if (options.runs < 1) {
    throw std::invalid_argument("run_study: runs must be positive");
  }
  StudyReport report;
  std::vector<double> orders;
  std::vector<double> log_sum;
  std::vector<int> counts;
  for (int r = 0; r < options.runs; ++r) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(r);
    const SolveTrace<double> trace = run_single(options, seed);
    RunSummary run;
    run.seed = seed;
    run.status = trace.status;
    run.iterations = trace.iterations();
    run.errors = trace.errors();
    const std::span<const double> e(run.errors);
    run.order = estimate_order<double>(e, trace.solution_scale);
    run.contraction = check_contraction<double>(e, trace.solution_scale);
    report.converged += trace.status == SolveStatus::converged;
    report.contracting += run.contraction;
    if (run.order.confidence == OrderConfidence::ok) {
      orders.push_back(run.order.order);
    }
    const double floor = kErrorFloor * trace.solution_scale;
    for (std::size_t k = 0; k + 1 < run.errors.size(); ++k) {
      if (run.errors[k] > floor && run.errors[k + 1] > floor) {
        if (log_sum.size() <= k) {
          log_sum.resize(k + 1, 0.0);
          counts.resize(k + 1, 0);
        }
        log_sum[k] += std::log(run.errors[k + 1] / run.errors[k]);
        ++counts[k];
      }
    }
    report.runs.push_back(std::move(run));
  }
  report.runs_with_order = static_cast<int>(orders.size());
  if (!orders.empty()) {
    std::sort(orders.begin(), orders.end());
    const std::size_t m = orders.size();
    report.median_order = m % 2 == 1 ? orders[m / 2] : 0.5 * (orders[m / 2 - 1] + orders[m / 2]);
  }
  for (std::size_t k = 0; k < log_sum.size(); ++k) {
    if (counts[k] < options.runs) {
      break;
    }
    report.mean_ratios.push_back(std::exp(log_sum[k] / counts[k]));
  }
  report.signature_ok = regime_signature(options.regime, report, &report.verdict);
  return report;
}

}  // namespace inexp::rates
