#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "inexp/linalg.hpp"
#include "inexp/lsqr.hpp"
#include "inexp/projection.hpp"
#include "inexp/sets.hpp"

namespace inexp {

/**
 * The constrained equation x in C, f(x) = 0 for a locally Lipschitz f.
 *
 * clarke_element(x) returns one element of the Clarke generalized Jacobian of
 * f at x (the Jacobian itself when f is differentiable there). The choice of
 * element when the set is not a singleton belongs to the problem.
 */
template <typename Scalar>
class ConstrainedProblem {
 public:
  virtual ~ConstrainedProblem() = default;

  virtual Index dimension() const = 0;
  virtual Vector<Scalar> eval_f(const Vector<Scalar>& x) const = 0;
  virtual CsrMatrix<Scalar> clarke_element(const Vector<Scalar>& x) const = 0;
  virtual const FeasibleSet<Scalar>& feasible_set() const = 0;
  virtual std::optional<Vector<Scalar>> known_solution() const { return std::nullopt; }
};

enum class ScheduleKind { constant, vanishing, residual_power };

template <typename Scalar>
struct Forcing {
  Scalar eta = 0;
  Scalar theta = 0;
};

/**
 * Forcing terms (eta_k for the linear solve, theta_k for the projection).
 *
 *   constant:       eta_k = eta_bar,          theta_k = theta_bar           (Q-linear)
 *   vanishing:      eta_k = eta_bar/(k+1),    theta_k = theta_bar/(k+1)^2   (Q-superlinear)
 *   residual_power: eta_k = min(eta_bar |f|^mu, eta_bar),
 *                   theta_k = min(theta_bar |f|^(2 mu), theta_bar)       (order 1 + mu)
 *
 * For local convergence, theta_bar < 1/2 and
 *   eta_bar < (1 - sqrt(2 theta_bar)) / (lambda Gamma (1 + sqrt(2 theta_bar))),
 * where Gamma is a Lipschitz-type constant of f at the solution and lambda
 * bounds ||V^{-1}|| there.
 */
template <typename Scalar>
struct ForcingSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  Scalar eta_bar = 0;
  Scalar theta_bar = 0;
  Scalar mu = 1;

  static ForcingSchedule constant(Scalar eta, Scalar theta) {
    return {ScheduleKind::constant, eta, theta, 1};
  }
  static ForcingSchedule vanishing(Scalar eta, Scalar theta) {
    return {ScheduleKind::vanishing, eta, theta, 1};
  }
  static ForcingSchedule residual_power(Scalar mu, Scalar eta, Scalar theta) {
    return {ScheduleKind::residual_power, eta, theta, mu};
  }

  Forcing<Scalar> at(int k, Scalar residual_norm) const {
    switch (kind) {
      case ScheduleKind::constant:
        return {eta_bar, theta_bar};
      case ScheduleKind::vanishing: {
        const auto k1 = static_cast<Scalar>(k + 1);
        return {eta_bar / k1, theta_bar / (k1 * k1)};
      }
      case ScheduleKind::residual_power:
        return {std::min(eta_bar * std::pow(residual_norm, mu), eta_bar),
                std::min(theta_bar * std::pow(residual_norm, 2 * mu), theta_bar)};
    }
    return {eta_bar, theta_bar};
  }
};

/// Largest admissible eta_bar for a given theta_bar, lambda and Gamma.
template <typename Scalar>
Scalar eta_upper_bound(Scalar theta_bar, Scalar lambda, Scalar gamma) {
  const Scalar r = std::sqrt(2 * theta_bar);
  return (1 - r) / (lambda * gamma * (1 + r));
}

enum class ProjectionMode { condg, exact };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct SolverConfig {
  ForcingSchedule<Scalar> schedule;
  Scalar residual_tol = Scalar(1e-6);
  int max_outer = 50;
  /// LSQR cap per attempt; unset means 2n.
  std::optional<int> max_inner_linear;
  int max_inner_proj = kDefaultProjectionIterations;
  std::optional<Scalar> gamma_hint;
  std::optional<Scalar> lambda_hint;
  ProjectionMode projection_mode = ProjectionMode::condg;
  /// CondG start; retraction falls back to x_k for sets without one.
  CondgStart condg_start = CondgStart::retraction;
  /// Keep x_0, x_1, ... and the linear steps s_0, s_1, ... in the trace.
  bool keep_iterates = false;
  /// Abort when ||f(x_k)|| exceeds this multiple of ||f(x_0)||.
  Scalar divergence_factor = Scalar(1e6);

  /**
   * Throws ConfigError on invalid settings. Returns warnings for checks that
   * could not be run (eta_bar admissibility without both hints).
   */
  std::vector<std::string> validate() const {
    std::vector<std::string> warnings;
    if (!(residual_tol > 0)) {
      throw ConfigError("residual_tol must be positive");
    }
    if (max_outer < 1 || max_inner_proj < 1 ||
        (max_inner_linear && *max_inner_linear < 1)) {
      throw ConfigError("iteration caps must be >= 1");
    }
    const auto& s = schedule;
    if (!(s.theta_bar >= 0) || !(s.theta_bar < Scalar(0.5))) {
      throw ConfigError("theta_bar must lie in [0, 1/2)");
    }
    if (!(s.eta_bar >= 0) || !(s.eta_bar < 1)) {
      throw ConfigError("eta_bar must lie in [0, 1)");
    }
    if (s.kind == ScheduleKind::residual_power && !(s.mu > 0 && s.mu <= 1)) {
      throw ConfigError("mu must lie in (0, 1]");
    }
    if (gamma_hint && lambda_hint) {
      const Scalar bound = eta_upper_bound(s.theta_bar, *lambda_hint, *gamma_hint);
      if (!(s.eta_bar < bound)) {
        throw ConfigError("eta_bar violates (1 - sqrt(2 theta)) / (lambda Gamma (1 + sqrt(2 theta)))");
      }
    } else {
      warnings.emplace_back(
          "eta_bar admissibility not checked: gamma_hint and lambda_hint are both required");
    }
    return warnings;
  }
};

template <typename Scalar>
struct IterationRecord {
  int k = 0;
  Scalar residual_norm = 0;
  Scalar eta_k = 0;
  Scalar theta_k = 0;
  int inner_linear_iters = 0;
  int inner_proj_iters = 0;
  /// ||f(x_k) + V_k (y_k - x_k)|| / ||f(x_k)||, recomputed by the driver.
  Scalar linear_relative_residual = 0;
  bool linear_certificate_ok = false;
  /// y_k was outside C and a projection produced x_{k+1}.
  bool projected = false;
  /// True when no projection was needed.
  bool projection_certified = true;
  Scalar projection_gap = 0;
  Scalar step_norm = 0;
  /// x_k satisfies contains(C, x_k, kMembershipTol).
  bool iterate_feasible = true;
  std::optional<Scalar> error_to_solution;
};

enum class SolveStatus { converged, max_iterations, inner_failure, diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::inner_failure:
      return "inner_failure";
    case SolveStatus::diverged:
      return "diverged";
  }
  return "unknown";
}

template <typename Scalar>
struct SolveTrace {
  /// One record per Newton step taken.
  std::vector<IterationRecord<Scalar>> records;
  SolveStatus status = SolveStatus::max_iterations;
  Vector<Scalar> final_point;
  Scalar final_residual = 0;
  bool final_feasible = true;
  std::optional<Scalar> final_error;
  /// max(1, ||x_bar||) when a solution is known.
  Scalar solution_scale = 1;
  double wall_time = 0;
  std::string diagnostic;
  std::vector<Vector<Scalar>> iterates;
  /// s_k with y_k = x_k + s_k, one per record.
  std::vector<Vector<Scalar>> steps;

  int iterations() const { return static_cast<int>(records.size()); }

  /// ||x_k - x_bar|| for k = 0..K, including the final point.
  std::vector<Scalar> errors() const {
    std::vector<Scalar> e;
    for (const auto& r : records) {
      if (r.error_to_solution) {
        e.push_back(*r.error_to_solution);
      }
    }
    if (final_error) {
      e.push_back(*final_error);
    }
    return e;
  }
};

/**
 * Inexact Newton method with feasible inexact projections.
 *
 * At x_k: stop if ||f(x_k)|| < residual_tol; otherwise take V_k from the
 * problem, solve V_k s = -f(x_k) by LSQR to relative residual eta_k, set
 * y_k = x_k + s, and accept y_k if it is in C. Otherwise x_{k+1} is a feasible
 * inexact projection of y_k relative to x_k with tolerance theta_k (CondG), or
 * the exact projection in exact mode. CondG starts from the set's cheap
 * retraction of y_k when it has one and that point is closer to y_k than x_k.
 *
 * An LSQR solve that misses eta_k is retried once with twice the iteration
 * cap; a second miss ends the run with inner_failure. A CondG run that does
 * not certify still yields a feasible point, which is accepted and flagged.
 */
template <typename Scalar>
SolveTrace<Scalar> solve(const ConstrainedProblem<Scalar>& problem,
                         const Vector<Scalar>& x0, const SolverConfig<Scalar>& config) {
  config.validate();
  const auto& set = problem.feasible_set();
  const Index n = problem.dimension();
  require_dims(x0.size() == n && set.dimension() == n, "solve: dimension mismatch");
  if (!set.contains(x0)) {
    throw std::invalid_argument("solve: starting point is not feasible");
  }

  const auto start = std::chrono::steady_clock::now();
  SolveTrace<Scalar> trace;
  const auto solution = problem.known_solution();
  if (solution) {
    trace.solution_scale = std::max(Scalar(1), norm2(*solution));
  }
  auto error_at = [&](const Vector<Scalar>& x) -> std::optional<Scalar> {
    if (!solution) {
      return std::nullopt;
    }
    return norm2(Vector<Scalar>(x - *solution));
  };

  const int linear_cap = config.max_inner_linear.value_or(default_lsqr_iterations(n));
  Vector<Scalar> x = x0;
  Vector<Scalar> f = problem.eval_f(x);
  Scalar fnorm = norm2(f);
  const Scalar f0norm = fnorm;
  bool finished = false;

  for (int k = 0; !finished; ++k) {
    if (config.keep_iterates) {
      trace.iterates.push_back(x);
    }
    if (!std::isfinite(fnorm)) {
      trace.status = SolveStatus::diverged;
      trace.diagnostic = "non-finite residual at iteration " + std::to_string(k);
      break;
    }
    if (fnorm < config.residual_tol) {
      trace.status = SolveStatus::converged;
      break;
    }
    if (fnorm > config.divergence_factor * f0norm) {
      trace.status = SolveStatus::diverged;
      trace.diagnostic = "residual grew beyond the divergence guard at iteration " +
                         std::to_string(k);
      break;
    }
    if (k == config.max_outer) {
      trace.status = SolveStatus::max_iterations;
      break;
    }

    IterationRecord<Scalar> rec;
    rec.k = k;
    rec.residual_norm = fnorm;
    rec.error_to_solution = error_at(x);
    rec.iterate_feasible = set.contains(x);
    const Forcing<Scalar> forcing = config.schedule.at(k, fnorm);
    rec.eta_k = forcing.eta;
    rec.theta_k = config.projection_mode == ProjectionMode::exact ? Scalar(0) : forcing.theta;

    const CsrMatrix<Scalar> V = problem.clarke_element(x);
    require_dims(V.rows() == n && V.cols() == n, "solve: Clarke element must be n x n");
    const Vector<Scalar> rhs = -f;
    auto lin = lsqr_solve(V, rhs, forcing.eta, linear_cap);
    rec.inner_linear_iters = lin.iterations;
    if (!lin.satisfied) {
      lin = lsqr_solve(V, rhs, forcing.eta, 2 * linear_cap);
      rec.inner_linear_iters += lin.iterations;
    }
    const Vector<Scalar>& s = lin.solution;
    if (config.keep_iterates) {
      trace.steps.push_back(s);
    }
    rec.linear_relative_residual = norm2(Vector<Scalar>(f + V * s)) / fnorm;
    const Scalar eta_eff = std::max(forcing.eta, static_cast<Scalar>(kExactSolveTolerance));
    rec.linear_certificate_ok = lin.satisfied && rec.linear_relative_residual <= eta_eff;
    if (!rec.linear_certificate_ok) {
      trace.status = SolveStatus::inner_failure;
      trace.diagnostic = "linear solve missed eta_k at iteration " + std::to_string(k);
      trace.records.push_back(rec);
      break;
    }

    Vector<Scalar> y = x + s;
    Vector<Scalar> next;
    if (set.contains(y)) {
      next = std::move(y);
    } else {
      rec.projected = true;
      ProjectionResult<Scalar> proj =
          config.projection_mode == ProjectionMode::exact
              ? exact_as_inexact(set, y, x)
              : condg_project(set, y, x, forcing.theta, config.max_inner_proj,
                              config.condg_start);
      rec.inner_proj_iters = proj.certificate.inner_iterations;
      rec.projection_certified = proj.certificate.certified;
      rec.projection_gap = proj.certificate.final_gap;
      next = std::move(proj.point);
    }
    rec.step_norm = norm2(Vector<Scalar>(next - x));
    trace.records.push_back(rec);

    x = std::move(next);
    f = problem.eval_f(x);
    fnorm = norm2(f);
  }

  trace.final_point = x;
  trace.final_residual = fnorm;
  trace.final_feasible = set.contains(x);
  trace.final_error = error_at(x);
  trace.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

enum class OrderConfidence { ok, insufficient_data };

template <typename Scalar>
struct OrderEstimate {
  Scalar order = 0;
  OrderConfidence confidence = OrderConfidence::insufficient_data;
  int pairs_used = 0;
};

/// Errors at or below this multiple of the scale are treated as the
/// floating-point floor and excluded from rate estimates.
inline constexpr double kErrorFloor = 1e-14;

/**
 * Least-squares slope of log e_{k+1} against log e_k over consecutive pairs
 * with both errors above kErrorFloor * scale. Fewer than three usable pairs
 * gives insufficient_data.
 */
template <typename Scalar>
OrderEstimate<Scalar> estimate_order(std::span<const Scalar> errors, Scalar scale = 1) {
  const Scalar floor = static_cast<Scalar>(kErrorFloor) * scale;
  std::vector<Scalar> xs;
  std::vector<Scalar> ys;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const Scalar a = errors[k];
    const Scalar b = errors[k + 1];
    if (a > floor && b > floor && std::isfinite(a) && std::isfinite(b)) {
      xs.push_back(std::log(a));
      ys.push_back(std::log(b));
    }
  }
  OrderEstimate<Scalar> out;
  out.pairs_used = static_cast<int>(xs.size());
  if (xs.size() < 3) {
    return out;
  }
  const auto m = static_cast<Scalar>(xs.size());
  Scalar mx = 0;
  Scalar my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  Scalar sxy = 0;
  Scalar sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0)) {
    return out;
  }
  out.order = sxy / sxx;
  out.confidence = OrderConfidence::ok;
  return out;
}

template <typename Scalar>
OrderEstimate<Scalar> estimate_order(const SolveTrace<Scalar>& trace) {
  const auto e = trace.errors();
  return estimate_order<Scalar>(std::span<const Scalar>(e), trace.solution_scale);
}

/// True iff e_{k+1} < e_k whenever e_k is above 100 eps * scale.
template <typename Scalar>
bool check_contraction(std::span<const Scalar> errors, Scalar scale = 1) {
  const Scalar floor = 100 * std::numeric_limits<Scalar>::epsilon() * scale;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] > floor && !(errors[k + 1] < errors[k])) {
      return false;
    }
  }
  return true;
}

template <typename Scalar>
bool check_contraction(const SolveTrace<Scalar>& trace) {
  const auto e = trace.errors();
  return check_contraction<Scalar>(std::span<const Scalar>(e), trace.solution_scale);
}

/// e_{k+1}/e_k for consecutive errors above the floor.
template <typename Scalar>
std::vector<Scalar> error_ratios(std::span<const Scalar> errors, Scalar scale = 1) {
  const Scalar floor = static_cast<Scalar>(kErrorFloor) * scale;
  std::vector<Scalar> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] > floor && errors[k + 1] > floor) {
      out.push_back(errors[k + 1] / errors[k]);
    }
  }
  return out;
}

}  // namespace inexp
