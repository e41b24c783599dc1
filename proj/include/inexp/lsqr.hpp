#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "inexp/linalg.hpp"

namespace inexp {

/// Relative residual that stands in for an exact solve (rel_tol == 0).
inline constexpr double kExactSolveTolerance = 1e-14;

/// A solve stops when the best relative residual improves by less than this
/// over kStagnationWindow iterations.
inline constexpr double kStagnationImprovement = 1e-16;
inline constexpr int kStagnationWindow = 5;

template <typename Scalar>
struct LinearSolveResult {
  Vector<Scalar> solution;
  /// ||rhs - A*solution|| / ||rhs||, recomputed from the returned solution.
  Scalar final_relative_residual = 0;
  int iterations = 0;
  /// final_relative_residual <= max(rel_tol, kExactSolveTolerance).
  bool satisfied = false;
  /// The bidiagonalization produced a zero vector before the tolerance was met.
  bool breakdown = false;
  bool stagnated = false;
  /// True relative residual after every iteration (index 0 is the zero start).
  std::vector<Scalar> residual_history;
};

inline int default_lsqr_iterations(Index n) { return static_cast<int>(2 * n); }

template <typename Scalar>
Scalar relative_residual(const CsrMatrix<Scalar>& A, const Vector<Scalar>& rhs,
                         const Vector<Scalar>& x) {
  return norm2(Vector<Scalar>(rhs - A * x)) / norm2(rhs);
}

/**
 * Solves the square system A s = rhs with the Paige–Saunders LSQR recurrences
 * started from s = 0.
 *
 * The stopping test is on the true residual ||rhs - A s|| / ||rhs||, recomputed
 * after every bidiagonalization step, not on the least-squares estimates the
 * recurrences carry. If the tolerance is not reached within max_iter steps the
 * iterate with the smallest true residual is returned with satisfied = false.
 */
template <typename Scalar>
LinearSolveResult<Scalar> lsqr_solve(const CsrMatrix<Scalar>& A,
                                     const Vector<Scalar>& rhs, Scalar rel_tol,
                                     int max_iter) {
  if (A.rows() != A.cols()) {
    throw DimensionError("lsqr_solve: matrix must be square");
  }
  require_dims(A.rows() == rhs.size(), "lsqr_solve: A.rows() != rhs.size()");
  if (!(rel_tol >= 0) || max_iter < 1) {
    throw std::invalid_argument("lsqr_solve: rel_tol >= 0 and max_iter >= 1 required");
  }
  const Scalar rhs_norm = norm2(rhs);
  if (!(rhs_norm > 0) || !std::isfinite(rhs_norm)) {
    throw std::invalid_argument("lsqr_solve: rhs must be nonzero and finite");
  }
  const Scalar tol = std::max(rel_tol, static_cast<Scalar>(kExactSolveTolerance));

  const Index n = A.cols();
  LinearSolveResult<Scalar> out;
  Vector<Scalar> x = Vector<Scalar>::Zero(n);
  Vector<Scalar> best = x;
  Scalar best_rel = 1;
  out.residual_history.push_back(best_rel);

  // Bidiagonalization start: beta u = rhs, alpha v = A^T u.
  Vector<Scalar> u = rhs / rhs_norm;
  Vector<Scalar> v = A.transpose() * u;
  Scalar alpha = norm2(v);
  if (alpha == Scalar(0)) {
    out.solution = x;
    out.final_relative_residual = 1;
    out.breakdown = true;
    out.satisfied = out.final_relative_residual <= tol;
    return out;
  }
  v /= alpha;
  Vector<Scalar> w = v;
  Scalar phi_bar = rhs_norm;
  Scalar rho_bar = alpha;

  std::vector<Scalar> best_trail{best_rel};
  int it = 0;
  while (it < max_iter) {
    ++it;
    u = A * v - alpha * u;
    const Scalar beta = norm2(u);
    if (beta > 0) {
      u /= beta;
      v = A.transpose() * u - beta * v;
      alpha = norm2(v);
      if (alpha > 0) {
        v /= alpha;
      }
    } else {
      alpha = 0;
    }

    const Scalar rho = std::hypot(rho_bar, beta);
    const Scalar c = rho_bar / rho;
    const Scalar s = beta / rho;
    const Scalar theta = s * alpha;
    rho_bar = -c * alpha;
    const Scalar phi = c * phi_bar;
    phi_bar = s * phi_bar;

    x += (phi / rho) * w;
    w = v - (theta / rho) * w;

    const Scalar rel = relative_residual(A, rhs, x);
    out.residual_history.push_back(rel);
    if (rel < best_rel) {
      best_rel = rel;
      best = x;
    }
    best_trail.push_back(best_rel);

    if (rel <= tol) {
      best = x;
      best_rel = rel;
      break;
    }
    if (beta == Scalar(0) || alpha == Scalar(0)) {
      out.breakdown = true;
      break;
    }
    if (static_cast<int>(best_trail.size()) > kStagnationWindow) {
      const Scalar earlier = best_trail[best_trail.size() - 1 - kStagnationWindow];
      if (earlier - best_rel < static_cast<Scalar>(kStagnationImprovement)) {
        out.stagnated = true;
        break;
      }
    }
  }

  out.solution = std::move(best);
  out.iterations = it;
  out.final_relative_residual = relative_residual(A, rhs, out.solution);
  out.satisfied = out.final_relative_residual <= tol;
  return out;
}

}  // namespace inexp
