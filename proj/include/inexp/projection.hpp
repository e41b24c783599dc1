#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "inexp/linalg.hpp"
#include "inexp/sets.hpp"

namespace inexp {

/// CondG iteration cap used when none is given.
inline constexpr int kDefaultProjectionIterations = 100;

/// Where CondG starts: at the anchor x, or at the set's retraction of y when
/// it has one (falling back to x otherwise).
enum class CondgStart { anchor, retraction };

/// Evidence that a point w lies in the feasible inexact projection set
/// {w in C : <y - w, z - w> <= theta ||y - x||^2 for all z in C}.
template <typename Scalar>
struct ProjectionCertificate {
  Scalar theta_used = 0;
  /// ||y - x||.
  Scalar anchor_distance = 0;
  /// max over C of <y - w, z - w>, measured at the returned point.
  Scalar final_gap = 0;
  int inner_iterations = 0;
  bool certified = false;
};

template <typename Scalar>
struct ProjectionResult {
  Vector<Scalar> point;
  ProjectionCertificate<Scalar> certificate;
};

/// Rounding bound for <y - w, dz> when w was itself computed from y. An error
/// delta of order eps (|y| + |w|) in w moves the inner product by about
/// <delta, dz> + <y - w, delta>.
template <typename Scalar>
Scalar certificate_slack(const Vector<Scalar>& y, const Vector<Scalar>& w,
                         const Vector<Scalar>& dz) {
  const Scalar magnitude =
      ((y.array().abs() + w.array().abs()) * (dz.array().abs() + (y - w).array().abs()))
          .sum();
  return Scalar(4) * static_cast<Scalar>(y.size() + 2) *
             std::numeric_limits<Scalar>::epsilon() * magnitude +
         std::numeric_limits<Scalar>::min();
}

namespace detail {

/// max_z <y - w, z - w> evaluated through the LMO, and the maximizing vertex.
template <typename Scalar>
Scalar condg_gap(const FeasibleSet<Scalar>& set, const Vector<Scalar>& y,
                 const Vector<Scalar>& w, Vector<Scalar>& vertex) {
  vertex = set.lmo(w - y);
  return (y - w).dot(vertex - w);
}

}  // namespace detail

/**
 * Conditional-gradient (Frank–Wolfe) minimization of 1/2 ||u - y||^2 over C,
 * warm-started at the feasible anchor x and stopped by the gap test
 *
 *   g_t = <y - w_t, v_t - w_t> <= theta ||y - x||^2,   v_t = lmo(w_t - y).
 *
 * Steps use exact line search on the quadratic, gamma_t = min(1, g_t/||v_t - w_t||^2),
 * so every iterate is a convex combination of feasible points. When max_iter
 * updates do not certify, the last iterate (lowest objective) is returned with
 * certified = false.
 */
template <typename Scalar>
ProjectionResult<Scalar> condg_project(const FeasibleSet<Scalar>& set,
                                       const Vector<Scalar>& y,
                                       const Vector<Scalar>& x, Scalar theta,
                                       int max_iter = kDefaultProjectionIterations,
                                       CondgStart start = CondgStart::anchor) {
  require_dims(y.size() == set.dimension() && x.size() == set.dimension(),
               "condg_project: dimension mismatch");
  if (!(theta >= 0) || max_iter < 1) {
    throw std::invalid_argument("condg_project: theta >= 0 and max_iter >= 1 required");
  }
  if (!set.contains(x)) {
    throw std::invalid_argument("condg_project: anchor x is not feasible");
  }

  ProjectionResult<Scalar> out;
  auto& cert = out.certificate;
  cert.theta_used = theta;
  cert.anchor_distance = norm2(Vector<Scalar>(y - x));
  const Scalar threshold = theta * cert.anchor_distance * cert.anchor_distance;

  Vector<Scalar> w = x;
  if (start == CondgStart::retraction) {
    if (auto r = set.retract(y); r && set.contains(*r) &&
                                 (*r - y).squaredNorm() < (x - y).squaredNorm()) {
      w = std::move(*r);
    }
  }
  Vector<Scalar> vertex;
  for (int t = 0;; ++t) {
    const Scalar gap = detail::condg_gap(set, y, w, vertex);
    cert.final_gap = gap;
    cert.inner_iterations = t;
    if (gap <= threshold) {
      cert.certified = true;
      break;
    }
    if (t == max_iter) {
      break;
    }
    const Vector<Scalar> direction = vertex - w;
    const Scalar dir_sq = direction.squaredNorm();
    if (dir_sq == Scalar(0)) {
      throw std::logic_error("condg_project: LMO returned the iterate with a positive gap");
    }
    const Scalar gamma = std::min(Scalar(1), gap / dir_sq);
    w += gamma * direction;
    set.restore_feasibility(w);
  }
  out.point = std::move(w);
  return out;
}

/// The exact projection, reported as a theta = 0 feasible inexact projection.
template <typename Scalar>
ProjectionResult<Scalar> exact_as_inexact(const FeasibleSet<Scalar>& set,
                                          const Vector<Scalar>& y,
                                          const Vector<Scalar>& x) {
  if (!set.has_exact_projection()) {
    throw UnsupportedCapability("exact_as_inexact: set has no exact projection");
  }
  require_dims(y.size() == set.dimension() && x.size() == set.dimension(),
               "exact_as_inexact: dimension mismatch");
  if (!set.contains(x)) {
    throw std::invalid_argument("exact_as_inexact: anchor x is not feasible");
  }
  ProjectionResult<Scalar> out;
  out.point = set.exact_project(y);
  auto& cert = out.certificate;
  cert.theta_used = 0;
  cert.anchor_distance = norm2(Vector<Scalar>(y - x));
  Vector<Scalar> vertex;
  cert.final_gap = detail::condg_gap(set, y, out.point, vertex);
  // Zero up to the rounding of the inner product itself.
  cert.certified = cert.final_gap <=
                   certificate_slack<Scalar>(y, out.point, vertex - out.point);
  return out;
}

template <typename Scalar>
struct CertificateCheck {
  bool passed = false;
  /// false: every vertex was checked, so the answer is exact. true: random
  /// feasible points were sampled and the answer is only probabilistic.
  bool sampled = false;
  int points_checked = 0;
  /// Largest <y - w, z - w> - theta ||y - x||^2 seen.
  Scalar worst_excess = -std::numeric_limits<Scalar>::infinity();

  explicit operator bool() const { return passed; }
};

inline constexpr int kCertificateSamples = 1000;

/**
 * Independent check of <y - w, z - w> <= theta ||y - x||^2 for all z in C,
 * plus w in C. The left side is affine in z, so for polyhedral sets it is
 * enough to test the vertices; other sets are sampled at random feasible
 * points. Each comparison allows the floating-point rounding of the inner
 * product.
 */
template <typename Scalar>
CertificateCheck<Scalar> verify_certificate(const FeasibleSet<Scalar>& set,
                                            const Vector<Scalar>& y,
                                            const Vector<Scalar>& x,
                                            const Vector<Scalar>& w, Scalar theta,
                                            int samples = kCertificateSamples,
                                            std::uint64_t seed = 0x5eedULL) {
  CertificateCheck<Scalar> out;
  const Scalar bound = theta * (y - x).squaredNorm();
  const Vector<Scalar> residual = y - w;
  bool ok = set.contains(w);

  auto check = [&](const Vector<Scalar>& z) {
    const Vector<Scalar> dz = z - w;
    const Scalar lhs = residual.dot(dz);
    out.worst_excess = std::max(out.worst_excess, lhs - bound);
    if (lhs > bound + certificate_slack<Scalar>(y, w, dz)) {
      ok = false;
    }
    ++out.points_checked;
  };

  bool enumerated = false;
  if (set.is_polyhedral()) {
    try {
      for (const auto& z : set.vertices()) {
        check(z);
      }
      enumerated = true;
    } catch (const UnsupportedCapability&) {
      enumerated = false;
    }
  }
  if (!enumerated) {
    out.sampled = true;
    // Random feasible points: LMO responses to random directions (boundary
    // points) mixed with random convex combinations towards w.
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    for (int s = 0; s < samples; ++s) {
      Vector<Scalar> c(set.dimension());
      for (Index i = 0; i < c.size(); ++i) {
        c[i] = static_cast<Scalar>(normal(engine));
      }
      Vector<Scalar> z = set.lmo(c);
      if (s % 2 == 1) {
        const auto lambda = static_cast<Scalar>(unit(engine));
        z = lambda * z + (Scalar(1) - lambda) * w;
      }
      check(z);
    }
  }
  out.passed = ok;
  return out;
}

}  // namespace inexp
