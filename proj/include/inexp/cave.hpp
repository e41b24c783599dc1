#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "inexp/linalg.hpp"
#include "inexp/newton.hpp"
#include "inexp/sets.hpp"

namespace inexp::cave {

using VectorXd = Vector<double>;
using SparseMatrix = CsrMatrix<double>;

/// Constrained absolute value equation A x - |x| = b over the budget simplex
/// {x >= 0, sum(x) <= d}, with a planted solution.
struct CaveInstance {
  SparseMatrix A;
  VectorXd b;
  double d = 0;
  VectorXd x_star;
  std::uint64_t seed = 0;
  double density = 0;

  Index n() const { return A.rows(); }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest accepted sigma_min of the unscaled draw before a retry.
inline constexpr double kMinRawSigma = 1e-10;
inline constexpr int kMaxGenerationAttempts = 10;
/// sigma_min(A) = kSigmaTarget / u with u ~ U(0, 1), so ||A^{-1}|| < 1/3.
inline constexpr double kSigmaTarget = 3.0;
inline constexpr double kSolutionLow = 0.1;
inline constexpr double kSolutionHigh = 300.0;

/// Componentwise sign with sgn(0) = 0.
VectorXd sgn(const VectorXd& x);

/// A x - |x| - b.
VectorXd residual(const CaveInstance& inst, const VectorXd& x);

/// A - diag(sgn(x)), an element of the Clarke generalized Jacobian at x.
SparseMatrix clarke_element(const CaveInstance& inst, const VectorXd& x);

/**
 * Random instance, deterministic in (n, density, seed).
 *
 * A0 has singular values sigma_i ~ U(0, 1) and is built from diag(sigma) by
 * random plane rotations of rows and columns until it holds round(density n^2)
 * nonzeros. Then A = 3 / (sigma_min u) A0 with u ~ U(0, 1), so
 * sigma_min(A) = 3 / u > 3.
 *
 * Draw order within one attempt: sigma, rotations (row pair and angle, then
 * column pair and angle), u, x_star. Attempt a uses the stream seeded with
 * seed_seq{seed_lo, seed_hi, a}; an attempt is redrawn when sigma_min < 1e-10.
 */
CaveInstance generate(Index n, double density, std::uint64_t seed);

/// Density of the experiments at n >= 1000.
inline constexpr double kBaseDensity = 0.003;

/// kBaseDensity, raised to 3/n below n = 1000 so that smaller instances keep
/// three nonzeros per row.
inline double default_density(Index n) {
  return std::max(kBaseDensity, 3.0 / static_cast<double>(n));
}

/// The constant vector d / (2n).
VectorXd start_point(const CaveInstance& inst);

/// sigma_max(A) + 1, the Lipschitz constant of x -> A x - |x|.
double lipschitz_gamma(const CaveInstance& inst);

/// sigma_min(V) >= sigma_min(A) - 1 >= 2 gives ||V^{-1}|| <= 1/2.
inline constexpr double kLambdaHint = 0.5;

/// 0.9999 (1 - sqrt(2 theta)) / (lambda Gamma (1 + sqrt(2 theta))).
double default_eta(double theta, double gamma, double lambda = kLambdaHint);

class CaveProblem final : public ConstrainedProblem<double> {
 public:
  explicit CaveProblem(CaveInstance inst);

  Index dimension() const override { return inst_.n(); }
  VectorXd eval_f(const VectorXd& x) const override { return residual(inst_, x); }
  SparseMatrix clarke_element(const VectorXd& x) const override {
    return cave::clarke_element(inst_, x);
  }
  const FeasibleSet<double>& feasible_set() const override { return set_; }
  std::optional<VectorXd> known_solution() const override { return inst_.x_star; }
  const CaveInstance& instance() const { return inst_; }

 private:
  CaveInstance inst_;
  BudgetSimplex<double> set_;
};

}  // namespace inexp::cave
