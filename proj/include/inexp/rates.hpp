#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inexp/newton.hpp"

namespace inexp::rates {

enum class Regime { constant, vanishing, residual_power };
enum class Benchmark { smooth, cave };

const char* to_string(Regime r);
const char* to_string(Benchmark b);
/// Accepts "constant", "vanishing", "residual-power" (or "residual_power").
Regime parse_regime(const std::string& s);
Benchmark parse_benchmark(const std::string& s);

/**
 * f(x) = M (x - r) + beta (x - r).^2 with a known root r, M = Q1 diag(s) Q2
 * built from random rotations and singular values drawn from U(1, 4), and a
 * box around r that never binds along the iteration.
 */
class SmoothProblem final : public ConstrainedProblem<double> {
 public:
  SmoothProblem(Index n, std::uint64_t seed, double beta = 0.5);

  Index dimension() const override { return root_.size(); }
  Vector<double> eval_f(const Vector<double>& x) const override;
  CsrMatrix<double> clarke_element(const Vector<double>& x) const override;
  const FeasibleSet<double>& feasible_set() const override { return box_; }
  std::optional<Vector<double>> known_solution() const override { return root_; }

  const Vector<double>& root() const { return root_; }

 private:
  CsrMatrix<double> M_;
  Vector<double> root_;
  double beta_;
  Box<double> box_;
};

struct StudyOptions {
  Regime regime = Regime::constant;
  double mu = 1.0;
  Benchmark benchmark = Benchmark::smooth;
  /// Run r uses seed + r.
  std::uint64_t seed = 0;
  /// Per-run error ratios jump around with the LSQR stopping step, so the
  /// ratio signature is read off geometric means over a large batch.
  int runs = 1000;
  /// 0 picks the default (20 smooth, 50 cave).
  Index n = 0;
};

struct RunSummary {
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  std::vector<double> errors;
  OrderEstimate<double> order;
  bool contraction = false;
};

struct StudyReport {
  std::vector<RunSummary> runs;
  /// Median of the per-run order estimates with confidence ok.
  double median_order = 0;
  int runs_with_order = 0;
  /// Geometric mean over runs of e_{k+1}/e_k at each k, kept while every run
  /// has that pair above the error floor.
  std::vector<double> mean_ratios;
  int converged = 0;
  int contracting = 0;
  /// The regime's expected signature was observed.
  bool signature_ok = false;
  std::string verdict;
};

/// Forcing schedule used for a regime in the rate studies.
ForcingSchedule<double> study_schedule(Regime regime, double mu);

/// Number of trailing mean ratios that must decrease for the vanishing regime.
inline constexpr int kVanishingWindow = 3;

/**
 * Expected signature per regime:
 *   constant        median order in [0.9, 1.3]
 *   vanishing       the last kVanishingWindow mean ratios strictly decreasing
 *   residual_power  median order >= 1.6
 * Every run must also have converged.
 */
bool regime_signature(Regime regime, const StudyReport& report, std::string* why = nullptr);

/// Runs the regime on a batch of benchmark instances started near their known solutions.
StudyReport run_study(const StudyOptions& options);

/// One run of the batch.
SolveTrace<double> run_single(const StudyOptions& options, std::uint64_t seed);

}  // namespace inexp::rates
