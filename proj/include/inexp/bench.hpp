#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inexp/newton.hpp"

namespace inexp::bench {

enum class Method { exp, inexp };

const char* to_string(Method m);
Method parse_method(const std::string& s);

/// theta for each method in the CAVE experiments.
inline constexpr double kExpTheta = 1e-8;
inline constexpr double kInexpTheta = 1e-1;

struct RunOutcome {
  std::uint64_t instance_seed = 0;
  Index n = 0;
  Method method = Method::exp;
  bool solved = false;
  int iterations = 0;
  double wall_time = 0;
  double final_residual = 0;
};

/// A method and its solver settings. eta_bar is replaced per instance by
/// cave::default_eta(theta_bar, Gamma) unless fixed_eta is set.
struct MethodConfig {
  Method method = Method::exp;
  SolverConfig<double> config;
  bool fixed_eta = false;
};

/// The two variants of the experiments: constant schedules with theta 1e-8
/// (exp) and 1e-1 (inexp), CondG projections, tol 1e-6, 50 iterations.
MethodConfig standard_method(Method m);

struct SuiteOptions {
  std::vector<Index> ns;
  int instances_per_n = 20;
  /// Unset picks cave::default_density(n) per n.
  std::optional<double> density;
  /// Instance i at every n uses seed base_seed + i.
  std::uint64_t base_seed = 0;
  /// wall_time is the median over this many repetitions.
  int reps = 3;
  /// Worker threads for instance generation; solves always run one at a time.
  int jobs = 1;
  std::vector<MethodConfig> methods{standard_method(Method::exp), standard_method(Method::inexp)};
  /// Called after the first repetition of every run, in suite order.
  std::function<void(const RunOutcome&, const SolveTrace<double>&)> on_run;
};

std::uint64_t instance_seed(std::uint64_t base_seed, int i);

/**
 * Runs every method on instances_per_n generated CAVEs for each n. Outcomes
 * are ordered by n, then instance, then method order. Solver exceptions turn
 * into unsolved rows; generation failures propagate.
 */
std::vector<RunOutcome> run_suite(const SuiteOptions& options);

enum class Measure { time, iterations };
const char* to_string(Measure m);
Measure parse_measure(const std::string& s);

struct ProfileCurve {
  std::string label;
  /// (tau, rho(tau)) at every jump, starting at tau = 1; rho is right-continuous
  /// and constant after the last point.
  std::vector<std::pair<double, double>> breakpoints;
  double solved_fraction = 0;
};

class ProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Dolan-More performance profiles over problems keyed by (n, seed). The
 * ratio of a solved run is its measure over the best solved measure on that
 * problem; unsolved runs get +inf. Every method must cover the same problems.
 * Zero measures (a start that already satisfies the tolerance) count as one
 * iteration or one nanosecond.
 */
std::vector<ProfileCurve> performance_profile(const std::vector<RunOutcome>& outcomes,
                                              Measure measure);

/// rho(tau) for a curve.
double profile_value(const ProfileCurve& curve, double tau);

struct SummaryRow {
  Index n = 0;
  Method method = Method::exp;
  int runs = 0;
  double percent_solved = 0;
  /// Means over all runs of the group.
  double mean_iterations = 0;
  double mean_time = 0;
};

/// One row per (n, method) present, ordered by n then method.
std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& outcomes);

std::string outcomes_csv(const std::vector<RunOutcome>& outcomes);
std::vector<RunOutcome> parse_outcomes_csv(const std::string& text);
std::vector<RunOutcome> read_outcomes_csv(const std::filesystem::path& path);
std::string outcomes_json(const std::vector<RunOutcome>& outcomes);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_json(const std::vector<SummaryRow>& rows);
/// Fixed-width table: one row per (n, method).
std::string summary_table(const std::vector<SummaryRow>& rows);

std::string profile_csv(const std::vector<ProfileCurve>& curves);
std::string profile_json(const std::vector<ProfileCurve>& curves);
/// Self-contained SVG step plot, tau on [1, tau_max] and rho on [0, 1].
std::string profile_svg(const std::vector<ProfileCurve>& curves, const std::string& title);

}  // namespace inexp::bench
