// Command-line front end: generate, solve, bench, profile, rates.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "inexp/bench.hpp"
#include "inexp/cave.hpp"
#include "inexp/io.hpp"
#include "inexp/rates.hpp"

namespace fs = std::filesystem;
using namespace inexp;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kGeneration = 3,
  kNotConverged = 4,
  kRateFailure = 5,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_jobs() {
  if (const char* env = std::getenv("NEWTON_INEXP_JOBS")) {
    try {
      const int j = std::stoi(env);
      if (j >= 1) {
        return j;
      }
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring NEWTON_INEXP_JOBS='" << env << "'\n";
  }
  return 1;
}

const CLI::Validator kUnitMu(
    [](std::string& s) -> std::string {
      double v = 0;
      if (!CLI::detail::lexical_cast(s, v) || !(v > 0 && v <= 1)) {
        return "mu must lie in (0, 1]";
      }
      return {};
    },
    "(0,1]");

const CLI::Validator kUnitDensity(
    [](std::string& s) -> std::string {
      double v = 0;
      if (!CLI::detail::lexical_cast(s, v) || !(v > 0 && v <= 1)) {
        return "density must lie in (0, 1]";
      }
      return {};
    },
    "(0,1]");

ScheduleKind parse_policy(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "vanishing") return ScheduleKind::vanishing;
  if (s == "residual-power" || s == "residual_power") return ScheduleKind::residual_power;
  throw UsageError("unknown eta policy: " + s);
}

// ---- generate

struct GenerateArgs {
  Index n = 0;
  std::optional<double> density;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  cave::CaveInstance inst;
  try {
    inst = cave::generate(a.n, a.density.value_or(cave::default_density(a.n)), a.seed);
  } catch (const cave::GenerationError& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kGeneration;
  }
  io::save_instance(a.out, inst);
  const auto s = sigma_extremes(inst.A, 1e-10, 5000);
  std::printf("sigma_min %.17g\n", s.sigma_min);
  std::printf("d %.17g\n", inst.d);
  return kOk;
}

// ---- solve

struct SolveArgs {
  std::string instance;
  std::string method = "inexp";
  std::optional<double> theta;
  std::optional<double> eta;
  std::string eta_policy = "constant";
  double mu = 1.0;
  int max_iter = 50;
  double tol = 1e-6;
  std::string trace_out;
};

int cmd_solve(const SolveArgs& a) {
  if (!fs::exists(a.instance)) {
    throw UsageError("instance file not found: " + a.instance);
  }
  const bench::Method method = bench::parse_method(a.method);
  const cave::CaveProblem problem(io::load_instance(a.instance));
  const auto& inst = problem.instance();

  const double theta = a.theta.value_or(method == bench::Method::exp ? bench::kExpTheta
                                                                     : bench::kInexpTheta);
  const double gamma = cave::lipschitz_gamma(inst);
  const double eta = a.eta.value_or(cave::default_eta(theta, gamma));

  SolverConfig<double> config;
  switch (parse_policy(a.eta_policy)) {
    case ScheduleKind::constant:
      config.schedule = ForcingSchedule<double>::constant(eta, theta);
      break;
    case ScheduleKind::vanishing:
      config.schedule = ForcingSchedule<double>::vanishing(eta, theta);
      break;
    case ScheduleKind::residual_power:
      config.schedule = ForcingSchedule<double>::residual_power(a.mu, eta, theta);
      break;
  }
  config.residual_tol = a.tol;
  config.max_outer = a.max_iter;
  config.gamma_hint = gamma;
  config.lambda_hint = cave::kLambdaHint;
  try {
    for (const auto& w : config.validate()) {
      std::cerr << "warning: " << w << '\n';
    }
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  const auto trace = solve<double>(problem, cave::start_point(inst), config);
  if (!a.trace_out.empty()) {
    io::write_text(a.trace_out, io::trace_to_json(trace).dump(2) + "\n");
  }
  std::printf("status %s\n", to_string(trace.status));
  std::printf("iterations %d\n", trace.iterations());
  std::printf("residual %.6e\n", trace.final_residual);
  if (trace.final_error) {
    std::printf("error %.6e\n", *trace.final_error);
  }
  if (!trace.diagnostic.empty()) {
    std::printf("diagnostic %s\n", trace.diagnostic.c_str());
  }
  return trace.status == SolveStatus::converged ? kOk : kNotConverged;
}

// ---- bench

struct BenchArgs {
  std::vector<Index> ns;
  int count = 20;
  std::optional<double> density;
  std::uint64_t seed = 0;
  int reps = 3;
  int jobs = 1;
  std::string out_dir = "bench_out";
};

int cmd_bench(const BenchArgs& a) {
  bench::SuiteOptions opt;
  opt.ns = a.ns;
  opt.instances_per_n = a.count;
  opt.density = a.density;
  opt.base_seed = a.seed;
  opt.reps = a.reps;
  opt.jobs = a.jobs;
  opt.on_run = [](const bench::RunOutcome& o, const SolveTrace<double>&) {
    std::fprintf(stderr, "n=%ld seed=%llu %-5s %s it=%d res=%.2e\n", static_cast<long>(o.n),
                 static_cast<unsigned long long>(o.instance_seed), bench::to_string(o.method),
                 o.solved ? "solved  " : "unsolved", o.iterations, o.final_residual);
  };
  std::vector<bench::RunOutcome> outcomes;
  try {
    outcomes = bench::run_suite(opt);
  } catch (const cave::GenerationError& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kGeneration;
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_text(dir / "outcomes.csv", bench::outcomes_csv(outcomes));
  io::write_text(dir / "outcomes.json", bench::outcomes_json(outcomes));
  const auto rows = bench::summarize(outcomes);
  io::write_text(dir / "summary.csv", bench::summary_csv(rows));
  io::write_text(dir / "summary.json", bench::summary_json(rows));
  const std::string table = bench::summary_table(rows);
  io::write_text(dir / "summary.txt", table);
  std::cout << table;

  int completed = 0;
  for (const auto& o : outcomes) {
    completed += std::isfinite(o.final_residual);
  }
  if (completed == 0) {
    std::cerr << "no run completed\n";
    return kNotConverged;
  }
  for (const auto m : {bench::Measure::iterations, bench::Measure::time}) {
    const auto curves = bench::performance_profile(outcomes, m);
    const std::string stem = std::string("profile_") + bench::to_string(m);
    io::write_text(dir / (stem + ".csv"), bench::profile_csv(curves));
    io::write_text(dir / (stem + ".svg"),
                   bench::profile_svg(curves, std::string("Performance profile (") +
                                                  bench::to_string(m) + ")"));
  }
  return kOk;
}

// ---- profile

struct ProfileArgs {
  std::string in;
  std::string measure = "iterations";
  std::string format = "svg";
  std::string out;
};

int cmd_profile(const ProfileArgs& a) {
  if (!fs::exists(a.in)) {
    throw UsageError("outcome file not found: " + a.in);
  }
  const auto measure = bench::parse_measure(a.measure);
  std::vector<bench::ProfileCurve> curves;
  try {
    curves = bench::performance_profile(bench::read_outcomes_csv(a.in), measure);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::string text;
  if (a.format == "csv") {
    text = bench::profile_csv(curves);
  } else if (a.format == "json") {
    text = bench::profile_json(curves);
  } else {
    text = bench::profile_svg(curves, std::string("Performance profile (") +
                                          bench::to_string(measure) + ")");
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    io::write_text(a.out, text);
  }
  return kOk;
}

// ---- rates

struct RatesArgs {
  std::string regime = "constant";
  double mu = 1.0;
  std::string problem = "smooth";
  std::uint64_t seed = 0;
  int runs = rates::StudyOptions{}.runs;
  Index n = 0;
};

int cmd_rates(const RatesArgs& a) {
  rates::StudyOptions opt;
  opt.regime = rates::parse_regime(a.regime);
  opt.mu = a.mu;
  opt.benchmark = rates::parse_benchmark(a.problem);
  opt.seed = a.seed;
  opt.runs = a.runs;
  opt.n = a.n;
  const auto report = rates::run_study(opt);
  std::printf("regime %s problem %s runs %d\n", rates::to_string(opt.regime),
              rates::to_string(opt.benchmark), opt.runs);
  std::printf("converged %d/%zu contracting %d/%zu\n", report.converged, report.runs.size(),
              report.contracting, report.runs.size());
  std::printf("median order %.4f (from %d runs)\n", report.median_order,
              report.runs_with_order);
  std::printf("mean ratios");
  for (const double r : report.mean_ratios) {
    std::printf(" %.4g", r);
  }
  std::printf("\n");
  std::printf("signature %s: %s\n", report.signature_ok ? "ok" : "FAILED",
              report.verdict.c_str());
  return report.signature_ok ? kOk : kRateFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact Newton with feasible inexact projections"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a CAVE instance");
  g->add_option("--n", gen.n, "Dimension")->required()->check(CLI::PositiveNumber);
  g->add_option("--density", gen.density, "Fraction of nonzeros (default max(0.003, 3/n))")
      ->check(kUnitDensity);
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output stem; writes <stem>.mtx and <stem>.json")->required();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Solve a stored CAVE instance");
  s->add_option("--instance", sol.instance, "JSON sidecar written by generate")->required();
  s->add_option("--method", sol.method)
      ->capture_default_str()
      ->check(CLI::IsMember({"exp", "inexp"}));
  s->add_option("--theta", sol.theta, "Projection tolerance (default 1e-8 exp, 1e-1 inexp)")
      ->check(CLI::Range(0.0, 0.5));
  s->add_option("--eta", sol.eta, "Forcing bound (default from theta and Gamma)")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--eta-policy", sol.eta_policy)
      ->capture_default_str()
      ->check(CLI::IsMember({"constant", "vanishing", "residual-power"}));
  s->add_option("--mu", sol.mu)->capture_default_str()->check(kUnitMu);
  s->add_option("--max-iter", sol.max_iter)->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--tol", sol.tol)->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--trace-out", sol.trace_out, "Write the iteration trace as JSON");

  BenchArgs ben;
  ben.jobs = default_jobs();
  auto* b = app.add_subcommand("bench", "Run both methods over generated instances");
  b->add_option("--ns", ben.ns, "Dimensions, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  b->add_option("--count", ben.count, "Instances per n")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  b->add_option("--density", ben.density, "Default max(0.003, 3/n) per n")->check(kUnitDensity);
  b->add_option("--seed", ben.seed, "Instance i uses seed + i")->capture_default_str();
  b->add_option("--reps", ben.reps, "Timing repetitions")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  b->add_option("--jobs", ben.jobs, "Generation workers (default NEWTON_INEXP_JOBS or 1)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  b->add_option("--out-dir", ben.out_dir)->capture_default_str();

  ProfileArgs prof;
  auto* p = app.add_subcommand("profile", "Performance profile of an outcome CSV");
  p->add_option("--in", prof.in, "outcomes.csv written by bench")->required();
  p->add_option("--measure", prof.measure)
      ->capture_default_str()
      ->check(CLI::IsMember({"time", "iterations"}));
  p->add_option("--format", prof.format)
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  p->add_option("--out", prof.out, "Output file (default stdout)");

  RatesArgs rat;
  auto* r = app.add_subcommand("rates", "Convergence-rate study for a forcing regime");
  r->add_option("--regime", rat.regime)
      ->capture_default_str()
      ->check(CLI::IsMember({"constant", "vanishing", "residual-power"}));
  r->add_option("--mu", rat.mu)->capture_default_str()->check(kUnitMu);
  r->add_option("--problem", rat.problem)
      ->capture_default_str()
      ->check(CLI::IsMember({"cave", "smooth"}));
  r->add_option("--seed", rat.seed, "Run i uses seed + i")->capture_default_str();
  r->add_option("--runs", rat.runs)->capture_default_str()->check(CLI::PositiveNumber);
  r->add_option("--n", rat.n, "Dimension (0 picks the benchmark default)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(sol);
    if (*b) return cmd_bench(ben);
    if (*p) return cmd_profile(prof);
    if (*r) return cmd_rates(rat);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
