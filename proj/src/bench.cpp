#include "inexp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "inexp/cave.hpp"

namespace inexp::bench {

namespace {

constexpr double kSolvedTol = 1e-6;
constexpr int kMaxIterations = 50;
constexpr double kMinTime = 1e-9;
const char* const kCsvHeader = "seed,n,method,solved,iterations,time_s,final_residual";

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_ratio(double v) {
  return std::isinf(v) ? "inf" : fmt(v);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::vector<cave::CaveInstance> generate_all(Index n, int count, double density,
                                             std::uint64_t base_seed, int jobs) {
  std::vector<std::optional<cave::CaveInstance>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        slots[i] = cave::generate(n, density, instance_seed(base_seed, i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }
  std::vector<cave::CaveInstance> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (errors[i]) {
      std::rethrow_exception(errors[i]);
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) {
    parts.push_back(cur);
  }
  if (!line.empty() && line.back() == sep) {
    parts.emplace_back();
  }
  return parts;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) {
    throw std::invalid_argument("trailing characters in '" + s + "'");
  }
  return v;
}

double measure_of(const RunOutcome& o, Measure m) {
  return m == Measure::time ? std::max(o.wall_time, kMinTime)
                            : std::max(1.0, static_cast<double>(o.iterations));
}

}  // namespace

const char* to_string(Method m) {
  return m == Method::exp ? "exp" : "inexp";
}

Method parse_method(const std::string& s) {
  if (s == "exp") return Method::exp;
  if (s == "inexp") return Method::inexp;
  throw std::invalid_argument("unknown method: " + s);
}

const char* to_string(Measure m) {
  return m == Measure::time ? "time" : "iterations";
}

Measure parse_measure(const std::string& s) {
  if (s == "time") return Measure::time;
  if (s == "iterations") return Measure::iterations;
  throw std::invalid_argument("unknown measure: " + s);
}

MethodConfig standard_method(Method m) {
  MethodConfig mc;
  mc.method = m;
  const double theta = m == Method::exp ? kExpTheta : kInexpTheta;
  // eta_bar is filled in per instance.
  mc.config.schedule = ForcingSchedule<double>::constant(0.0, theta);
  mc.config.residual_tol = kSolvedTol;
  mc.config.max_outer = kMaxIterations;
  mc.config.projection_mode = ProjectionMode::condg;
  return mc;
}

std::uint64_t instance_seed(std::uint64_t base_seed, int i) {
  return base_seed + static_cast<std::uint64_t>(i);
}

std::vector<RunOutcome> run_suite(const SuiteOptions& options) {
  if (options.instances_per_n < 0 || options.reps < 1) {
    throw std::invalid_argument("run_suite: instances_per_n must be >= 0 and reps >= 1");
  }
  std::vector<RunOutcome> out;
  for (const Index n : options.ns) {
    const double density = options.density.value_or(cave::default_density(n));
    const auto instances = generate_all(n, options.instances_per_n, density,
                                        options.base_seed, options.jobs);
    for (const auto& inst : instances) {
      const cave::CaveProblem problem(inst);
      const double gamma = cave::lipschitz_gamma(inst);
      const Vector<double> x0 = cave::start_point(inst);
      for (const auto& mc : options.methods) {
        SolverConfig<double> config = mc.config;
        if (!mc.fixed_eta) {
          config.schedule.eta_bar = cave::default_eta(config.schedule.theta_bar, gamma);
        }
        config.gamma_hint = gamma;
        config.lambda_hint = cave::kLambdaHint;

        RunOutcome row;
        row.instance_seed = inst.seed;
        row.n = n;
        row.method = mc.method;
        std::vector<double> times;
        try {
          for (int rep = 0; rep < options.reps; ++rep) {
            const SolveTrace<double> trace = solve<double>(problem, x0, config);
            times.push_back(trace.wall_time);
            if (rep == 0) {
              row.iterations = trace.iterations();
              row.final_residual = trace.final_residual;
              row.solved = trace.status == SolveStatus::converged &&
                           trace.final_residual < kSolvedTol &&
                           row.iterations <= kMaxIterations;
              if (options.on_run) {
                options.on_run(row, trace);
              }
            }
          }
          row.wall_time = median(times);
        } catch (const std::exception&) {
          row.solved = false;
          row.final_residual = std::numeric_limits<double>::quiet_NaN();
          row.wall_time = times.empty() ? 0.0 : median(times);
        }
        out.push_back(row);
      }
    }
  }
  return out;
}

std::vector<ProfileCurve> performance_profile(const std::vector<RunOutcome>& outcomes,
                                              Measure measure) {
  using Key = std::pair<Index, std::uint64_t>;
  std::map<Method, std::map<Key, const RunOutcome*>> by_method;
  for (const auto& o : outcomes) {
    auto& runs = by_method[o.method];
    if (!runs.emplace(Key{o.n, o.instance_seed}, &o).second) {
      throw ProfileError("duplicate outcome for method " + std::string(to_string(o.method)) +
                         " at n=" + std::to_string(o.n) +
                         " seed=" + std::to_string(o.instance_seed));
    }
  }
  if (by_method.empty()) {
    return {};
  }
  std::set<Key> problems;
  for (const auto& [key, run] : by_method.begin()->second) {
    problems.insert(key);
  }
  for (const auto& [method, runs] : by_method) {
    if (runs.size() != problems.size() ||
        !std::all_of(runs.begin(), runs.end(),
                     [&](const auto& kv) { return problems.count(kv.first) == 1; })) {
      throw ProfileError("methods cover different instance sets");
    }
  }

  std::map<Key, double> best;
  for (const auto& key : problems) {
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [method, runs] : by_method) {
      const RunOutcome& o = *runs.at(key);
      if (o.solved) {
        b = std::min(b, measure_of(o, measure));
      }
    }
    best[key] = b;
  }

  const double P = static_cast<double>(problems.size());
  std::vector<ProfileCurve> curves;
  for (const auto& [method, runs] : by_method) {
    std::vector<double> ratios;
    for (const auto& [key, o] : runs) {
      ratios.push_back(o->solved ? measure_of(*o, measure) / best[key]
                                 : std::numeric_limits<double>::infinity());
    }
    std::sort(ratios.begin(), ratios.end());
    ProfileCurve c;
    c.label = to_string(method);
    std::size_t i = 0;
    while (i < ratios.size() && ratios[i] <= 1.0) {
      ++i;
    }
    c.breakpoints.emplace_back(1.0, static_cast<double>(i) / P);
    while (i < ratios.size() && std::isfinite(ratios[i])) {
      const double tau = ratios[i];
      while (i < ratios.size() && ratios[i] == tau) {
        ++i;
      }
      c.breakpoints.emplace_back(tau, static_cast<double>(i) / P);
    }
    c.solved_fraction = c.breakpoints.back().second;
    curves.push_back(std::move(c));
  }
  return curves;
}

double profile_value(const ProfileCurve& curve, double tau) {
  double rho = 0;
  for (const auto& [t, r] : curve.breakpoints) {
    if (t > tau) {
      break;
    }
    rho = r;
  }
  return rho;
}

std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& outcomes) {
  std::map<std::pair<Index, Method>, SummaryRow> groups;
  for (const auto& o : outcomes) {
    SummaryRow& row = groups[{o.n, o.method}];
    row.n = o.n;
    row.method = o.method;
    ++row.runs;
    row.percent_solved += o.solved ? 1.0 : 0.0;
    row.mean_iterations += o.iterations;
    row.mean_time += o.wall_time;
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, row] : groups) {
    const double r = row.runs;
    row.percent_solved *= 100.0 / r;
    row.mean_iterations /= r;
    row.mean_time /= r;
    rows.push_back(row);
  }
  return rows;
}

std::string outcomes_csv(const std::vector<RunOutcome>& outcomes) {
  std::ostringstream s;
  s << kCsvHeader << '\n';
  for (const auto& o : outcomes) {
    s << o.instance_seed << ',' << o.n << ',' << to_string(o.method) << ','
      << (o.solved ? 1 : 0) << ',' << o.iterations << ',' << fmt(o.wall_time) << ','
      << fmt(o.final_residual) << '\n';
  }
  return s.str();
}

std::vector<RunOutcome> parse_outcomes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || (line.empty() ? line : line.substr(0, line.find('\r'))) !=
                                      kCsvHeader) {
    throw std::invalid_argument(std::string("outcome CSV must start with '") + kCsvHeader + "'");
  }
  std::vector<RunOutcome> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 7) {
      throw std::invalid_argument("outcome CSV line " + std::to_string(lineno) +
                                  ": expected 7 fields");
    }
    try {
      RunOutcome o;
      o.instance_seed = std::stoull(f[0]);
      o.n = std::stol(f[1]);
      o.method = parse_method(f[2]);
      if (f[3] != "0" && f[3] != "1") {
        throw std::invalid_argument("solved must be 0 or 1");
      }
      o.solved = f[3] == "1";
      o.iterations = std::stoi(f[4]);
      o.wall_time = parse_double(f[5]);
      o.final_residual = parse_double(f[6]);
      out.push_back(o);
    } catch (const std::exception& e) {
      throw std::invalid_argument("outcome CSV line " + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return out;
}

std::vector<RunOutcome> read_outcomes_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream s;
  s << in.rdbuf();
  return parse_outcomes_csv(s.str());
}

std::string outcomes_json(const std::vector<RunOutcome>& outcomes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& o : outcomes) {
    arr.push_back({{"seed", o.instance_seed},
                   {"n", o.n},
                   {"method", to_string(o.method)},
                   {"solved", o.solved},
                   {"iterations", o.iterations},
                   {"time_s", o.wall_time},
                   {"final_residual", std::isfinite(o.final_residual)
                                          ? nlohmann::json(o.final_residual)
                                          : nlohmann::json(nullptr)}});
  }
  return arr.dump(2) + "\n";
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream s;
  s << "n,method,runs,percent_solved,mean_iterations,mean_time_s\n";
  for (const auto& r : rows) {
    s << r.n << ',' << to_string(r.method) << ',' << r.runs << ',' << fmt(r.percent_solved)
      << ',' << fmt(r.mean_iterations) << ',' << fmt(r.mean_time) << '\n';
  }
  return s.str();
}

std::string summary_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"n", r.n},
                   {"method", to_string(r.method)},
                   {"runs", r.runs},
                   {"percent_solved", r.percent_solved},
                   {"mean_iterations", r.mean_iterations},
                   {"mean_time_s", r.mean_time}});
  }
  return arr.dump(2) + "\n";
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream s;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%8s  %-6s  %6s  %8s  %10s\n", "n", "method", "%", "Iter",
                "Time");
  s << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%8ld  %-6s  %6.1f  %8.2f  %10.4f\n",
                  static_cast<long>(r.n), to_string(r.method), r.percent_solved,
                  r.mean_iterations, r.mean_time);
    s << buf;
  }
  return s.str();
}

std::string profile_csv(const std::vector<ProfileCurve>& curves) {
  std::ostringstream s;
  s << "method,tau,rho\n";
  for (const auto& c : curves) {
    for (const auto& [tau, rho] : c.breakpoints) {
      s << c.label << ',' << fmt_ratio(tau) << ',' << fmt(rho) << '\n';
    }
  }
  return s.str();
}

std::string profile_json(const std::vector<ProfileCurve>& curves) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : curves) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [tau, rho] : c.breakpoints) {
      pts.push_back({tau, rho});
    }
    arr.push_back(
        {{"method", c.label}, {"solved_fraction", c.solved_fraction}, {"breakpoints", pts}});
  }
  return arr.dump(2) + "\n";
}

std::string profile_svg(const std::vector<ProfileCurve>& curves, const std::string& title) {
  constexpr double W = 640, H = 420, left = 60, right = 130, top = 40, bottom = 50;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  double tau_max = 1.0;
  for (const auto& c : curves) {
    tau_max = std::max(tau_max, c.breakpoints.back().first);
  }
  tau_max = tau_max <= 1.0 ? 2.0 : 1.0 + 1.1 * (tau_max - 1.0);
  auto sx = [&](double tau) { return left + pw * (tau - 1.0) / (tau_max - 1.0); };
  auto sy = [&](double rho) { return top + ph * (1.0 - rho); };
  auto p = [](double v) { return fmt(v, "%.2f"); };

  std::string esc;
  for (char ch : title) {
    switch (ch) {
      case '&': esc += "&amp;"; break;
      case '<': esc += "&lt;"; break;
      case '>': esc += "&gt;"; break;
      case '"': esc += "&quot;"; break;
      default: esc += ch;
    }
  }

  static const char* const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << p(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
    << esc << "</text>\n";
  s << "<g stroke=\"black\" fill=\"none\">\n";
  s << "<line x1=\"" << p(left) << "\" y1=\"" << p(top + ph) << "\" x2=\"" << p(left + pw)
    << "\" y2=\"" << p(top + ph) << "\"/>\n";
  s << "<line x1=\"" << p(left) << "\" y1=\"" << p(top) << "\" x2=\"" << p(left) << "\" y2=\""
    << p(top + ph) << "\"/>\n";
  s << "</g>\n";
  s << "<g text-anchor=\"middle\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double tau = 1.0 + (tau_max - 1.0) * i / 4.0;
    s << "<text x=\"" << p(sx(tau)) << "\" y=\"" << p(top + ph + 18) << "\">"
      << fmt(tau, "%.3g") << "</text>\n";
  }
  s << "<text x=\"" << p(left + pw / 2) << "\" y=\"" << p(H - 10) << "\">tau</text>\n";
  s << "</g>\n";
  s << "<g text-anchor=\"end\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double rho = i / 4.0;
    s << "<text x=\"" << p(left - 6) << "\" y=\"" << p(sy(rho) + 4) << "\">"
      << fmt(rho, "%.2f") << "</text>\n";
  }
  s << "</g>\n";
  s << "<text x=\"16\" y=\"" << p(top + ph / 2) << "\" transform=\"rotate(-90 16 "
    << p(top + ph / 2) << ")\" text-anchor=\"middle\">rho(tau)</text>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const char* color = colors[ci % std::size(colors)];
    std::ostringstream pts;
    const auto& bp = c.breakpoints;
    for (std::size_t i = 0; i < bp.size(); ++i) {
      const double x = sx(bp[i].first);
      if (i > 0) {
        pts << ' ' << p(x) << ',' << p(sy(bp[i - 1].second));
      }
      pts << (i > 0 ? " " : "") << p(x) << ',' << p(sy(bp[i].second));
    }
    pts << ' ' << p(sx(tau_max)) << ',' << p(sy(bp.back().second));
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
      << pts.str() << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(ci);
    s << "<line x1=\"" << p(left + pw + 12) << "\" y1=\"" << p(ly - 4) << "\" x2=\""
      << p(left + pw + 36) << "\" y2=\"" << p(ly - 4) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << p(left + pw + 42) << "\" y=\"" << p(ly) << "\">" << c.label
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace inexp::bench
