#include "inexp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace inexp::io {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_std(const Vector<double>& v) {
  return {v.data(), v.data() + v.size()};
}

Vector<double> from_json_array(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) {
    throw IoError(std::string("instance sidecar: '") + field + "' must be an array");
  }
  Vector<double> v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw IoError(std::string("instance sidecar: '") + field + "' holds a non-number");
    }
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

std::string lower(std::string s) {
  for (auto& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << text;
  out.close();
  if (!out) {
    throw IoError("write to " + path.string() + " failed");
  }
}

void write_matrix_market(const fs::path& path, const CsrMatrix<double>& A) {
  std::ostringstream s;
  s << "%%MatrixMarket matrix coordinate real general\n";
  s << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (Index r = 0; r < A.outerSize(); ++r) {
    for (CsrMatrix<double>::InnerIterator it(A, r); it; ++it) {
      s << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
    }
  }
  write_text(path, s.str());
}

CsrMatrix<double> read_matrix_market(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(path.string() + ": empty file");
  }
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
    throw IoError(path.string() + ": expected a coordinate Matrix Market file");
  }
  field = lower(field);
  if (field != "real" && field != "integer") {
    throw IoError(path.string() + ": unsupported field '" + field + "'");
  }
  if (lower(symmetry) != "general") {
    throw IoError(path.string() + ": only general symmetry is supported");
  }
  while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
  }
  long long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream size(line);
    if (!(size >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw IoError(path.string() + ": bad size line");
    }
  }
  std::vector<Eigen::Triplet<double, int>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long long k = 0; k < nnz; ++k) {
    long long i = 0, j = 0;
    double v = 0;
    if (!(in >> i >> j >> v)) {
      throw IoError(path.string() + ": expected " + std::to_string(nnz) + " entries");
    }
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw IoError(path.string() + ": entry index out of range");
    }
    entries.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
  }
  CsrMatrix<double> A(static_cast<Index>(rows), static_cast<Index>(cols));
  A.setFromTriplets(entries.begin(), entries.end());
  A.makeCompressed();
  return A;
}

void save_instance(const fs::path& out, const cave::CaveInstance& inst) {
  fs::path stem = out;
  stem.replace_extension();
  const fs::path mtx = fs::path(stem).concat(".mtx");
  const fs::path sidecar = fs::path(stem).concat(".json");
  if (!stem.parent_path().empty()) {
    fs::create_directories(stem.parent_path());
  }
  write_matrix_market(mtx, inst.A);
  nlohmann::json j;
  j["n"] = inst.n();
  j["density"] = inst.density;
  j["seed"] = inst.seed;
  j["d"] = inst.d;
  j["b"] = to_std(inst.b);
  j["x_star"] = to_std(inst.x_star);
  j["matrix_file"] = mtx.filename().string();
  write_text(sidecar, j.dump(2) + "\n");
}

cave::CaveInstance load_instance(const fs::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) {
    throw IoError("cannot open " + sidecar.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(sidecar.string() + ": " + e.what());
  }
  for (const char* key : {"n", "d", "b", "matrix_file"}) {
    if (!j.contains(key)) {
      throw IoError(sidecar.string() + ": missing '" + key + "'");
    }
  }
  cave::CaveInstance inst;
  inst.A = read_matrix_market(sidecar.parent_path() / j["matrix_file"].get<std::string>());
  const auto n = j["n"].get<Index>();
  inst.b = from_json_array(j["b"], "b");
  inst.d = j["d"].get<double>();
  inst.density = j.value("density", 0.0);
  inst.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("x_star")) {
    inst.x_star = from_json_array(j["x_star"], "x_star");
  }
  if (inst.A.rows() != n || inst.A.cols() != n || inst.b.size() != n ||
      (inst.x_star.size() != 0 && inst.x_star.size() != n)) {
    throw IoError(sidecar.string() + ": dimensions do not match n");
  }
  if (!(inst.d > 0)) {
    throw IoError(sidecar.string() + ": d must be positive");
  }
  return inst;
}

nlohmann::json trace_to_json(const SolveTrace<double>& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json j;
    j["k"] = r.k;
    j["residual_norm"] = r.residual_norm;
    j["eta_k"] = r.eta_k;
    j["theta_k"] = r.theta_k;
    j["inner_linear_iters"] = r.inner_linear_iters;
    j["inner_proj_iters"] = r.inner_proj_iters;
    j["linear_relative_residual"] = r.linear_relative_residual;
    j["linear_certificate_ok"] = r.linear_certificate_ok;
    j["projected"] = r.projected;
    j["projection_certified"] = r.projection_certified;
    j["projection_gap"] = r.projection_gap;
    j["step_norm"] = r.step_norm;
    j["iterate_feasible"] = r.iterate_feasible;
    j["error_to_solution"] =
        r.error_to_solution ? nlohmann::json(*r.error_to_solution) : nlohmann::json(nullptr);
    records.push_back(std::move(j));
  }
  nlohmann::json out;
  out["status"] = to_string(trace.status);
  out["iterations"] = trace.iterations();
  out["final_residual"] = trace.final_residual;
  out["final_feasible"] = trace.final_feasible;
  out["final_error"] =
      trace.final_error ? nlohmann::json(*trace.final_error) : nlohmann::json(nullptr);
  out["wall_time"] = trace.wall_time;
  out["diagnostic"] = trace.diagnostic;
  out["records"] = std::move(records);
  return out;
}

}  // namespace inexp::io
