#include "inexp/cave.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <map>
#include <vector>

#include "random.hpp"

namespace inexp::cave {

VectorXd sgn(const VectorXd& x) {
  VectorXd s(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    s[i] = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
  }
  return s;
}

VectorXd residual(const CaveInstance& inst, const VectorXd& x) {
  require_dims(x.size() == inst.n(), "cave::residual: dimension mismatch");
  return inst.A * x - x.cwiseAbs() - inst.b;
}

SparseMatrix clarke_element(const CaveInstance& inst, const VectorXd& x) {
  require_dims(x.size() == inst.n(), "cave::clarke_element: dimension mismatch");
  const VectorXd s = sgn(x);
  std::vector<Eigen::Triplet<double, int>> diag;
  diag.reserve(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    if (s[i] != 0.0) {
      diag.emplace_back(static_cast<int>(i), static_cast<int>(i), s[i]);
    }
  }
  SparseMatrix D(x.size(), x.size());
  D.setFromTriplets(diag.begin(), diag.end());
  SparseMatrix V = inst.A - D;
  V.makeCompressed();
  return V;
}

namespace {

// Sparse matrix under construction, indexed both ways so that row and column
// rotations only touch the affected entries.
class RotatingMatrix {
 public:
  explicit RotatingMatrix(const VectorXd& diag)
      : rows_(static_cast<std::size_t>(diag.size())),
        cols_(static_cast<std::size_t>(diag.size())) {
    for (Index i = 0; i < diag.size(); ++i) {
      rows_[i][static_cast<int>(i)] = diag[i];
      cols_[i][static_cast<int>(i)] = diag[i];
    }
    nnz_ = static_cast<std::size_t>(diag.size());
  }

  std::size_t nnz() const { return nnz_; }

  /// [row_i; row_j] <- [c s; -s c] [row_i; row_j].
  void rotate_rows(int i, int j, double c, double s) {
    rotate(rows_, cols_, i, j, c, s);
  }

  /// [col_i, col_j] <- [col_i, col_j] [c -s; s c].
  void rotate_cols(int i, int j, double c, double s) {
    rotate(cols_, rows_, i, j, c, s);
  }

  SparseMatrix to_csr() const {
    std::vector<int> row_ptr{0};
    std::vector<int> col_idx;
    std::vector<double> values;
    for (const auto& row : rows_) {
      for (const auto& [c, v] : row) {
        col_idx.push_back(c);
        values.push_back(v);
      }
      row_ptr.push_back(static_cast<int>(col_idx.size()));
    }
    const auto n = static_cast<Index>(rows_.size());
    return make_csr<double>(n, n, row_ptr, col_idx, values);
  }

 private:
  using Line = std::map<int, double>;

  // Rotates lines i and j of `major`, mirroring the changes into `minor`.
  void rotate(std::vector<Line>& major, std::vector<Line>& minor, int i, int j,
              double c, double s) {
    std::vector<int> keys;
    for (const auto& kv : major[i]) keys.push_back(kv.first);
    for (const auto& kv : major[j]) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const int k : keys) {
      const auto it_i = major[i].find(k);
      const auto it_j = major[j].find(k);
      const double a = it_i == major[i].end() ? 0.0 : it_i->second;
      const double b = it_j == major[j].end() ? 0.0 : it_j->second;
      set(major, minor, i, k, c * a + s * b);
      set(major, minor, j, k, -s * a + c * b);
    }
  }

  void set(std::vector<Line>& major, std::vector<Line>& minor, int line, int k,
           double value) {
    auto [it, inserted] = major[line].try_emplace(k, value);
    if (inserted) {
      ++nnz_;
    } else {
      it->second = value;
    }
    minor[k][line] = value;
  }

  std::vector<Line> rows_;
  std::vector<Line> cols_;
  std::size_t nnz_ = 0;
};

int random_other(std::mt19937_64& engine, Index n, int avoid) {
  // Uniform over {0..n-1} minus `avoid`.
  auto r = static_cast<int>(detail::uniform_index(engine, static_cast<std::uint64_t>(n - 1)));
  return r >= avoid ? r + 1 : r;
}

/**
 * diag(sigma) followed by random Jacobi rotations from the left and the right
 * until the requested density is reached. Rotations are orthogonal, so the
 * singular values of the result are exactly sigma (up to rounding).
 */
SparseMatrix prescribed_spectrum_matrix(std::mt19937_64& engine, const VectorXd& sigma,
                                        double density) {
  const Index n = sigma.size();
  const auto target = static_cast<std::size_t>(
      std::llround(density * static_cast<double>(n) * static_cast<double>(n)));
  RotatingMatrix R(sigma);
  constexpr double kTwoPi = 6.283185307179586;
  while (R.nnz() < target) {
    const auto i = static_cast<int>(detail::uniform_index(engine, static_cast<std::uint64_t>(n)));
    const int j = random_other(engine, n, i);
    const double angle = kTwoPi * detail::open_unit(engine);
    R.rotate_rows(i, j, std::cos(angle), std::sin(angle));

    const auto k = static_cast<int>(detail::uniform_index(engine, static_cast<std::uint64_t>(n)));
    const int l = random_other(engine, n, k);
    const double angle2 = kTwoPi * detail::open_unit(engine);
    R.rotate_cols(k, l, std::cos(angle2), std::sin(angle2));
  }
  return R.to_csr();
}

}  // namespace

CaveInstance generate(Index n, double density, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("cave::generate: n must be at least 2");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("cave::generate: density must lie in (0, 1]");
  }
  if (static_cast<double>(n) * density < 1.0) {
    throw std::invalid_argument(
        "cave::generate: n * density must be at least one nonzero per row");
  }

  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    auto engine = detail::substream(seed, static_cast<std::uint32_t>(attempt));
    VectorXd sigma(n);
    for (Index i = 0; i < n; ++i) {
      sigma[i] = detail::open_unit(engine);
    }
    const double sigma_min = sigma.minCoeff();
    if (!(sigma_min >= kMinRawSigma)) {
      continue;
    }
    const SparseMatrix A0 = prescribed_spectrum_matrix(engine, sigma, density);

    const double u = detail::open_unit(engine);
    CaveInstance inst;
    inst.A = (kSigmaTarget / (sigma_min * u)) * A0;
    inst.A.makeCompressed();
    inst.x_star.resize(n);
    for (Index i = 0; i < n; ++i) {
      inst.x_star[i] = detail::uniform(engine, kSolutionLow, kSolutionHigh);
    }
    inst.b = inst.A * inst.x_star - inst.x_star.cwiseAbs();
    inst.d = accurate_sum(inst.x_star);
    inst.seed = seed;
    inst.density = density;
    return inst;
  }
  throw GenerationError("cave::generate: no well-conditioned draw after " +
                        std::to_string(kMaxGenerationAttempts) + " attempts");
}

VectorXd start_point(const CaveInstance& inst) {
  return VectorXd::Constant(inst.n(), inst.d / (2.0 * static_cast<double>(inst.n())));
}

double lipschitz_gamma(const CaveInstance& inst) {
  return sigma_extremes(inst.A, 1e-10, 5000, 0).sigma_max + 1.0;
}

double default_eta(double theta, double gamma, double lambda) {
  return 0.9999 * eta_upper_bound(theta, lambda, gamma);
}

CaveProblem::CaveProblem(CaveInstance inst)
    : inst_(std::move(inst)), set_(inst_.n(), inst_.d) {}

}  // namespace inexp::cave
