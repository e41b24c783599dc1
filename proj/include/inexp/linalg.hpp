#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace inexp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Compressed-sparse-row matrix. Eigen's compressed row-major storage is CSR:
/// outerIndexPtr() is row_ptr, innerIndexPtr() is col_idx.
template <typename Scalar>
using CsrMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedCapability : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require_dims(bool ok, const char* what) {
  if (!ok) {
    throw DimensionError(what);
  }
}

/**
 * Builds a CSR matrix from raw arrays, rejecting anything that violates the
 * format: row_ptr must start at 0, be non-decreasing and end at nnz; column
 * indices must be strictly increasing within a row and in range; values must
 * be finite.
 */
template <typename Scalar>
CsrMatrix<Scalar> make_csr(Index rows, Index cols, std::span<const int> row_ptr,
                           std::span<const int> col_idx,
                           std::span<const Scalar> values) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("make_csr: dimensions must be positive");
  }
  if (static_cast<Index>(row_ptr.size()) != rows + 1) {
    throw std::invalid_argument("make_csr: row_ptr must have rows+1 entries");
  }
  if (col_idx.size() != values.size()) {
    throw std::invalid_argument("make_csr: col_idx and values differ in length");
  }
  const auto nnz = static_cast<int>(values.size());
  if (row_ptr.front() != 0 || row_ptr.back() != nnz) {
    throw std::invalid_argument("make_csr: row_ptr must span [0, nnz]");
  }
  for (Index r = 0; r < rows; ++r) {
    if (row_ptr[r + 1] < row_ptr[r]) {
      throw std::invalid_argument("make_csr: row_ptr must be non-decreasing");
    }
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      if (col_idx[p] < 0 || col_idx[p] >= cols) {
        throw std::invalid_argument("make_csr: column index out of range");
      }
      if (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1]) {
        throw std::invalid_argument(
            "make_csr: column indices must strictly increase within a row");
      }
      if (!std::isfinite(values[p])) {
        throw std::invalid_argument("make_csr: non-finite value");
      }
    }
  }

  CsrMatrix<Scalar> A(rows, cols);
  A.resizeNonZeros(nnz);
  std::copy(row_ptr.begin(), row_ptr.end(), A.outerIndexPtr());
  std::copy(col_idx.begin(), col_idx.end(), A.innerIndexPtr());
  std::copy(values.begin(), values.end(), A.valuePtr());
  return A;
}

/// Identity of size n in CSR form.
template <typename Scalar>
CsrMatrix<Scalar> sparse_identity(Index n) {
  CsrMatrix<Scalar> I(n, n);
  I.setIdentity();
  return I;
}

template <typename Scalar>
CsrMatrix<Scalar> sparse_diagonal(const Vector<Scalar>& diag) {
  CsrMatrix<Scalar> D(diag.size(), diag.size());
  D.reserve(Eigen::VectorXi::Constant(diag.size(), 1));
  for (Index i = 0; i < diag.size(); ++i) {
    D.insert(i, i) = diag[i];
  }
  D.makeCompressed();
  return D;
}

template <typename Scalar>
Vector<Scalar> matvec(const CsrMatrix<Scalar>& A, const Vector<Scalar>& x) {
  require_dims(A.cols() == x.size(), "matvec: A.cols() != x.size()");
  return A * x;
}

template <typename Scalar>
Vector<Scalar> matvec_transpose(const CsrMatrix<Scalar>& A,
                                const Vector<Scalar>& x) {
  require_dims(A.rows() == x.size(), "matvec_transpose: A.rows() != x.size()");
  return A.transpose() * x;
}

/// Euclidean norm with overflow-safe scaling.
template <typename Derived>
typename Derived::Scalar norm2(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) {
    return typename Derived::Scalar(0);
  }
  return x.stableNorm();
}

template <typename Scalar>
struct SigmaEstimate {
  Scalar sigma_min = 0;
  Scalar sigma_max = 0;
  int iterations_used = 0;
  bool converged = false;
};

/// Below or at this order sigma_min comes from a dense SVD.
inline constexpr Index kDenseSvdThreshold = 512;

namespace detail {

// Deterministic start vector shared by the power iterations.
template <typename Scalar>
Vector<Scalar> start_vector(Index n) {
  std::mt19937_64 engine(0x9e3779b97f4a7c15ULL);
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = Scalar(0.5) + static_cast<Scalar>(engine() >> 11) * Scalar(0x1.0p-53);
  }
  return v / v.norm();
}

template <typename Scalar>
std::pair<Scalar, int> power_sigma_max(const CsrMatrix<Scalar>& A, Scalar tol,
                                       int max_iter, bool& converged) {
  Vector<Scalar> v = start_vector<Scalar>(A.cols());
  Scalar estimate = 0;
  converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    Vector<Scalar> Av = A * v;
    const Scalar next = Av.norm();
    if (next == Scalar(0)) {
      converged = true;
      estimate = 0;
      ++it;
      break;
    }
    Vector<Scalar> w = A.transpose() * Av;
    const Scalar wn = w.norm();
    v = w / wn;
    if (std::abs(next - estimate) <= tol * next) {
      estimate = next;
      converged = true;
      ++it;
      break;
    }
    estimate = next;
  }
  // One last Rayleigh evaluation on the refined vector.
  estimate = std::max(estimate, Vector<Scalar>(A * v).norm());
  return {estimate, it};
}

template <typename Scalar>
std::pair<Scalar, int> inverse_sigma_min(const CsrMatrix<Scalar>& A, Scalar tol,
                                         int max_iter, bool& converged) {
  using ColMajor = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
  ColMajor Ac = A;
  ColMajor At = A.transpose();
  Eigen::SparseLU<ColMajor, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SparseLU<ColMajor, Eigen::COLAMDOrdering<int>> lut;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success) {
    throw SingularMatrixError("sigma_extremes: numerically singular matrix");
  }
  lut.compute(At);
  if (lut.info() != Eigen::Success) {
    throw SingularMatrixError("sigma_extremes: numerically singular matrix");
  }

  // Power iteration on (A^T A)^{-1} = A^{-1} A^{-T}.
  Vector<Scalar> v = start_vector<Scalar>(A.cols());
  Scalar inv_sq = 0;
  converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    Vector<Scalar> w = lut.solve(v);
    Vector<Scalar> z = lu.solve(w);
    const Scalar zn = z.norm();
    if (!std::isfinite(zn) || zn == Scalar(0)) {
      throw SingularMatrixError("sigma_extremes: zero pivot in inverse iteration");
    }
    v = z / zn;
    if (std::abs(zn - inv_sq) <= tol * zn) {
      inv_sq = zn;
      converged = true;
      ++it;
      break;
    }
    inv_sq = zn;
  }
  // v approximates the right singular vector, so ||A^{-T} v|| ~ 1/sigma_min.
  const Scalar inv = Vector<Scalar>(lut.solve(v)).norm();
  return {Scalar(1) / std::max(inv, std::sqrt(inv_sq)), it};
}

}  // namespace detail

/**
 * Extremal singular values of a square sparse matrix.
 *
 * sigma_max comes from power iteration on A^T A. sigma_min comes from a dense
 * SVD when n <= dense_threshold, otherwise from inverse iteration on A^T A
 * using sparse LU factors of A and A^T. tol is the relative change between
 * successive estimates at which an iteration is declared converged.
 */
template <typename Scalar>
SigmaEstimate<Scalar> sigma_extremes(const CsrMatrix<Scalar>& A, Scalar tol,
                                     int max_iter,
                                     Index dense_threshold = kDenseSvdThreshold) {
  if (A.rows() != A.cols()) {
    throw DimensionError("sigma_extremes: matrix must be square");
  }
  if (!(tol > 0) || max_iter < 1) {
    throw std::invalid_argument("sigma_extremes: tol > 0 and max_iter >= 1 required");
  }

  SigmaEstimate<Scalar> out;
  bool max_ok = false;
  auto [smax, it_max] = detail::power_sigma_max(A, tol, max_iter, max_ok);
  out.sigma_max = smax;
  out.iterations_used = it_max;

  bool min_ok = true;
  if (A.rows() <= dense_threshold) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = A.toDense();
    Eigen::BDCSVD<decltype(dense)> svd(dense);
    out.sigma_min = svd.singularValues().minCoeff();
  } else {
    auto [smin, it_min] = detail::inverse_sigma_min(A, tol, max_iter, min_ok);
    out.sigma_min = smin;
    out.iterations_used += it_min;
  }
  out.sigma_min = std::min(out.sigma_min, out.sigma_max);
  out.converged = max_ok && min_ok;
  return out;
}

}  // namespace inexp
