#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "inexp/linalg.hpp"
#include "inexp/lsqr.hpp"

using namespace inexp;
using testing::random_dense;
using testing::random_vector;
using testing::to_csr;

TEST_CASE("make_csr accepts a well-formed matrix") {
  const std::vector<int> row_ptr{0, 2, 3};
  const std::vector<int> cols{0, 2, 1};
  const std::vector<double> vals{1.0, 2.0, 3.0};
  const auto A = make_csr<double>(2, 3, row_ptr, cols, vals);
  CHECK(A.rows() == 2);
  CHECK(A.cols() == 3);
  CHECK(A.nonZeros() == 3);
  CHECK(A.coeff(0, 2) == 2.0);
  CHECK(A.coeff(1, 1) == 3.0);
}

TEST_CASE("make_csr rejects malformed input") {
  const std::vector<double> vals{1.0, 2.0};
  CHECK_THROWS(make_csr<double>(2, 2, std::vector<int>{1, 1, 2}, std::vector<int>{0, 1}, vals));
  CHECK_THROWS(make_csr<double>(2, 2, std::vector<int>{0, 2, 1}, std::vector<int>{0, 1}, vals));
  CHECK_THROWS(make_csr<double>(2, 2, std::vector<int>{0, 2, 2}, std::vector<int>{1, 0}, vals));
  CHECK_THROWS(make_csr<double>(2, 2, std::vector<int>{0, 1, 2}, std::vector<int>{0, 2}, vals));
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS(make_csr<double>(2, 2, std::vector<int>{0, 1, 2}, std::vector<int>{0, 1}, bad));
}

TEST_CASE_TEMPLATE("matvec matches the dense product", Scalar, float, double) {
  auto g = testing::rng(11);
  const double tol = std::is_same_v<Scalar, float> ? 1e-5 : 1e-13;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = random_dense(g, 17, 13, 0.3);
    const Vector<double> x = random_vector(g, 13);
    const Vector<double> z = random_vector(g, 17);
    const CsrMatrix<Scalar> A = to_csr(m).cast<Scalar>();
    const Vector<Scalar> ax = matvec<Scalar>(A, x.cast<Scalar>());
    const Vector<Scalar> atz = matvec_transpose<Scalar>(A, z.cast<Scalar>());
    CHECK((ax.template cast<double>() - m * x).norm() <= tol * (1 + (m * x).norm()));
    CHECK((atz.template cast<double>() - m.transpose() * z).norm() <=
          tol * (1 + (m.transpose() * z).norm()));
  }
}

TEST_CASE("matvec checks dimensions") {
  const CsrMatrix<double> A = sparse_identity<double>(3);
  CHECK_THROWS_AS(matvec<double>(A, Vector<double>::Ones(4)), DimensionError);
}

TEST_CASE("identity and diagonal builders") {
  const auto I = sparse_identity<double>(4);
  CHECK(Eigen::MatrixXd(I).isIdentity());
  Vector<double> d(3);
  d << 1.0, 0.0, -2.0;
  const auto D = sparse_diagonal<double>(d);
  CHECK(Eigen::MatrixXd(D).isApprox(Eigen::MatrixXd(d.asDiagonal())));
}

TEST_CASE("norm2 does not overflow") {
  Vector<double> v = Vector<double>::Constant(4, 1e200);
  CHECK(norm2(v) == doctest::Approx(2e200));
}

TEST_CASE("sigma_extremes on a diagonal matrix") {
  Vector<double> d(2);
  d << 2.0, 5.0;
  const auto A = sparse_diagonal<double>(d);
  for (Index threshold : {Index(0), kDenseSvdThreshold}) {
    const auto s = sigma_extremes<double>(A, 1e-12, 1000, threshold);
    CHECK(s.sigma_min == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(s.sigma_max == doctest::Approx(5.0).epsilon(1e-9));
  }
}

TEST_CASE("sigma_extremes agrees with a dense SVD") {
  auto g = testing::rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m =
        random_dense(g, 30, 30, 0.4) + 2.0 * Eigen::MatrixXd::Identity(30, 30);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(29);
    const auto dense = sigma_extremes<double>(to_csr(m), 1e-12, 20000);
    const auto iter = sigma_extremes<double>(to_csr(m), 1e-12, 20000, 0);
    CHECK(dense.sigma_min == doctest::Approx(smin).epsilon(1e-9));
    CHECK(dense.sigma_max == doctest::Approx(smax).epsilon(1e-6));
    CHECK(iter.sigma_min == doctest::Approx(smin).epsilon(1e-5));
    CHECK(iter.sigma_max == doctest::Approx(smax).epsilon(1e-5));
  }
}

TEST_CASE("sigma_extremes rejects singular and non-square input") {
  Vector<double> d(3);
  d << 1.0, 0.0, 2.0;
  CHECK_THROWS_AS(sigma_extremes<double>(sparse_diagonal<double>(d), 1e-10, 100, 0),
                  SingularMatrixError);
  CsrMatrix<double> rect(2, 3);
  CHECK_THROWS_AS(sigma_extremes<double>(rect, 1e-10, 100), DimensionError);
}

TEST_CASE("lsqr matches dense LU on random systems") {
  auto g = testing::rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd m =
        random_dense(g, 20, 20) + 3.0 * Eigen::MatrixXd::Identity(20, 20);
    const Vector<double> b = random_vector(g, 20);
    const Vector<double> ref = m.partialPivLu().solve(b);
    const auto r = lsqr_solve<double>(to_csr(m), b, 1e-12, 400);
    CHECK(r.satisfied);
    CHECK((r.solution - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("lsqr stops at the requested relative residual") {
  auto g = testing::rng(3);
  const Eigen::MatrixXd m = random_dense(g, 40, 40, 0.2) + 2.0 * Eigen::MatrixXd::Identity(40, 40);
  const Vector<double> b = random_vector(g, 40);
  for (double tol : {0.5, 1e-2, 1e-6}) {
    const auto r = lsqr_solve<double>(to_csr(m), b, tol, 200);
    CHECK(r.satisfied);
    CHECK(r.final_relative_residual <= tol);
    CHECK(relative_residual<double>(to_csr(m), b, r.solution) ==
          doctest::Approx(r.final_relative_residual));
    CHECK(r.residual_history.front() == doctest::Approx(1.0));
  }
}

TEST_CASE("lsqr residual history is non-increasing") {
  auto g = testing::rng(8);
  const Eigen::MatrixXd m = random_dense(g, 30, 30) + 2.0 * Eigen::MatrixXd::Identity(30, 30);
  const Vector<double> b = random_vector(g, 30);
  const auto r = lsqr_solve<double>(to_csr(m), b, 1e-12, 200);
  for (std::size_t k = 1; k < r.residual_history.size(); ++k) {
    CHECK(r.residual_history[k] <= r.residual_history[k - 1] * (1 + 1e-10));
  }
}

TEST_CASE("lsqr edge cases") {
  const auto I = sparse_identity<double>(3);
  CHECK_THROWS(lsqr_solve<double>(I, Vector<double>::Zero(3), 0.1, 10));

  Vector<double> b(3);
  b << 1.0, -2.0, 3.0;
  const auto exact = lsqr_solve<double>(I, b, 0.0, 10);
  CHECK(exact.satisfied);
  CHECK((exact.solution - b).norm() < 1e-14);

  const auto capped = lsqr_solve<double>(
      to_csr(Eigen::MatrixXd(Eigen::Vector3d(1.0, 10.0, 100.0).asDiagonal())), b, 1e-14, 1);
  CHECK_FALSE(capped.satisfied);
  CHECK(capped.iterations == 1);

  CHECK_THROWS_AS(lsqr_solve<double>(I, Vector<double>::Ones(2), 0.1, 10), DimensionError);
}

TEST_CASE("lsqr in single precision") {
  auto g = testing::rng(9);
  const Eigen::MatrixXd m = random_dense(g, 10, 10) + 3.0 * Eigen::MatrixXd::Identity(10, 10);
  const Vector<double> b = random_vector(g, 10);
  const auto r =
      lsqr_solve<float>(to_csr(m).cast<float>(), b.cast<float>(), 1e-4f, 100);
  CHECK(r.satisfied);
  const Vector<double> ref = m.partialPivLu().solve(b);
  CHECK((r.solution.cast<double>() - ref).norm() <= 1e-3 * ref.norm());
}
