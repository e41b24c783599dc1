#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "inexp/linalg.hpp"

namespace testing {

inline std::mt19937_64 rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline double unif(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Eigen::MatrixXd random_dense(std::mt19937_64& g, Eigen::Index r, Eigen::Index c,
                                    double keep = 1.0) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (unif(g, 0, 1) < keep) {
        m(i, j) = unif(g, -1, 1);
      }
    }
  }
  return m;
}

inline inexp::Vector<double> random_vector(std::mt19937_64& g, Eigen::Index n, double lo = -1,
                                           double hi = 1) {
  inexp::Vector<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = unif(g, lo, hi);
  }
  return v;
}

inline inexp::CsrMatrix<double> to_csr(const Eigen::MatrixXd& m) {
  inexp::CsrMatrix<double> a = m.sparseView();
  a.makeCompressed();
  return a;
}

}  // namespace testing
