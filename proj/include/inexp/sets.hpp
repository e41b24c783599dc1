#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "inexp/linalg.hpp"

namespace inexp {

/// Default absolute tolerance for membership tests.
inline constexpr double kMembershipTol = 1e-12;

/// Largest box dimension for which the 2^n vertex list is materialized.
inline constexpr Index kMaxBoxVertexDimension = 16;

/// Compensated (Neumaier) sum, so membership of points on a budget face does
/// not depend on summation order.
template <typename Derived>
typename Derived::Scalar accurate_sum(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar sum = 0;
  Scalar comp = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar v = x[i];
    const Scalar t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

/**
 * Closed convex set C accessed through membership, a linear minimization
 * oracle, and optionally an exact Euclidean projection and a vertex list.
 */
template <typename Scalar>
class FeasibleSet {
 public:
  using VectorType = Vector<Scalar>;

  virtual ~FeasibleSet() = default;

  virtual Index dimension() const = 0;
  virtual bool has_exact_projection() const = 0;
  virtual bool is_polyhedral() const = 0;
  virtual std::string name() const = 0;

  /// True iff every defining constraint holds within additive tol.
  virtual bool contains(const VectorType& x,
                        Scalar tol = static_cast<Scalar>(kMembershipTol)) const = 0;

  /// A minimizer of <c, z> over the set.
  virtual VectorType lmo(const VectorType& c) const = 0;

  virtual VectorType exact_project(const VectorType& y) const {
    (void)y;
    throw UnsupportedCapability(name() + ": no exact projection");
  }

  virtual std::vector<VectorType> vertices() const {
    throw UnsupportedCapability(name() + ": not polyhedral");
  }

  /**
   * Pulls a point that is feasible up to rounding back inside the set, so that
   * convex-combination updates stay feasible with zero tolerance. Larger
   * violations need not be corrected.
   */
  virtual void restore_feasibility(VectorType& x) const { (void)x; }

  /// A cheap feasible point near y, when the set has one short of the exact
  /// projection.
  virtual std::optional<VectorType> retract(const VectorType& y) const {
    (void)y;
    return std::nullopt;
  }

 protected:
  void check_dim(const VectorType& x, const char* op) const {
    if (x.size() != dimension()) {
      throw DimensionError(name() + "::" + op + ": dimension mismatch");
    }
  }
};

/// {x : sum(x) <= d, x >= 0}.
template <typename Scalar>
class BudgetSimplex final : public FeasibleSet<Scalar> {
 public:
  using VectorType = Vector<Scalar>;

  BudgetSimplex(Index n, Scalar budget) : n_(n), budget_(budget) {
    if (n < 1) {
      throw std::invalid_argument("BudgetSimplex: n must be positive");
    }
    if (!(budget > 0) || !std::isfinite(budget)) {
      throw std::invalid_argument("BudgetSimplex: budget must be positive and finite");
    }
  }

  Index dimension() const override { return n_; }
  bool has_exact_projection() const override { return true; }
  bool is_polyhedral() const override { return true; }
  std::string name() const override { return "BudgetSimplex"; }
  Scalar budget() const { return budget_; }

  bool contains(const VectorType& x,
                Scalar tol = static_cast<Scalar>(kMembershipTol)) const override {
    this->check_dim(x, "contains");
    if (!x.allFinite() || x.minCoeff() < -tol) {
      return false;
    }
    return accurate_sum(x) <= budget_ + tol;
  }

  VectorType lmo(const VectorType& c) const override {
    this->check_dim(c, "lmo");
    Index best = 0;
    // minCoeff returns the first minimizer, which gives lowest-index ties.
    const Scalar cmin = c.minCoeff(&best);
    VectorType z = VectorType::Zero(n_);
    if (cmin < 0) {
      z[best] = budget_;
    }
    return z;
  }

  /// Clip at zero; if the budget is then violated, project onto the face
  /// sum(x) = d with the sort-and-threshold rule.
  VectorType exact_project(const VectorType& y) const override {
    this->check_dim(y, "exact_project");
    VectorType p = y.cwiseMax(Scalar(0));
    if (accurate_sum(p) <= budget_) {
      return p;
    }
    std::vector<Scalar> sorted(y.data(), y.data() + n_);
    std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
    Scalar prefix = 0;
    Scalar tau = 0;
    for (Index j = 0; j < n_; ++j) {
      prefix += sorted[j];
      const Scalar candidate = (prefix - budget_) / static_cast<Scalar>(j + 1);
      if (sorted[j] - candidate > 0) {
        tau = candidate;
      } else {
        break;
      }
    }
    p = (y.array() - tau).cwiseMax(Scalar(0)).matrix();
    restore_feasibility(p);
    return p;
  }

  /// Clip at zero, then scale down onto the budget if it is exceeded.
  std::optional<VectorType> retract(const VectorType& y) const override {
    this->check_dim(y, "retract");
    VectorType p = y.cwiseMax(Scalar(0));
    const Scalar sum = accurate_sum(p);
    if (sum > budget_) {
      p *= budget_ / sum;
      restore_feasibility(p);
    }
    return p;
  }

  std::vector<VectorType> vertices() const override {
    std::vector<VectorType> out;
    out.reserve(n_ + 1);
    out.push_back(VectorType::Zero(n_));
    for (Index i = 0; i < n_; ++i) {
      VectorType e = VectorType::Zero(n_);
      e[i] = budget_;
      out.push_back(std::move(e));
    }
    return out;
  }

  void restore_feasibility(VectorType& x) const override {
    x = x.cwiseMax(Scalar(0));
    Scalar sum = accurate_sum(x);
    const Scalar slack = Scalar(4) * static_cast<Scalar>(n_ + 16) *
                         std::numeric_limits<Scalar>::epsilon() * budget_;
    if (sum <= budget_ || sum > budget_ + slack) {
      return;
    }
    x *= budget_ / sum;
    for (int guard = 0; guard < 64 && accurate_sum(x) > budget_; ++guard) {
      x *= Scalar(1) - std::numeric_limits<Scalar>::epsilon() * (guard + 1);
    }
  }

 private:
  Index n_;
  Scalar budget_;
};

/// {x : lower <= x <= upper}.
template <typename Scalar>
class Box final : public FeasibleSet<Scalar> {
 public:
  using VectorType = Vector<Scalar>;

  Box(VectorType lower, VectorType upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() < 1) {
      throw DimensionError("Box: bounds must be nonempty and of equal length");
    }
    if ((lower_.array() > upper_.array()).any() || !lower_.allFinite() ||
        !upper_.allFinite()) {
      throw std::invalid_argument("Box: require finite lower <= upper");
    }
  }

  Index dimension() const override { return lower_.size(); }
  bool has_exact_projection() const override { return true; }
  bool is_polyhedral() const override { return true; }
  std::string name() const override { return "Box"; }
  const VectorType& lower() const { return lower_; }
  const VectorType& upper() const { return upper_; }

  bool contains(const VectorType& x,
                Scalar tol = static_cast<Scalar>(kMembershipTol)) const override {
    this->check_dim(x, "contains");
    return x.allFinite() && ((x - lower_).array() >= -tol).all() &&
           ((upper_ - x).array() >= -tol).all();
  }

  VectorType lmo(const VectorType& c) const override {
    this->check_dim(c, "lmo");
    VectorType z(lower_.size());
    for (Index i = 0; i < z.size(); ++i) {
      z[i] = c[i] < 0 ? upper_[i] : lower_[i];
    }
    return z;
  }

  VectorType exact_project(const VectorType& y) const override {
    this->check_dim(y, "exact_project");
    return y.cwiseMax(lower_).cwiseMin(upper_);
  }

  std::vector<VectorType> vertices() const override {
    const Index n = dimension();
    if (n > kMaxBoxVertexDimension) {
      throw UnsupportedCapability("Box: vertex list only for n <= 16");
    }
    std::vector<VectorType> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      VectorType v(n);
      for (Index i = 0; i < n; ++i) {
        v[i] = (mask >> i) & 1U ? upper_[i] : lower_[i];
      }
      out.push_back(std::move(v));
    }
    return out;
  }

  void restore_feasibility(VectorType& x) const override {
    x = x.cwiseMax(lower_).cwiseMin(upper_);
  }

 private:
  VectorType lower_;
  VectorType upper_;
};

/// {x : ||x - center|| <= radius}. Smooth boundary, so no vertex list.
template <typename Scalar>
class Ball final : public FeasibleSet<Scalar> {
 public:
  using VectorType = Vector<Scalar>;

  Ball(VectorType center, Scalar radius)
      : center_(std::move(center)), radius_(radius) {
    if (center_.size() < 1) {
      throw DimensionError("Ball: center must be nonempty");
    }
    if (!(radius > 0) || !std::isfinite(radius) || !center_.allFinite()) {
      throw std::invalid_argument("Ball: radius must be positive and finite");
    }
  }

  Index dimension() const override { return center_.size(); }
  bool has_exact_projection() const override { return true; }
  bool is_polyhedral() const override { return false; }
  std::string name() const override { return "Ball"; }
  const VectorType& center() const { return center_; }
  Scalar radius() const { return radius_; }

  bool contains(const VectorType& x,
                Scalar tol = static_cast<Scalar>(kMembershipTol)) const override {
    this->check_dim(x, "contains");
    return x.allFinite() && norm2(x - center_) <= radius_ + tol;
  }

  VectorType lmo(const VectorType& c) const override {
    this->check_dim(c, "lmo");
    const Scalar cn = norm2(c);
    if (cn == Scalar(0)) {
      return center_;
    }
    return center_ - (radius_ / cn) * c;
  }

  VectorType exact_project(const VectorType& y) const override {
    this->check_dim(y, "exact_project");
    const VectorType offset = y - center_;
    const Scalar dist = norm2(offset);
    if (dist <= radius_) {
      return y;
    }
    return center_ + (radius_ / dist) * offset;
  }

  void restore_feasibility(VectorType& x) const override {
    const VectorType offset = x - center_;
    const Scalar dist = norm2(offset);
    const Scalar slack = 64 * std::numeric_limits<Scalar>::epsilon() * radius_;
    if (dist > radius_ && dist <= radius_ + slack) {
      x = center_ + (radius_ / dist) * offset;
    }
  }

 private:
  VectorType center_;
  Scalar radius_;
};

}  // namespace inexp
