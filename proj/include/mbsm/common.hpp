#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mbsm {

// ---- Fixed dimensions ----
//
// Targets live in a four-dimensional state space [px, vx, py, vy];
// measurements and scoring live in the two-dimensional position space.

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Observation matrix selecting [px, py] from [px, vx, py, vy].
[[nodiscard]] inline Mat24 position_matrix() {
  Mat24 h = Mat24::Zero();
  h(0, 0) = 1.0;
  h(1, 2) = 1.0;
  return h;
}

// ---- Numerical hygiene ----

/// Weights below this floor are treated as zero.
inline constexpr double kWeightFloor = 1e-300;

/// Condition-number threshold above which innovation covariances are regularised.
inline constexpr double kConditionLimit = 1e12;

/// Regularisation added to near-singular innovation covariances.
inline constexpr double kRegularisation = 1e-9;

/// Force exact symmetry after covariance arithmetic.
template <typename Derived>
[[nodiscard]] typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

/// Regularise a symmetric positive semi-definite matrix if it is badly conditioned.
[[nodiscard]] inline Mat2 conditioned(const Mat2& s) {
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(s);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > kConditionLimit) {
    return symmetrized(s) + kRegularisation * Mat2::Identity();
  }
  return symmetrized(s);
}

/// Log of a bivariate Gaussian density evaluated at `x`.
[[nodiscard]] inline double log_gaussian2(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  const Mat2 s = conditioned(cov);
  const Eigen::LLT<Mat2> llt(s);
  const Vec2 d = x - mean;
  const Vec2 y = llt.matrixL().solve(d);
  const double log_det = 2.0 * std::log(llt.matrixL()(0, 0)) + 2.0 * std::log(llt.matrixL()(1, 1));
  return -0.5 * y.squaredNorm() - 0.5 * log_det - std::log(2.0 * M_PI);
}

// ---- Errors ----

/// Raised when a configuration file or parameter set is invalid.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mbsm
