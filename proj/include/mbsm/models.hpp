#pragma once

#include "mbsm/common.hpp"

#include <optional>
#include <vector>

namespace mbsm {

// ---- Densities and multi-object states ----

/// Gaussian density over the four-dimensional target state.
struct GaussianDensity {
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Identity();
};

/// Bernoulli component: a potential target with existence probability `r`.
struct BernoulliComponent {
  double r = 0.0;
  GaussianDensity density;
  long id = -1;
};

/// Multi-Bernoulli density: independent Bernoulli components.
struct MultiBernoulliState {
  std::vector<BernoulliComponent> components;
  int time_index = 0;
};

// ---- Motion and birth ----

/// Linear-Gaussian motion model with survival probability.
struct MotionModel {
  Mat4 transition = Mat4::Identity();
  Mat4 noise = Mat4::Zero();
  double p_survival = 1.0;
};

/// Nearly-constant-velocity model with sampling period `tau` and noise intensity `q`.
[[nodiscard]] inline MotionModel ncv_motion_model(double tau, double q, double p_survival) {
  MotionModel model;
  model.transition = Mat4::Identity();
  model.transition(0, 1) = tau;
  model.transition(2, 3) = tau;
  Mat4 noise = Mat4::Zero();
  const double t3 = tau * tau * tau / 3.0;
  const double t2 = tau * tau / 2.0;
  noise(0, 0) = t3;
  noise(0, 1) = t2;
  noise(1, 0) = t2;
  noise(1, 1) = tau;
  noise(2, 2) = t3;
  noise(2, 3) = t2;
  noise(3, 2) = t2;
  noise(3, 3) = tau;
  model.noise = q * noise;
  model.p_survival = p_survival;
  return model;
}

/// One Bernoulli birth component appended at every prediction step.
struct BirthComponent {
  double r_birth = 0.0;
  GaussianDensity density;
};

using BirthModel = std::vector<BirthComponent>;

// ---- Sensors ----

/// Linear-Gaussian sensor with a range-dependent detection profile and uniform clutter.
struct SensorModel {
  Mat24 observation = position_matrix();
  Mat2 noise = Mat2::Identity();
  Vec2 bias = Vec2::Zero();
  /// Peak detection probability at zero range.
  double p_d_max = 0.999;
  /// Field-of-view radius; also the detection-profile length scale.
  double fov_radius = 40.0;
  /// Expected clutter count per scan (uniform over the field-of-view disc).
  double clutter_rate = 0.1;
  /// Evaluate the expected detection probability by Gaussian integration
  /// instead of at the predicted mean.
  bool integrate_detection = false;
  /// Test-only override forcing a constant detection probability.
  std::optional<double> detection_override;
  /// Test-only permission to run with zero clutter (intensity floored).
  bool allow_zero_clutter = false;

  /// Spatial clutter intensity: rate spread uniformly over the disc.
  [[nodiscard]] double clutter_intensity() const {
    const double area = M_PI * fov_radius * fov_radius;
    const double intensity = clutter_rate / area;
    return intensity > kWeightFloor ? intensity : kWeightFloor;
  }
};

/// Pose of a movable sensor.
struct SensorPose {
  Vec2 position = Vec2::Zero();
  double fov_radius = 40.0;
  double step_radius = 15.0;
};

/// Detection probability of a point target at `target_position`.
[[nodiscard]] inline double detection_probability(const SensorModel& sensor,
                                                  const Vec2& sensor_position,
                                                  const Vec2& target_position) {
  if (sensor.detection_override) return *sensor.detection_override;
  const double sq_range = (target_position - sensor_position).squaredNorm();
  const double scale = sensor.fov_radius * sensor.fov_radius;
  return sensor.p_d_max * std::exp(-0.5 * sq_range / scale);
}

/// Expected detection probability of a Gaussian-distributed target.
///
/// The default evaluates the profile at the predicted mean; with
/// `integrate_detection` the Gaussian-times-Gaussian integral is evaluated in
/// closed form instead.
[[nodiscard]] inline double expected_detection_probability(const SensorModel& sensor,
                                                           const Vec2& sensor_position,
                                                           const GaussianDensity& density) {
  if (sensor.detection_override) return *sensor.detection_override;
  const Vec2 mean = position_matrix() * density.mean;
  if (!sensor.integrate_detection) {
    return detection_probability(sensor, sensor_position, mean);
  }
  const double scale = sensor.fov_radius * sensor.fov_radius;
  const Mat2 pos_cov = position_matrix() * density.cov * position_matrix().transpose();
  const Mat2 a = pos_cov + scale * Mat2::Identity();
  const Vec2 d = mean - sensor_position;
  const Eigen::LLT<Mat2> llt(symmetrized(a));
  const Vec2 y = llt.matrixL().solve(d);
  const double det = a.determinant();
  return sensor.p_d_max * scale / std::sqrt(det) * std::exp(-0.5 * y.squaredNorm());
}

}  // namespace mbsm
