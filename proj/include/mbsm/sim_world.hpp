#pragma once

#include "mbsm/common.hpp"
#include "mbsm/models.hpp"
#include "mbsm/random.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <vector>

namespace mbsm {

// ---- Surveillance geometry ----

/// Axis-aligned rectangle; all containment tests are closed.
struct Rect {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  [[nodiscard]] bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

/// Rectangular no-go region for sensors.
using Obstacle = Rect;

/// Whether the closed segment a-b intersects the closed rectangle.
[[nodiscard]] inline bool segment_intersects(const Rect& rect, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double p[2] = {-d(axis), d(axis)};
    const double q[2] = {a(axis) - rect.lo(axis), rect.hi(axis) - a(axis)};
    for (int side = 0; side < 2; ++side) {
      if (p[side] == 0.0) {
        if (q[side] < 0.0) return false;
      } else {
        const double t = q[side] / p[side];
        if (p[side] < 0.0) {
          if (t > t_enter) t_enter = t;
        } else {
          if (t < t_exit) t_exit = t;
        }
      }
    }
  }
  return t_enter <= t_exit;
}

// ---- Sensor actions ----
//
// Seven actions: six unit steps at 60-degree spacing plus hold (index 6).

inline constexpr int kActionCount = 7;
inline constexpr int kHoldAction = 6;

/// Displacement of action `action` for a sensor with the given step radius.
[[nodiscard]] inline Vec2 action_offset(double step_radius, int action) {
  if (action == kHoldAction) return Vec2::Zero();
  const double angle = M_PI / 3.0 * static_cast<double>(action);
  return {step_radius * std::cos(angle), step_radius * std::sin(angle)};
}

/// Sensor position after taking `action`.
[[nodiscard]] inline Vec2 apply_action(const Vec2& position, double step_radius, int action) {
  return position + action_offset(step_radius, action);
}

/// Whether an action's path stays inside the extent and clear of all obstacles.
[[nodiscard]] inline bool action_available(const Vec2& position, double step_radius, int action,
                                           const std::vector<Obstacle>& obstacles,
                                           const Rect& extent) {
  const Vec2 end = apply_action(position, step_radius, action);
  if (!extent.contains(end)) return false;
  for (const Obstacle& obstacle : obstacles) {
    if (segment_intersects(obstacle, position, end)) return false;
  }
  return true;
}

/// Indices of all available actions, ascending; hold is always available.
[[nodiscard]] inline std::vector<int> available_actions(const Vec2& position, double step_radius,
                                                        const std::vector<Obstacle>& obstacles,
                                                        const Rect& extent) {
  std::vector<int> actions;
  for (int a = 0; a < kActionCount; ++a) {
    if (action_available(position, step_radius, a, obstacles, extent)) actions.push_back(a);
  }
  return actions;
}

// ---- Ground truth ----

/// A live ground-truth target.
struct GroundTruthTarget {
  long id = -1;
  Vec4 state = Vec4::Zero();
  int birth_step = 0;
};

/// Deterministic target script: constant-velocity flight between fixed steps.
struct ScriptedTarget {
  Vec4 initial_state = Vec4::Zero();
  int birth_step = 0;
  int death_step = 0;  // exclusive: alive while birth_step <= k < death_step
};

/// Ground-truth world advancing either scripted or stochastic target sets.
class SimWorld {
 public:
  /// Scripted world: targets appear, fly deterministically, and disappear.
  SimWorld(std::vector<ScriptedTarget> script, const MotionModel& motion)
      : motion_(motion), script_(std::move(script)), scripted_(true) {}

  /// Stochastic world: thinned survival, noisy motion, Bernoulli births.
  SimWorld(const MotionModel& motion, const BirthModel& birth, std::uint64_t seed)
      : motion_(motion), birth_(birth), rng_(seed), scripted_(false) {}

  /// Advance to time step `step`; steps must be visited in increasing order.
  void advance(int step) {
    if (scripted_) {
      targets_.clear();
      for (std::size_t t = 0; t < script_.size(); ++t) {
        const ScriptedTarget& s = script_[t];
        if (step < s.birth_step || step >= s.death_step) continue;
        GroundTruthTarget live;
        live.id = static_cast<long>(t);
        live.birth_step = s.birth_step;
        live.state = s.initial_state;
        for (int k = s.birth_step; k < step; ++k) live.state = motion_.transition * live.state;
        targets_.push_back(live);
      }
      return;
    }
    const Eigen::LLT<Mat4> llt(motion_.noise + 1e-12 * Mat4::Identity());
    const Mat4 noise_root = llt.matrixL();
    std::vector<GroundTruthTarget> survivors;
    for (GroundTruthTarget& target : targets_) {
      if (rng_.uniform() >= motion_.p_survival) continue;
      Vec4 w;
      for (int i = 0; i < 4; ++i) w(i) = rng_.normal();
      target.state = motion_.transition * target.state + noise_root * w;
      survivors.push_back(target);
    }
    targets_ = std::move(survivors);
    for (const BirthComponent& birth : birth_) {
      if (rng_.uniform() >= birth.r_birth) continue;
      const Eigen::LLT<Mat4> birth_llt(birth.density.cov + 1e-12 * Mat4::Identity());
      Vec4 w;
      for (int i = 0; i < 4; ++i) w(i) = rng_.normal();
      GroundTruthTarget born;
      born.id = next_id_++;
      born.birth_step = step;
      born.state = birth.density.mean + birth_llt.matrixL() * w;
      targets_.push_back(born);
    }
  }

  [[nodiscard]] const std::vector<GroundTruthTarget>& targets() const { return targets_; }

  /// Positions of all live targets.
  [[nodiscard]] std::vector<Vec2> positions() const {
    std::vector<Vec2> out;
    out.reserve(targets_.size());
    for (const GroundTruthTarget& t : targets_) out.push_back(position_matrix() * t.state);
    return out;
  }

 private:
  MotionModel motion_;
  BirthModel birth_;
  std::vector<ScriptedTarget> script_;
  std::vector<GroundTruthTarget> targets_;
  Rng rng_{0};
  long next_id_ = 0;
  bool scripted_ = false;
};

// ---- Measurement generation ----

/// One scan: range-dependent detections plus uniform clutter, order shuffled.
[[nodiscard]] inline std::vector<Vec2> generate_measurements(const SensorModel& sensor,
                                                             const Vec2& sensor_position,
                                                             const std::vector<Vec4>& target_states,
                                                             Rng& rng) {
  std::vector<Vec2> scan;
  const Eigen::LLT<Mat2> llt(sensor.noise + 1e-12 * Mat2::Identity());
  const Mat2 noise_root = llt.matrixL();
  for (const Vec4& state : target_states) {
    const Vec2 position = position_matrix() * state;
    if (rng.uniform() >= detection_probability(sensor, sensor_position, position)) continue;
    const Vec2 w{rng.normal(), rng.normal()};
    scan.push_back(sensor.observation * state + sensor.bias + noise_root * w);
  }
  const int clutter_count = rng.poisson(sensor.clutter_rate);
  for (int i = 0; i < clutter_count; ++i) {
    const double radius = sensor.fov_radius * std::sqrt(rng.uniform());
    const double angle = 2.0 * M_PI * rng.uniform();
    scan.push_back(sensor_position + Vec2{radius * std::cos(angle), radius * std::sin(angle)});
  }
  rng.shuffle(scan);
  return scan;
}

}  // namespace mbsm
