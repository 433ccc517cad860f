#pragma once

#include "mbsm/common.hpp"
#include "mbsm/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace mbsm {

// ---- Multi-Bernoulli filtering ----

/// One data-association hypothesis for a single Bernoulli component.
struct LocalHypothesis {
  /// Association likelihood weight, normalised within the component.
  double weight = 0.0;
  /// Index of the associated measurement; -1 is the misdetection hypothesis.
  int measurement = -1;
  BernoulliComponent component;
};

/// Multi-Bernoulli mixture produced by one sensor update: per prior component,
/// a misdetection hypothesis followed by one hypothesis per gated measurement.
struct MbmState {
  std::vector<std::vector<LocalHypothesis>> components;
  int time_index = 0;
};

/// Tuning knobs shared by the filter stages.
struct FilterParameters {
  /// Components with existence probability below this are dropped.
  double prune_threshold = 1e-4;
  /// Symmetrised Mahalanobis distance under which components merge.
  double merge_distance = 1.0;
  /// Squared Mahalanobis gate for measurement association.
  double gate_sq_distance = 13.8;
  /// Existence probability above which a component is reported.
  double report_threshold = 0.5;
  /// Exact marginals are enumerated up to this many global hypotheses.
  long enumeration_limit = 10000;
  double lbp_damping = 0.5;
  int lbp_max_iterations = 200;
  double lbp_tolerance = 1e-8;
};

/// Predict every component through the motion model and append births.
///
/// Ids of surviving components are preserved; births receive fresh ids from
/// `next_id`.
[[nodiscard]] inline MultiBernoulliState predict(const MultiBernoulliState& state,
                                                 const MotionModel& motion,
                                                 const BirthModel& births, long& next_id) {
  MultiBernoulliState out;
  out.time_index = state.time_index + 1;
  out.components.reserve(state.components.size() + births.size());
  for (const BernoulliComponent& prior : state.components) {
    BernoulliComponent predicted = prior;
    predicted.r = prior.r * motion.p_survival;
    predicted.density.mean = motion.transition * prior.density.mean;
    predicted.density.cov = symmetrized(
        motion.transition * prior.density.cov * motion.transition.transpose() + motion.noise);
    out.components.push_back(predicted);
  }
  for (const BirthComponent& birth : births) {
    BernoulliComponent born;
    born.r = birth.r_birth;
    born.density = birth.density;
    born.id = next_id++;
    out.components.push_back(born);
  }
  return out;
}

/// Update against one sensor scan, producing the association mixture.
///
/// Hypothesis weights are likelihood-proportional and normalised within each
/// component; detections outside the ellipsoidal gate are not hypothesised.
/// A zero clutter rate with a non-empty scan is a configuration error unless
/// the sensor explicitly allows it.
[[nodiscard]] inline MbmState update_sensor(const MultiBernoulliState& state,
                                            const std::vector<Vec2>& measurements,
                                            const SensorModel& sensor,
                                            const Vec2& sensor_position,
                                            const FilterParameters& params = {}) {
  if (sensor.clutter_rate <= 0.0 && !sensor.allow_zero_clutter && !measurements.empty()) {
    throw config_error("update_sensor: zero clutter intensity with a non-empty scan");
  }
  const double log_clutter = std::log(sensor.clutter_intensity());
  MbmState out;
  out.time_index = state.time_index;
  out.components.reserve(state.components.size());
  for (const BernoulliComponent& prior : state.components) {
    const double p_detect =
        expected_detection_probability(sensor, sensor_position, prior.density);
    std::vector<LocalHypothesis> hypotheses;

    LocalHypothesis miss;
    miss.measurement = -1;
    miss.weight = 1.0 - prior.r * p_detect;
    miss.component = prior;
    if (miss.weight < kWeightFloor) {
      miss.weight = 0.0;
      miss.component.r = 0.0;
    } else {
      miss.component.r = prior.r * (1.0 - p_detect) / miss.weight;
    }
    hypotheses.push_back(miss);

    const Mat24& h = sensor.observation;
    const Vec2 predicted_z = h * prior.density.mean + sensor.bias;
    const Mat2 innovation_cov = conditioned(h * prior.density.cov * h.transpose() + sensor.noise);
    const Eigen::LLT<Mat2> llt(innovation_cov);
    const Mat42 gain = prior.density.cov * h.transpose() * innovation_cov.inverse();
    const Mat4 updated_cov =
        symmetrized(prior.density.cov - gain * innovation_cov * gain.transpose());
    for (int j = 0; j < static_cast<int>(measurements.size()); ++j) {
      const Vec2 innovation = measurements[static_cast<std::size_t>(j)] - predicted_z;
      const Vec2 whitened = llt.matrixL().solve(innovation);
      if (whitened.squaredNorm() >= params.gate_sq_distance) continue;
      const double log_likelihood =
          log_gaussian2(measurements[static_cast<std::size_t>(j)], predicted_z, innovation_cov);
      const double log_weight =
          std::log(std::max(prior.r * p_detect, kWeightFloor)) + log_likelihood - log_clutter;
      LocalHypothesis detect;
      detect.measurement = j;
      detect.weight = std::exp(log_weight);
      detect.component.id = prior.id;
      detect.component.r = 1.0;
      detect.component.density.mean = prior.density.mean + gain * innovation;
      detect.component.density.cov = updated_cov;
      if (detect.weight < kWeightFloor) detect.weight = 0.0;
      hypotheses.push_back(detect);
    }

    double sum = 0.0;
    for (const LocalHypothesis& hyp : hypotheses) sum += hyp.weight;
    if (sum > kWeightFloor) {
      for (LocalHypothesis& hyp : hypotheses) hyp.weight /= sum;
    }
    out.components.push_back(std::move(hypotheses));
  }
  return out;
}

/// How association marginals are computed.
enum class MarginalMode {
  /// Exact enumeration when feasible, loopy belief propagation otherwise.
  automatic,
  exact,
  lbp,
};

/// Per-component association marginals, aligned with the hypothesis lists.
struct Marginals {
  std::vector<std::vector<double>> weights;
  /// False only when belief propagation stopped at the iteration cap.
  bool converged = true;
  /// Whether exact enumeration produced the result.
  bool exact = false;
};

namespace detail {

/// Count global hypotheses by depth-first search, stopping at `limit`.
[[nodiscard]] inline long count_global_hypotheses(const MbmState& state, long limit) {
  const std::size_t n = state.components.size();
  std::vector<char> used;
  long count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (count > limit) return;
    if (i == n) {
      ++count;
      return;
    }
    for (const LocalHypothesis& hyp : state.components[i]) {
      if (hyp.measurement >= 0) {
        if (used[static_cast<std::size_t>(hyp.measurement)]) continue;
        used[static_cast<std::size_t>(hyp.measurement)] = 1;
        visit(i + 1);
        used[static_cast<std::size_t>(hyp.measurement)] = 0;
      } else {
        visit(i + 1);
      }
      if (count > limit) return;
    }
  };
  int max_measurement = -1;
  for (const auto& hypotheses : state.components) {
    for (const LocalHypothesis& hyp : hypotheses) {
      max_measurement = std::max(max_measurement, hyp.measurement);
    }
  }
  used.assign(static_cast<std::size_t>(max_measurement) + 1, 0);
  visit(0);
  return count;
}

/// Exact association marginals by log-domain enumeration of global hypotheses.
[[nodiscard]] inline Marginals exact_marginals(const MbmState& state) {
  const std::size_t n = state.components.size();
  Marginals out;
  out.exact = true;
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i].assign(state.components[i].size(), 0.0);
  }

  int max_measurement = -1;
  for (const auto& hypotheses : state.components) {
    for (const LocalHypothesis& hyp : hypotheses) {
      max_measurement = std::max(max_measurement, hyp.measurement);
    }
  }
  std::vector<char> used(static_cast<std::size_t>(max_measurement) + 1, 0);
  std::vector<std::size_t> choice(n, 0);

  struct Global {
    double log_weight;
    std::vector<std::size_t> choice;
  };
  std::vector<Global> globals;
  std::function<void(std::size_t, double)> visit = [&](std::size_t i, double log_weight) {
    if (i == n) {
      globals.push_back({log_weight, choice});
      return;
    }
    for (std::size_t e = 0; e < state.components[i].size(); ++e) {
      const LocalHypothesis& hyp = state.components[i][e];
      if (hyp.weight <= 0.0) continue;
      if (hyp.measurement >= 0) {
        if (used[static_cast<std::size_t>(hyp.measurement)]) continue;
        used[static_cast<std::size_t>(hyp.measurement)] = 1;
        choice[i] = e;
        visit(i + 1, log_weight + std::log(hyp.weight));
        used[static_cast<std::size_t>(hyp.measurement)] = 0;
      } else {
        choice[i] = e;
        visit(i + 1, log_weight + std::log(hyp.weight));
      }
    }
  };
  visit(0, 0.0);

  if (globals.empty()) {
    // Degenerate all-zero mixture: fall back to the misdetection hypothesis.
    for (std::size_t i = 0; i < n; ++i) out.weights[i][0] = 1.0;
    return out;
  }
  double best = globals.front().log_weight;
  for (const Global& g : globals) best = std::max(best, g.log_weight);
  double normaliser = 0.0;
  for (const Global& g : globals) normaliser += std::exp(g.log_weight - best);
  for (const Global& g : globals) {
    const double w = std::exp(g.log_weight - best) / normaliser;
    for (std::size_t i = 0; i < n; ++i) out.weights[i][g.choice[i]] += w;
  }
  return out;
}

/// Loopy belief propagation marginals (Bernoulli variant of the standard
/// single-scan data-association message passing).
[[nodiscard]] inline Marginals lbp_marginals(const MbmState& state,
                                             const FilterParameters& params) {
  const std::size_t n = state.components.size();
  int max_measurement = -1;
  for (const auto& hypotheses : state.components) {
    for (const LocalHypothesis& hyp : hypotheses) {
      max_measurement = std::max(max_measurement, hyp.measurement);
    }
  }
  const std::size_t m = static_cast<std::size_t>(max_measurement) + 1;

  // w[i][j]: detection weight of component i for measurement j; w0[i]: miss.
  std::vector<std::vector<double>> w(n, std::vector<double>(m, 0.0));
  std::vector<double> w0(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const LocalHypothesis& hyp : state.components[i]) {
      if (hyp.measurement < 0) {
        w0[i] = hyp.weight;
      } else {
        w[i][static_cast<std::size_t>(hyp.measurement)] = hyp.weight;
      }
    }
  }

  std::vector<std::vector<double>> mu(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> nu(n, std::vector<double>(m, 1.0));
  bool converged = false;
  for (int iteration = 0; iteration < params.lbp_max_iterations; ++iteration) {
    for (std::size_t i = 0; i < n; ++i) {
      double total = w0[i];
      for (std::size_t j = 0; j < m; ++j) total += w[i][j] * nu[i][j];
      for (std::size_t j = 0; j < m; ++j) {
        const double denominator = std::max(total - w[i][j] * nu[i][j], kWeightFloor);
        mu[i][j] = w[i][j] / denominator;
      }
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double total = 1.0;
      for (std::size_t i = 0; i < n; ++i) total += mu[i][j];
      for (std::size_t i = 0; i < n; ++i) {
        const double fresh = 1.0 / std::max(total - mu[i][j], kWeightFloor);
        const double damped =
            params.lbp_damping * fresh + (1.0 - params.lbp_damping) * nu[i][j];
        delta = std::max(delta, std::abs(damped - nu[i][j]));
        nu[i][j] = damped;
      }
    }
    if (delta < params.lbp_tolerance) {
      converged = true;
      break;
    }
  }

  Marginals out;
  out.converged = converged;
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i].assign(state.components[i].size(), 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < state.components[i].size(); ++e) {
      const LocalHypothesis& hyp = state.components[i][e];
      const double q = hyp.measurement < 0
                           ? w0[i]
                           : w[i][static_cast<std::size_t>(hyp.measurement)] *
                                 nu[i][static_cast<std::size_t>(hyp.measurement)];
      out.weights[i][e] = q;
      total += q;
    }
    if (total > kWeightFloor) {
      for (double& q : out.weights[i]) q /= total;
    } else {
      out.weights[i][0] = 1.0;
    }
  }
  return out;
}

}  // namespace detail

/// Association marginals of the mixture, exactly or by belief propagation.
///
/// `automatic` enumerates exactly when the global hypothesis count is within
/// the configured limit and falls back to belief propagation otherwise.
/// Non-converged belief propagation falls back to exact enumeration when
/// feasible; otherwise the best iterate is returned with `converged = false`.
[[nodiscard]] inline Marginals compute_marginals(const MbmState& state, MarginalMode mode,
                                                 const FilterParameters& params = {}) {
  if (state.components.empty()) return {.weights = {}, .converged = true, .exact = true};
  const auto enumerable = [&] {
    return detail::count_global_hypotheses(state, params.enumeration_limit) <=
           params.enumeration_limit;
  };
  switch (mode) {
    case MarginalMode::exact:
      return detail::exact_marginals(state);
    case MarginalMode::lbp: {
      Marginals result = detail::lbp_marginals(state, params);
      if (!result.converged && enumerable()) return detail::exact_marginals(state);
      return result;
    }
    case MarginalMode::automatic:
    default: {
      if (enumerable()) return detail::exact_marginals(state);
      Marginals result = detail::lbp_marginals(state, params);
      return result;
    }
  }
}

/// Collapse the mixture back to one Bernoulli component per prior component.
///
/// Existence is the marginal-weighted sum of hypothesis existences and the
/// density is the moment-matched mixture with weights proportional to
/// marginal times existence.
[[nodiscard]] inline MultiBernoulliState project_to_mb(const MbmState& state,
                                                       const Marginals& marginals) {
  MultiBernoulliState out;
  out.time_index = state.time_index;
  out.components.reserve(state.components.size());
  for (std::size_t i = 0; i < state.components.size(); ++i) {
    const auto& hypotheses = state.components[i];
    const auto& weights = marginals.weights[i];
    BernoulliComponent merged;
    merged.id = hypotheses.front().component.id;
    double r = 0.0;
    for (std::size_t e = 0; e < hypotheses.size(); ++e) {
      r += weights[e] * hypotheses[e].component.r;
    }
    if (r < kWeightFloor) {
      merged.r = 0.0;
      merged.density = hypotheses.front().component.density;
      out.components.push_back(merged);
      continue;
    }
    Vec4 mean = Vec4::Zero();
    for (std::size_t e = 0; e < hypotheses.size(); ++e) {
      mean += weights[e] * hypotheses[e].component.r * hypotheses[e].component.density.mean;
    }
    mean /= r;
    Mat4 cov = Mat4::Zero();
    for (std::size_t e = 0; e < hypotheses.size(); ++e) {
      const double u = weights[e] * hypotheses[e].component.r / r;
      const Vec4 d = hypotheses[e].component.density.mean - mean;
      cov += u * (hypotheses[e].component.density.cov + d * d.transpose());
    }
    merged.r = std::min(r, 1.0);
    merged.density.mean = mean;
    merged.density.cov = symmetrized(cov);
    out.components.push_back(merged);
  }
  return out;
}

/// Symmetrised Mahalanobis distance between two Gaussian densities.
[[nodiscard]] inline double symmetrised_distance(const GaussianDensity& a,
                                                 const GaussianDensity& b) {
  const Vec4 d = a.mean - b.mean;
  const double da = d.dot(a.cov.ldlt().solve(d));
  const double db = d.dot(b.cov.ldlt().solve(d));
  return std::sqrt(std::max(0.5 * (da + db), 0.0));
}

/// Prune negligible components, then greedily merge near-coincident ones.
///
/// Merging clusters around the highest-existence component; mixture weights
/// are proportional to existence and merged existence is capped at one.
[[nodiscard]] inline MultiBernoulliState reduce(const MultiBernoulliState& state,
                                                const FilterParameters& params = {}) {
  std::vector<const BernoulliComponent*> alive;
  for (const BernoulliComponent& component : state.components) {
    if (component.r >= params.prune_threshold) alive.push_back(&component);
  }
  std::vector<std::size_t> order(alive.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return alive[a]->r > alive[b]->r; });

  MultiBernoulliState out;
  out.time_index = state.time_index;
  std::vector<char> absorbed(alive.size(), 0);
  for (const std::size_t seed : order) {
    if (absorbed[seed]) continue;
    absorbed[seed] = 1;
    std::vector<const BernoulliComponent*> cluster{alive[seed]};
    for (const std::size_t other : order) {
      if (absorbed[other]) continue;
      if (symmetrised_distance(alive[seed]->density, alive[other]->density) <
          params.merge_distance) {
        absorbed[other] = 1;
        cluster.push_back(alive[other]);
      }
    }
    BernoulliComponent merged;
    merged.id = cluster.front()->id;
    double r_sum = 0.0;
    for (const BernoulliComponent* c : cluster) r_sum += c->r;
    Vec4 mean = Vec4::Zero();
    for (const BernoulliComponent* c : cluster) mean += c->r / r_sum * c->density.mean;
    Mat4 cov = Mat4::Zero();
    for (const BernoulliComponent* c : cluster) {
      const Vec4 d = c->density.mean - mean;
      cov += c->r / r_sum * (c->density.cov + d * d.transpose());
    }
    merged.r = std::min(r_sum, 1.0);
    merged.density.mean = mean;
    merged.density.cov = symmetrized(cov);
    out.components.push_back(merged);
  }
  return out;
}

/// Report positions of all components whose existence exceeds the threshold.
[[nodiscard]] inline std::vector<Vec2> estimate(const MultiBernoulliState& state,
                                                double threshold) {
  std::vector<Vec2> positions;
  for (const BernoulliComponent& component : state.components) {
    if (component.r > threshold) positions.push_back(position_matrix() * component.density.mean);
  }
  return positions;
}

}  // namespace mbsm
