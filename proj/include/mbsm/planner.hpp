#pragma once

#include "mbsm/common.hpp"
#include "mbsm/mb_filter.hpp"
#include "mbsm/models.hpp"
#include "mbsm/random.hpp"
#include "mbsm/sim_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

namespace mbsm {

// ---- Single-target planning costs ----

/// Existence threshold at which reporting a target becomes worthwhile.
[[nodiscard]] inline double optimal_threshold(double cov_trace, double c) {
  return 1.0 / (2.0 - std::min(2.0 * cov_trace / (c * c), 1.0));
}

/// Upper bound on the expected squared metric error of a Bernoulli component,
/// evaluated at the optimal report threshold.
///
/// Below the threshold the component is not reported and the bound is the
/// missed-target penalty weighted by existence; above it the bound trades the
/// false-report penalty against the localisation error.
[[nodiscard]] inline double bernoulli_cost(double r, double cov_trace, double c) {
  const double half_sq = c * c / 2.0;
  if (r <= optimal_threshold(cov_trace, c)) return half_sq * r;
  return half_sq * (1.0 - r) + r * std::min(cov_trace, c * c);
}

/// Probability of the detection pattern `pattern` (bit s set means sensor s
/// detects), evaluated with the predicted existence for every sensor.
[[nodiscard]] inline double h_probability(double r_predicted,
                                          const std::vector<double>& p_detect,
                                          unsigned pattern) {
  double probability = 1.0;
  for (std::size_t s = 0; s < p_detect.size(); ++s) {
    const double p = r_predicted * p_detect[s];
    probability *= (pattern >> s & 1u) ? p : (1.0 - p);
  }
  return probability;
}

/// Measurement-free single-sensor update of one Bernoulli component.
///
/// A detection collapses existence to one and shrinks the covariance by the
/// Kalman information gain; the mean is unchanged because no measurement
/// value is hypothesised.  A misdetection keeps the density and lowers the
/// existence.
[[nodiscard]] inline BernoulliComponent hypothetical_update(const BernoulliComponent& prior,
                                                            const SensorModel& sensor,
                                                            double p_detect, bool detected) {
  BernoulliComponent out = prior;
  if (detected) {
    const Mat24& h = sensor.observation;
    const Mat2 innovation_cov = conditioned(h * prior.density.cov * h.transpose() + sensor.noise);
    const Mat42 gain = prior.density.cov * h.transpose() * innovation_cov.inverse();
    out.density.cov = symmetrized(prior.density.cov - gain * innovation_cov * gain.transpose());
    out.r = 1.0;
  } else {
    const double denominator = 1.0 - prior.r + (1.0 - p_detect) * prior.r;
    out.r = denominator < kWeightFloor ? 0.0 : (1.0 - p_detect) * prior.r / denominator;
  }
  return out;
}

/// Moment-match the detection-pattern branches of one target back to a single
/// Bernoulli component; branch probabilities must sum to one.
[[nodiscard]] inline BernoulliComponent merge_patterns(
    const std::vector<std::pair<double, BernoulliComponent>>& branches) {
  BernoulliComponent merged = branches.front().second;
  double r = 0.0;
  for (const auto& [p, branch] : branches) r += p * branch.r;
  if (r < kWeightFloor) {
    merged.r = 0.0;
    return merged;
  }
  Vec4 mean = Vec4::Zero();
  for (const auto& [p, branch] : branches) mean += p * branch.r * branch.density.mean;
  mean /= r;
  Mat4 cov = Mat4::Zero();
  for (const auto& [p, branch] : branches) {
    const Vec4 d = branch.density.mean - mean;
    cov += p * branch.r / r * (branch.density.cov + d * d.transpose());
  }
  merged.r = std::min(r, 1.0);
  merged.density.mean = mean;
  merged.density.cov = symmetrized(cov);
  return merged;
}

/// Kullback-Leibler divergence of an updated Bernoulli component from its
/// prediction (existence part plus existence-weighted Gaussian part).
[[nodiscard]] inline double kld_reward(const BernoulliComponent& predicted,
                                       const BernoulliComponent& updated) {
  const double rp = std::clamp(predicted.r, 1e-9, 1.0 - 1e-9);
  const double ru = std::clamp(updated.r, 0.0, 1.0);
  double value = 0.0;
  if (ru > 0.0) value += ru * std::log(ru / rp);
  if (ru < 1.0) value += (1.0 - ru) * std::log((1.0 - ru) / (1.0 - rp));
  if (ru > 0.0) {
    const Eigen::LLT<Mat4> llt_p(symmetrized(predicted.density.cov));
    const Eigen::LLT<Mat4> llt_u(symmetrized(updated.density.cov));
    double log_det_p = 0.0;
    double log_det_u = 0.0;
    for (int i = 0; i < 4; ++i) {
      log_det_p += 2.0 * std::log(llt_p.matrixL()(i, i));
      log_det_u += 2.0 * std::log(llt_u.matrixL()(i, i));
    }
    const Mat4 ratio = llt_p.solve(updated.density.cov);
    const Vec4 d = updated.density.mean - predicted.density.mean;
    const double gaussian =
        0.5 * (ratio.trace() + d.dot(llt_p.solve(d)) - 4.0 + log_det_p - log_det_u);
    value += ru * gaussian;
  }
  return value;
}

// ---- Multi-sensor node evaluation ----

/// What the planner minimises per branch.
enum class PlanDriver {
  /// Metric upper bound on a position-projected component.
  bound,
  /// Negated information gain of the component update.
  kld,
};

/// Planner tuning, shared by every tree of one planning invocation.
struct PlannerConfig {
  int budget = 200;
  int lookahead = 5;
  double decay = 0.9;
  double uct_epsilon = 2.0;
  PlanDriver driver = PlanDriver::bound;
  double gospa_c = 80.0;
};

/// One controllable sensor as seen by the planner.
struct PlannerSensor {
  SensorModel model;
  Vec2 position = Vec2::Zero();
  double step_radius = 15.0;
};

/// Obstacles, extent and target dynamics the planner looks ahead through.
struct PlanningEnvironment {
  MotionModel motion;
  BirthModel births;
  std::vector<Obstacle> obstacles;
  Rect extent;
};

/// Joint action: one action index per sensor of the planned group.
using ActionProfile = std::vector<int>;

/// Expected cost plus the merged per-target beliefs after a sensor placement.
struct NodeEvaluation {
  double cost = 0.0;
  std::vector<BernoulliComponent> targets;
  std::vector<std::vector<double>> p_detect;
};

namespace detail {

/// Branch cost under the configured driver.
[[nodiscard]] inline double branch_cost(const BernoulliComponent& predicted,
                                        const BernoulliComponent& branch,
                                        const PlannerConfig& config) {
  if (config.driver == PlanDriver::kld) return -kld_reward(predicted, branch);
  const Mat2 position_cov =
      position_matrix() * branch.density.cov * position_matrix().transpose();
  return bernoulli_cost(branch.r, position_cov.trace(), config.gospa_c);
}

}  // namespace detail

/// Evaluate placing the group's sensors at `positions` against predicted
/// targets: expected branch cost summed over targets and detection patterns,
/// plus the pattern-merged posterior per target.
[[nodiscard]] inline NodeEvaluation evaluate_node(const std::vector<BernoulliComponent>& predicted,
                                                  const std::vector<PlannerSensor>& sensors,
                                                  const std::vector<Vec2>& positions,
                                                  const PlannerConfig& config) {
  const std::size_t sensor_count = sensors.size();
  const unsigned pattern_count = 1u << sensor_count;
  NodeEvaluation out;
  out.targets.reserve(predicted.size());
  out.p_detect.reserve(predicted.size());
  for (const BernoulliComponent& target : predicted) {
    std::vector<double> p_detect(sensor_count);
    for (std::size_t s = 0; s < sensor_count; ++s) {
      p_detect[s] =
          expected_detection_probability(sensors[s].model, positions[s], target.density);
    }
    std::vector<std::pair<double, BernoulliComponent>> branches;
    branches.reserve(pattern_count);
    for (unsigned pattern = 0; pattern < pattern_count; ++pattern) {
      const double probability = h_probability(target.r, p_detect, pattern);
      BernoulliComponent branch = target;
      for (std::size_t s = 0; s < sensor_count; ++s) {
        branch = hypothetical_update(branch, sensors[s].model, p_detect[s],
                                     (pattern >> s & 1u) != 0);
      }
      out.cost += probability * detail::branch_cost(target, branch, config);
      branches.emplace_back(probability, branch);
    }
    out.targets.push_back(merge_patterns(branches));
    out.p_detect.push_back(std::move(p_detect));
  }
  return out;
}

/// Expected cost of a sensor placement (no posterior needed).
[[nodiscard]] inline double node_cost(const std::vector<BernoulliComponent>& predicted,
                                      const std::vector<PlannerSensor>& sensors,
                                      const std::vector<Vec2>& positions,
                                      const PlannerConfig& config) {
  return evaluate_node(predicted, sensors, positions, config).cost;
}

/// One-step objective of an action profile from the current poses.
[[nodiscard]] inline double myopic_bound(const MultiBernoulliState& predicted,
                                         const std::vector<PlannerSensor>& sensors,
                                         const ActionProfile& profile,
                                         const PlannerConfig& config) {
  std::vector<Vec2> positions(sensors.size());
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    positions[s] = apply_action(sensors[s].position, sensors[s].step_radius,
                                profile[s]);
  }
  return node_cost(predicted.components, sensors, positions, config);
}

// ---- Monte Carlo tree search ----

/// Search-tree node: one sensor-group placement at a lookahead depth.
struct PlanNode {
  /// Action profile that led here from the parent.
  ActionProfile action;
  int visits = 0;
  /// Mean of the discounted path costs backed up through this node.
  double mean_cost = 0.0;
  /// Expected cost of this placement alone.
  double immediate_cost = 0.0;
  int depth = 0;
  std::vector<BernoulliComponent> targets;
  std::vector<Vec2> positions;
  std::vector<std::vector<double>> p_detect;
  std::vector<ActionProfile> untried;
  std::vector<std::unique_ptr<PlanNode>> children;
};

/// Upper-confidence child selection over a fully expanded node.
///
/// Maximises -mean_cost/scale + epsilon * sqrt(ln n / n_j); an unvisited
/// child is selected outright and ties go to the lexicographically smallest
/// action profile.
[[nodiscard]] inline int uct_select(const PlanNode& node, double epsilon, double scale) {
  const double safe_scale = std::max(scale, 1e-12);
  int best = -1;
  double best_score = 0.0;
  for (int j = 0; j < static_cast<int>(node.children.size()); ++j) {
    const PlanNode& child = *node.children[static_cast<std::size_t>(j)];
    if (child.visits == 0) return j;
    const double score =
        -child.mean_cost / safe_scale +
        epsilon * std::sqrt(std::log(static_cast<double>(std::max(node.visits, 1))) /
                            static_cast<double>(child.visits));
    if (best < 0 || score > best_score ||
        (score == best_score &&
         child.action < node.children[static_cast<std::size_t>(best)]->action)) {
      best = j;
      best_score = score;
    }
  }
  return best;
}

namespace detail {

/// Survival-thinned prediction of planning beliefs with births appended.
[[nodiscard]] inline std::vector<BernoulliComponent> predict_beliefs(
    const std::vector<BernoulliComponent>& targets, const PlanningEnvironment& environment) {
  std::vector<BernoulliComponent> out;
  out.reserve(targets.size() + environment.births.size());
  for (const BernoulliComponent& target : targets) {
    BernoulliComponent predicted = target;
    predicted.r = target.r * environment.motion.p_survival;
    predicted.density.mean = environment.motion.transition * target.density.mean;
    predicted.density.cov =
        symmetrized(environment.motion.transition * target.density.cov *
                        environment.motion.transition.transpose() +
                    environment.motion.noise);
    out.push_back(predicted);
  }
  for (const BirthComponent& birth : environment.births) {
    BernoulliComponent born;
    born.r = birth.r_birth;
    born.density = birth.density;
    out.push_back(born);
  }
  return out;
}

/// All feasible action profiles at the given poses, lexicographic order.
[[nodiscard]] inline std::vector<ActionProfile> action_profiles(
    const std::vector<PlannerSensor>& sensors, const std::vector<Vec2>& positions,
    const PlanningEnvironment& environment) {
  std::vector<std::vector<int>> per_sensor;
  per_sensor.reserve(sensors.size());
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    per_sensor.push_back(available_actions(positions[s], sensors[s].step_radius,
                                           environment.obstacles, environment.extent));
  }
  std::vector<ActionProfile> profiles;
  ActionProfile current(sensors.size(), 0);
  std::function<void(std::size_t)> build = [&](std::size_t s) {
    if (s == sensors.size()) {
      profiles.push_back(current);
      return;
    }
    for (const int action : per_sensor[s]) {
      current[s] = action;
      build(s + 1);
    }
  };
  build(0);
  return profiles;
}

/// Random feasible action profile (independent uniform draw per sensor).
[[nodiscard]] inline ActionProfile random_profile(const std::vector<PlannerSensor>& sensors,
                                                  const std::vector<Vec2>& positions,
                                                  const PlanningEnvironment& environment,
                                                  Rng& rng) {
  ActionProfile profile(sensors.size(), kHoldAction);
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const std::vector<int> actions = available_actions(
        positions[s], sensors[s].step_radius, environment.obstacles, environment.extent);
    profile[s] = actions[static_cast<std::size_t>(rng.uniform_int(
        static_cast<int>(actions.size())))];
  }
  return profile;
}

[[nodiscard]] inline std::vector<Vec2> profile_positions(
    const std::vector<PlannerSensor>& sensors, const std::vector<Vec2>& positions,
    const ActionProfile& profile) {
  std::vector<Vec2> out(sensors.size());
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    out[s] = apply_action(positions[s], sensors[s].step_radius, profile[s]);
  }
  return out;
}

}  // namespace detail

/// Per-root-child statistics for planner diagnostics.
struct PlanChildStat {
  ActionProfile action;
  double mean_cost = 0.0;
  double immediate_cost = 0.0;
  int visits = 0;
};

/// Diagnostics of one planned tree.
struct PlanDebug {
  int iterations = 0;
  int expansions = 0;
  double scale = 0.0;
  ActionProfile chosen;
  std::vector<PlanChildStat> root_children;
};

/// Plan one sensor group with reduced-tree Monte Carlo search.
///
/// The root carries the already-predicted belief; deeper placements re-predict
/// and append births.  The budget counts tree iterations (normally one node
/// expansion each); the tree is discarded afterwards and only the chosen first
/// action profile is returned.
[[nodiscard]] inline ActionProfile mcts_plan(const std::vector<BernoulliComponent>& predicted,
                                             const std::vector<PlannerSensor>& sensors,
                                             const PlanningEnvironment& environment,
                                             const PlannerConfig& config, Rng& rng,
                                             PlanDebug* debug = nullptr) {
  if (config.lookahead < 1) throw config_error("mcts_plan: lookahead must be at least 1");
  if (config.budget < 1) throw config_error("mcts_plan: budget must be at least 1");

  PlanNode root;
  root.depth = 0;
  root.targets = predicted;
  root.positions.reserve(sensors.size());
  for (const PlannerSensor& sensor : sensors) root.positions.push_back(sensor.position);
  root.untried = detail::action_profiles(sensors, root.positions, environment);

  double scale = 0.0;
  int expansions = 0;
  int iterations = 0;
  for (; iterations < config.budget; ++iterations) {
    PlanNode* node = &root;
    std::vector<PlanNode*> path{node};
    while (node->untried.empty() && !node->children.empty()) {
      node = node->children[static_cast<std::size_t>(
                                uct_select(*node, config.uct_epsilon, scale))]
                 .get();
      path.push_back(node);
    }

    double rollout_cost = 0.0;
    if (node->depth < config.lookahead && !node->untried.empty()) {
      const int pick = rng.uniform_int(static_cast<int>(node->untried.size()));
      const ActionProfile profile = node->untried[static_cast<std::size_t>(pick)];
      node->untried[static_cast<std::size_t>(pick)] = node->untried.back();
      node->untried.pop_back();

      auto child = std::make_unique<PlanNode>();
      child->action = profile;
      child->depth = node->depth + 1;
      child->positions = detail::profile_positions(sensors, node->positions, profile);
      const std::vector<BernoulliComponent> base =
          node->depth == 0 ? node->targets
                           : detail::predict_beliefs(node->targets, environment);
      NodeEvaluation evaluation = evaluate_node(base, sensors, child->positions, config);
      child->immediate_cost = evaluation.cost;
      child->targets = std::move(evaluation.targets);
      child->p_detect = std::move(evaluation.p_detect);
      if (child->depth < config.lookahead) {
        child->untried = detail::action_profiles(sensors, child->positions, environment);
      }
      node->children.push_back(std::move(child));
      path.push_back(node->children.back().get());
      ++expansions;

      // Uniform-random rollout to the horizon.
      PlanNode* leaf = path.back();
      std::vector<BernoulliComponent> targets = leaf->targets;
      std::vector<Vec2> positions = leaf->positions;
      for (int depth = leaf->depth + 1; depth <= config.lookahead; ++depth) {
        const ActionProfile rollout_profile =
            detail::random_profile(sensors, positions, environment, rng);
        positions = detail::profile_positions(sensors, positions, rollout_profile);
        const std::vector<BernoulliComponent> rolled =
            detail::predict_beliefs(targets, environment);
        NodeEvaluation evaluation = evaluate_node(rolled, sensors, positions, config);
        rollout_cost += std::pow(config.decay, depth - 1) * evaluation.cost;
        targets = std::move(evaluation.targets);
      }
    }

    double delta = rollout_cost;
    for (const PlanNode* p : path) {
      if (p->depth >= 1) delta += std::pow(config.decay, p->depth - 1) * p->immediate_cost;
    }
    scale = std::max(scale, std::abs(delta));
    for (PlanNode* p : path) {
      p->mean_cost =
          (p->mean_cost * p->visits + delta) / static_cast<double>(p->visits + 1);
      ++p->visits;
    }
  }

  int best = -1;
  for (int j = 0; j < static_cast<int>(root.children.size()); ++j) {
    const PlanNode& child = *root.children[static_cast<std::size_t>(j)];
    const PlanNode* incumbent =
        best >= 0 ? root.children[static_cast<std::size_t>(best)].get() : nullptr;
    if (incumbent == nullptr || child.mean_cost < incumbent->mean_cost ||
        (child.mean_cost == incumbent->mean_cost && child.action < incumbent->action)) {
      best = j;
    }
  }
  const ActionProfile chosen = best >= 0
                                   ? root.children[static_cast<std::size_t>(best)]->action
                                   : ActionProfile(sensors.size(), kHoldAction);
  if (debug != nullptr) {
    debug->iterations = iterations;
    debug->expansions = expansions;
    debug->scale = scale;
    debug->chosen = chosen;
    debug->root_children.clear();
    for (const auto& child : root.children) {
      debug->root_children.push_back(
          {child->action, child->mean_cost, child->immediate_cost, child->visits});
    }
  }
  return chosen;
}

// ---- Multi-group sensor management ----

/// Connected components of sensors closer than `proximity`, each sorted,
/// ordered by smallest member.
[[nodiscard]] inline std::vector<std::vector<int>> group_sensors(
    const std::vector<Vec2>& positions, double proximity) {
  const int n = static_cast<int>(positions.size());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    if (seen[static_cast<std::size_t>(i)]) continue;
    std::vector<int> group;
    std::vector<int> frontier{i};
    seen[static_cast<std::size_t>(i)] = 1;
    while (!frontier.empty()) {
      const int k = frontier.back();
      frontier.pop_back();
      group.push_back(k);
      for (int j = 0; j < n; ++j) {
        if (seen[static_cast<std::size_t>(j)]) continue;
        if ((positions[static_cast<std::size_t>(k)] - positions[static_cast<std::size_t>(j)])
                .norm() < proximity) {
          seen[static_cast<std::size_t>(j)] = 1;
          frontier.push_back(j);
        }
      }
    }
    std::sort(group.begin(), group.end());
    groups.push_back(std::move(group));
  }
  return groups;
}

/// Sensor-management configuration: planner knobs plus grouping budgets.
struct SensorManagementConfig {
  PlannerConfig planner;
  /// Tree budget for a group of two sensors planned jointly.
  int budget_joint = 200;
  /// Tree budget for a singleton group.
  int budget_individual = 40;
  /// Grouping proximity.
  double proximity = 120.0;
  bool debug = false;
};

/// Tree budget for a group of the given size.
[[nodiscard]] inline int group_budget(const SensorManagementConfig& config, int group_size) {
  if (group_size <= 1) return config.budget_individual;
  if (group_size == 2) return config.budget_joint;
  return config.budget_joint * group_size / 2;
}

/// Outcome of one planning step over all sensors.
struct PlanStepResult {
  /// Chosen action per sensor, aligned with the sensor list.
  std::vector<int> actions;
  /// Whether any group of two or more sensors was planned jointly.
  bool joint = false;
  /// Group diagnostics, populated when debugging is enabled.
  std::vector<std::pair<std::vector<int>, PlanDebug>> group_debug;
};

/// Group the sensors by proximity and plan each group's tree independently;
/// group RNG streams are derived from `seed` so scheduling cannot affect them.
[[nodiscard]] inline PlanStepResult plan_step(const MultiBernoulliState& predicted,
                                              const std::vector<PlannerSensor>& sensors,
                                              const PlanningEnvironment& environment,
                                              const SensorManagementConfig& config,
                                              std::uint64_t seed) {
  std::vector<Vec2> positions;
  positions.reserve(sensors.size());
  for (const PlannerSensor& sensor : sensors) positions.push_back(sensor.position);
  const std::vector<std::vector<int>> groups = group_sensors(positions, config.proximity);

  PlanStepResult result;
  result.actions.assign(sensors.size(), kHoldAction);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::vector<int>& group = groups[g];
    std::vector<PlannerSensor> members;
    members.reserve(group.size());
    for (const int s : group) members.push_back(sensors[static_cast<std::size_t>(s)]);
    PlannerConfig tree_config = config.planner;
    tree_config.budget = group_budget(config, static_cast<int>(group.size()));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    PlanDebug debug;
    const ActionProfile profile =
        mcts_plan(predicted.components, members, environment, tree_config, rng,
                  config.debug ? &debug : nullptr);
    for (std::size_t k = 0; k < group.size(); ++k) {
      result.actions[static_cast<std::size_t>(group[k])] = profile[k];
    }
    if (group.size() >= 2) result.joint = true;
    if (config.debug) result.group_debug.emplace_back(group, debug);
  }
  return result;
}

}  // namespace mbsm
