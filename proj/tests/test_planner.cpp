#include "mbsm/planner.hpp"

#include "mbsm/random.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace {

using mbsm::ActionProfile;
using mbsm::BernoulliComponent;
using mbsm::Mat2;
using mbsm::Mat4;
using mbsm::PlannerSensor;
using mbsm::Vec2;
using mbsm::Vec4;

[[nodiscard]] Mat4 random_spd(mbsm::Rng& rng, double jitter = 0.5) {
  Mat4 a;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  }
  return a * a.transpose() + jitter * Mat4::Identity();
}

[[nodiscard]] BernoulliComponent random_component(mbsm::Rng& rng) {
  BernoulliComponent out;
  out.r = rng.uniform(0.05, 0.95);
  out.density.mean << rng.uniform(-40.0, 40.0), rng.uniform(-1.0, 1.0),
      rng.uniform(-40.0, 40.0), rng.uniform(-1.0, 1.0);
  out.density.cov = random_spd(rng, 2.0);
  return out;
}

[[nodiscard]] mbsm::PlanningEnvironment open_environment() {
  mbsm::PlanningEnvironment environment;
  environment.motion = mbsm::ncv_motion_model(1.0, 0.05, 0.99);
  environment.extent = mbsm::Rect{Vec2{-500.0, -500.0}, Vec2{500.0, 500.0}};
  return environment;
}

// ---- Single-target cost ----

TEST(OptimalThreshold, HandValues) {
  EXPECT_DOUBLE_EQ(mbsm::optimal_threshold(0.0, 10.0), 0.5);
  EXPECT_DOUBLE_EQ(mbsm::optimal_threshold(25.0, 10.0), 1.0 / 1.5);
  // Trace at or beyond c^2 / 2 pins the threshold to one.
  EXPECT_DOUBLE_EQ(mbsm::optimal_threshold(50.0, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(mbsm::optimal_threshold(500.0, 10.0), 1.0);
}

TEST(BernoulliCost, HandValues) {
  EXPECT_DOUBLE_EQ(mbsm::bernoulli_cost(0.0, 5.0, 10.0), 0.0);
  // Certain target with small trace: pure localisation error.
  EXPECT_DOUBLE_EQ(mbsm::bernoulli_cost(1.0, 5.0, 10.0), 5.0);
  // Below threshold: existence-weighted missed-target penalty.
  EXPECT_DOUBLE_EQ(mbsm::bernoulli_cost(0.3, 0.0, 10.0), 50.0 * 0.3);
  // Above threshold: false-report penalty plus localisation.
  EXPECT_DOUBLE_EQ(mbsm::bernoulli_cost(0.9, 0.0, 10.0), 50.0 * 0.1);
}

TEST(BernoulliCost, ThresholdDecisionIsOptimalOnRandomInputs) {
  mbsm::Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = rng.uniform(0.0, 1.0);
    const double trace = rng.uniform(0.0, 3.0) * rng.uniform(0.0, 200.0);
    const double c = rng.uniform(1.0, 20.0);
    const double cost = mbsm::bernoulli_cost(r, trace, c);
    // Independent grid search over report thresholds.
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 1000; ++k) {
      const double gamma = static_cast<double>(k) / 1000.0;
      const double decision_cost =
          r <= gamma ? c * c / 2.0 * r
                     : c * c / 2.0 * (1.0 - r) + r * std::min(trace, c * c);
      best = std::min(best, decision_cost);
    }
    ASSERT_LE(cost, best + 1e-12) << "trial " << trial;
    ASSERT_GE(cost, 0.0);
    ASSERT_LE(cost, c * c / 2.0 + 1e-12);
  }
}

// ---- Detection patterns ----

TEST(HProbability, HandValueAndNormalisation) {
  // Two sensors, existence 0.8, effective detections 0.4 and 0.2.
  const std::vector<double> p_detect{0.5, 0.25};
  EXPECT_NEAR(mbsm::h_probability(0.8, p_detect, 0b01), 0.4 * 0.8, 1e-15);
  EXPECT_NEAR(mbsm::h_probability(0.8, p_detect, 0b11), 0.4 * 0.2, 1e-15);
  EXPECT_NEAR(mbsm::h_probability(0.8, p_detect, 0b00), 0.6 * 0.8, 1e-15);

  mbsm::Rng rng(88);
  for (int trial = 0; trial < 200; ++trial) {
    const int sensor_count = 1 + rng.uniform_int(3);
    const double r = rng.uniform(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(sensor_count));
    for (double& v : p) v = rng.uniform(0.0, 1.0);
    double total = 0.0;
    for (unsigned pattern = 0; pattern < (1u << sensor_count); ++pattern) {
      const double value = mbsm::h_probability(r, p, pattern);
      ASSERT_GE(value, 0.0);
      total += value;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(HypotheticalUpdate, DetectionMatchesInformationForm) {
  mbsm::Rng rng(55);
  mbsm::SensorModel sensor;
  sensor.noise = 0.7 * Mat2::Identity();
  for (int trial = 0; trial < 100; ++trial) {
    const BernoulliComponent prior = random_component(rng);
    const auto updated = mbsm::hypothetical_update(prior, sensor, 0.5, true);
    EXPECT_DOUBLE_EQ(updated.r, 1.0);
    EXPECT_NEAR((updated.density.mean - prior.density.mean).norm(), 0.0, 1e-12);
    oracle::Kalman reference;
    reference.cov = prior.density.cov;
    ASSERT_NEAR((updated.density.cov -
                 reference.information_updated_cov(sensor.observation, sensor.noise))
                    .norm(),
                0.0, 1e-8)
        << "trial " << trial;
  }
}

TEST(HypotheticalUpdate, MisdetectionLowersExistence) {
  BernoulliComponent prior;
  prior.r = 0.6;
  mbsm::SensorModel sensor;
  const auto updated = mbsm::hypothetical_update(prior, sensor, 0.9, false);
  // (1 - 0.9) * 0.6 / (1 - 0.6 + 0.1 * 0.6)
  EXPECT_NEAR(updated.r, 0.06 / 0.46, 1e-15);
  EXPECT_NEAR((updated.density.mean - prior.density.mean).norm(), 0.0, 1e-15);
  EXPECT_NEAR((updated.density.cov - prior.density.cov).norm(), 0.0, 1e-15);

  // Degenerate certain-detection miss of a certain target.
  BernoulliComponent certain;
  certain.r = 1.0;
  const auto impossible = mbsm::hypothetical_update(certain, sensor, 1.0, false);
  EXPECT_DOUBLE_EQ(impossible.r, 0.0);
}

TEST(MergePatterns, MatchesMixtureMomentOracle) {
  mbsm::Rng rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    const int branch_count = 1 + rng.uniform_int(4);
    std::vector<std::pair<double, BernoulliComponent>> branches;
    std::vector<double> raw(static_cast<std::size_t>(branch_count));
    double total = 0.0;
    for (double& v : raw) {
      v = rng.uniform(0.01, 1.0);
      total += v;
    }
    std::vector<double> weights;
    std::vector<Vec4> means;
    std::vector<Mat4> covs;
    double r = 0.0;
    for (int b = 0; b < branch_count; ++b) {
      const double p = raw[static_cast<std::size_t>(b)] / total;
      BernoulliComponent branch = random_component(rng);
      branches.emplace_back(p, branch);
      r += p * branch.r;
      weights.push_back(p * branch.r);
      means.push_back(branch.density.mean);
      covs.push_back(branch.density.cov);
    }
    for (double& w : weights) w /= r;
    const auto merged = mbsm::merge_patterns(branches);
    const auto moments = oracle::mixture_moments(weights, means, covs);
    ASSERT_NEAR(merged.r, std::min(r, 1.0), 1e-12);
    ASSERT_NEAR((merged.density.mean - moments.mean).norm(), 0.0, 1e-10);
    ASSERT_NEAR((merged.density.cov - moments.cov).norm(), 0.0, 1e-9);
  }
}

TEST(MergePatterns, ZeroExistenceKeepsFirstBranchDensity) {
  BernoulliComponent dead;
  dead.r = 0.0;
  dead.density.mean << 3.0, 0.0, 1.0, 0.0;
  const auto merged = mbsm::merge_patterns({{0.7, dead}, {0.3, dead}});
  EXPECT_DOUBLE_EQ(merged.r, 0.0);
  EXPECT_NEAR((merged.density.mean - dead.density.mean).norm(), 0.0, 1e-15);
}

// ---- Information reward ----

TEST(KldReward, ZeroForIdenticalAndPositiveOtherwise) {
  mbsm::Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const BernoulliComponent predicted = random_component(rng);
    EXPECT_NEAR(mbsm::kld_reward(predicted, predicted), 0.0, 1e-10);

    BernoulliComponent updated = predicted;
    updated.r = rng.uniform(0.0, 1.0);
    updated.density.cov = random_spd(rng, 1.0);
    updated.density.mean += Vec4::Constant(rng.uniform(-1.0, 1.0));
    ASSERT_GE(mbsm::kld_reward(predicted, updated), -1e-12) << "trial " << trial;
  }
}

TEST(KldReward, CovarianceShrinkageIsRewarded) {
  BernoulliComponent predicted;
  predicted.r = 0.5;
  predicted.density.cov = 4.0 * Mat4::Identity();
  BernoulliComponent updated = predicted;
  updated.density.cov = Mat4::Identity();
  const double gain = mbsm::kld_reward(predicted, updated);
  // 0.5 * r * (trace ratio - dim + log-det ratio) with identical means.
  const double expected = 0.5 * 0.5 * (4.0 * 0.25 - 4.0 + 4.0 * std::log(4.0));
  EXPECT_NEAR(gain, expected, 1e-12);
}

// ---- Node evaluation ----

TEST(NodeCost, NoSensorsReducesToPlainBernoulliCost) {
  mbsm::Rng rng(31);
  mbsm::PlannerConfig config;
  config.gospa_c = 10.0;
  std::vector<BernoulliComponent> targets{random_component(rng), random_component(rng)};
  double expected = 0.0;
  for (const auto& target : targets) {
    const Mat2 position_cov =
        mbsm::position_matrix() * target.density.cov * mbsm::position_matrix().transpose();
    expected += mbsm::bernoulli_cost(target.r, position_cov.trace(), config.gospa_c);
  }
  EXPECT_NEAR(mbsm::node_cost(targets, {}, {}, config), expected, 1e-12);
}

TEST(NodeCost, SingleSensorHandExpansion) {
  BernoulliComponent target;
  target.r = 0.7;
  target.density.mean << 10.0, 0.0, 0.0, 0.0;
  target.density.cov = 9.0 * Mat4::Identity();

  PlannerSensor sensor;
  sensor.model.noise = 2.0 * Mat2::Identity();
  sensor.model.detection_override = 0.6;

  mbsm::PlannerConfig config;
  config.gospa_c = 10.0;

  const auto detect = mbsm::hypothetical_update(target, sensor.model, 0.6, true);
  const auto miss = mbsm::hypothetical_update(target, sensor.model, 0.6, false);
  const auto position_trace = [](const BernoulliComponent& b) {
    return (mbsm::position_matrix() * b.density.cov * mbsm::position_matrix().transpose())
        .trace();
  };
  const double p_hit = 0.7 * 0.6;
  const double expected =
      p_hit * mbsm::bernoulli_cost(detect.r, position_trace(detect), 10.0) +
      (1.0 - p_hit) * mbsm::bernoulli_cost(miss.r, position_trace(miss), 10.0);
  EXPECT_NEAR(mbsm::node_cost({target}, {sensor}, {Vec2{0.0, 0.0}}, config), expected, 1e-12);
}

TEST(EvaluateNode, TwoSensorPatternsComposeSequentially) {
  mbsm::Rng rng(6);
  const BernoulliComponent target = random_component(rng);
  PlannerSensor near;
  near.model.noise = Mat2::Identity();
  PlannerSensor far;
  far.model.noise = 3.0 * Mat2::Identity();
  const std::vector<Vec2> positions{Vec2{0.0, 0.0}, Vec2{30.0, 0.0}};

  mbsm::PlannerConfig config;
  config.gospa_c = 12.0;
  const auto evaluation = mbsm::evaluate_node({target}, {near, far}, positions, config);

  // Rebuild the four detection-pattern branches with the tested primitives.
  std::vector<double> p_detect(2);
  p_detect[0] = mbsm::expected_detection_probability(near.model, positions[0], target.density);
  p_detect[1] = mbsm::expected_detection_probability(far.model, positions[1], target.density);
  ASSERT_EQ(evaluation.p_detect.size(), 1u);
  EXPECT_NEAR(evaluation.p_detect[0][0], p_detect[0], 1e-15);
  EXPECT_NEAR(evaluation.p_detect[0][1], p_detect[1], 1e-15);

  double expected_cost = 0.0;
  std::vector<std::pair<double, BernoulliComponent>> branches;
  for (unsigned pattern = 0; pattern < 4; ++pattern) {
    BernoulliComponent branch = target;
    branch = mbsm::hypothetical_update(branch, near.model, p_detect[0], (pattern & 1u) != 0);
    branch = mbsm::hypothetical_update(branch, far.model, p_detect[1], (pattern & 2u) != 0);
    const double probability = mbsm::h_probability(target.r, p_detect, pattern);
    const Mat2 position_cov =
        mbsm::position_matrix() * branch.density.cov * mbsm::position_matrix().transpose();
    expected_cost +=
        probability * mbsm::bernoulli_cost(branch.r, position_cov.trace(), config.gospa_c);
    branches.emplace_back(probability, branch);
  }
  EXPECT_NEAR(evaluation.cost, expected_cost, 1e-12);
  const auto merged = mbsm::merge_patterns(branches);
  ASSERT_EQ(evaluation.targets.size(), 1u);
  EXPECT_NEAR(evaluation.targets[0].r, merged.r, 1e-12);
  EXPECT_NEAR((evaluation.targets[0].density.mean - merged.density.mean).norm(), 0.0, 1e-10);
  EXPECT_NEAR((evaluation.targets[0].density.cov - merged.density.cov).norm(), 0.0, 1e-10);
}

// ---- Tree search mechanics ----

TEST(UctSelect, PrefersUnvisitedThenBalancesExplorationAndCost) {
  mbsm::PlanNode node;
  node.visits = 10;
  auto child = [](ActionProfile action, int visits, double mean_cost) {
    auto out = std::make_unique<mbsm::PlanNode>();
    out->action = std::move(action);
    out->visits = visits;
    out->mean_cost = mean_cost;
    return out;
  };
  node.children.push_back(child({1}, 5, 10.0));
  node.children.push_back(child({2}, 0, 0.0));
  EXPECT_EQ(mbsm::uct_select(node, 2.0, 10.0), 1);  // unvisited first

  node.children[1]->visits = 5;
  node.children[1]->mean_cost = 30.0;
  EXPECT_EQ(mbsm::uct_select(node, 2.0, 30.0), 0);  // equal visits: lower cost

  // Equal mean costs: fewer visits wins through the exploration bonus.
  node.children[1]->mean_cost = 10.0;
  node.children[1]->visits = 2;
  EXPECT_EQ(mbsm::uct_select(node, 2.0, 10.0), 1);

  // Exact ties break toward the smaller action profile.
  node.children[1]->visits = 5;
  EXPECT_EQ(mbsm::uct_select(node, 2.0, 10.0), 0);
}

TEST(MctsPlan, RejectsInvalidConfiguration) {
  mbsm::Rng rng(1);
  PlannerSensor sensor;
  mbsm::PlannerConfig config;
  config.lookahead = 0;
  EXPECT_THROW(mbsm::mcts_plan({}, {sensor}, open_environment(), config, rng),
               mbsm::config_error);
  config.lookahead = 1;
  config.budget = 0;
  EXPECT_THROW(mbsm::mcts_plan({}, {sensor}, open_environment(), config, rng),
               mbsm::config_error);
}

TEST(MctsPlan, DeterministicForEqualSeeds) {
  mbsm::Rng rng_state(2026);
  std::vector<BernoulliComponent> targets{random_component(rng_state),
                                          random_component(rng_state)};
  PlannerSensor sensor;
  sensor.position = Vec2{20.0, 0.0};
  mbsm::PlannerConfig config;
  config.budget = 60;
  config.lookahead = 3;

  mbsm::PlanDebug debug_a;
  mbsm::PlanDebug debug_b;
  mbsm::Rng rng_a(31415);
  mbsm::Rng rng_b(31415);
  const auto profile_a =
      mbsm::mcts_plan(targets, {sensor}, open_environment(), config, rng_a, &debug_a);
  const auto profile_b =
      mbsm::mcts_plan(targets, {sensor}, open_environment(), config, rng_b, &debug_b);
  EXPECT_EQ(profile_a, profile_b);
  EXPECT_EQ(debug_a.expansions, debug_b.expansions);
  EXPECT_EQ(debug_a.root_children.size(), debug_b.root_children.size());
  for (std::size_t j = 0; j < debug_a.root_children.size(); ++j) {
    EXPECT_EQ(debug_a.root_children[j].action, debug_b.root_children[j].action);
    EXPECT_EQ(debug_a.root_children[j].visits, debug_b.root_children[j].visits);
    EXPECT_DOUBLE_EQ(debug_a.root_children[j].mean_cost, debug_b.root_children[j].mean_cost);
  }
}

TEST(MctsPlan, BudgetIsSpentAndAccountedAtTheRoot) {
  mbsm::Rng rng_state(5150);
  std::vector<BernoulliComponent> targets{random_component(rng_state)};
  PlannerSensor sensor;
  mbsm::PlannerConfig config;
  config.budget = 100;
  config.lookahead = 2;
  mbsm::PlanDebug debug;
  mbsm::Rng rng(17);
  (void)mbsm::mcts_plan(targets, {sensor}, open_environment(), config, rng, &debug);
  EXPECT_EQ(debug.iterations, 100);
  EXPECT_LE(debug.expansions, 100);
  int visit_total = 0;
  for (const auto& stat : debug.root_children) visit_total += stat.visits;
  // Every iteration walks through exactly one root child.
  EXPECT_EQ(visit_total, 100);
}

TEST(MctsPlan, RootChildImmediateCostsEqualMyopicBound) {
  mbsm::Rng rng_state(808);
  mbsm::MultiBernoulliState predicted;
  predicted.components = {random_component(rng_state), random_component(rng_state)};
  PlannerSensor sensor;
  sensor.position = Vec2{5.0, -5.0};
  mbsm::PlannerConfig config;
  config.budget = 50;
  config.lookahead = 2;
  mbsm::PlanDebug debug;
  mbsm::Rng rng(92);
  (void)mbsm::mcts_plan(predicted.components, {sensor}, open_environment(), config, rng, &debug);
  ASSERT_FALSE(debug.root_children.empty());
  for (const auto& stat : debug.root_children) {
    ASSERT_NEAR(stat.immediate_cost,
                mbsm::myopic_bound(predicted, {sensor}, stat.action, config), 1e-12);
  }
}

TEST(MctsPlan, SingleStepLookaheadWithFullBudgetIsExactlyMyopic) {
  // With lookahead one and enough budget to expand every child, the tree
  // degenerates to exhaustive one-step minimisation.
  mbsm::PlannerConfig config;
  config.budget = 64;
  config.lookahead = 1;
  const auto environment = open_environment();
  for (int trial = 0; trial < 50; ++trial) {
    mbsm::Rng rng_state(mbsm::derive_seed(1000, static_cast<std::uint64_t>(trial)));
    mbsm::MultiBernoulliState predicted;
    const int target_count = 1 + rng_state.uniform_int(3);
    for (int t = 0; t < target_count; ++t) {
      predicted.components.push_back(random_component(rng_state));
    }
    PlannerSensor sensor;
    sensor.position = Vec2{rng_state.uniform(-30.0, 30.0), rng_state.uniform(-30.0, 30.0)};

    mbsm::Rng rng(mbsm::derive_seed(2000, static_cast<std::uint64_t>(trial)));
    const auto chosen =
        mbsm::mcts_plan(predicted.components, {sensor}, environment, config, rng);

    double best = std::numeric_limits<double>::infinity();
    ActionProfile best_profile;
    for (int action = 0; action < mbsm::kActionCount; ++action) {
      const ActionProfile profile{action};
      const double cost = mbsm::myopic_bound(predicted, {sensor}, profile, config);
      if (cost < best) {
        best = cost;
        best_profile = profile;
      }
    }
    ASSERT_NEAR(mbsm::myopic_bound(predicted, {sensor}, chosen, config), best, 1e-12)
        << "trial " << trial;
    ASSERT_EQ(chosen, best_profile) << "trial " << trial;
  }
}

TEST(MctsPlan, KldDriverReturnsFeasibleProfile) {
  mbsm::Rng rng_state(66);
  std::vector<BernoulliComponent> targets{random_component(rng_state)};
  PlannerSensor sensor;
  mbsm::PlannerConfig config;
  config.budget = 40;
  config.lookahead = 2;
  config.driver = mbsm::PlanDriver::kld;
  mbsm::Rng rng(3);
  const auto profile = mbsm::mcts_plan(targets, {sensor}, open_environment(), config, rng);
  ASSERT_EQ(profile.size(), 1u);
  EXPECT_GE(profile[0], 0);
  EXPECT_LT(profile[0], mbsm::kActionCount);
}

// ---- Grouping ----

TEST(GroupSensors, ConnectedComponentsUnderStrictProximity) {
  const std::vector<Vec2> positions{Vec2{0.0, 0.0}, Vec2{100.0, 0.0}, Vec2{300.0, 0.0}};
  const auto groups = mbsm::group_sensors(positions, 120.0);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(groups[1], (std::vector<int>{2}));

  // Transitive chaining: pairwise within proximity links the whole chain.
  const std::vector<Vec2> chain{Vec2{0.0, 0.0}, Vec2{110.0, 0.0}, Vec2{220.0, 0.0}};
  const auto chained = mbsm::group_sensors(chain, 120.0);
  ASSERT_EQ(chained.size(), 1u);
  EXPECT_EQ(chained[0], (std::vector<int>{0, 1, 2}));

  // The proximity test is strict.
  const std::vector<Vec2> boundary{Vec2{0.0, 0.0}, Vec2{120.0, 0.0}};
  EXPECT_EQ(mbsm::group_sensors(boundary, 120.0).size(), 2u);
}

TEST(GroupBudget, ScalesWithGroupSize) {
  mbsm::SensorManagementConfig config;
  config.budget_individual = 40;
  config.budget_joint = 200;
  EXPECT_EQ(mbsm::group_budget(config, 1), 40);
  EXPECT_EQ(mbsm::group_budget(config, 2), 200);
  EXPECT_EQ(mbsm::group_budget(config, 3), 300);
  EXPECT_EQ(mbsm::group_budget(config, 4), 400);
}

TEST(PlanStep, CoversAllSensorsAndReportsJointness) {
  mbsm::Rng rng_state(121);
  mbsm::MultiBernoulliState predicted;
  predicted.components = {random_component(rng_state), random_component(rng_state)};

  PlannerSensor a;
  a.position = Vec2{0.0, 0.0};
  PlannerSensor b;
  b.position = Vec2{50.0, 0.0};
  PlannerSensor c;
  c.position = Vec2{400.0, 0.0};

  mbsm::SensorManagementConfig config;
  config.planner.budget = 30;
  config.planner.lookahead = 2;
  config.budget_individual = 20;
  config.budget_joint = 40;
  config.debug = true;

  const auto result =
      mbsm::plan_step(predicted, {a, b, c}, open_environment(), config, 777);
  ASSERT_EQ(result.actions.size(), 3u);
  for (const int action : result.actions) {
    EXPECT_GE(action, 0);
    EXPECT_LT(action, mbsm::kActionCount);
  }
  EXPECT_TRUE(result.joint);  // a and b are within proximity
  ASSERT_EQ(result.group_debug.size(), 2u);
  EXPECT_EQ(result.group_debug[0].first, (std::vector<int>{0, 1}));
  EXPECT_EQ(result.group_debug[0].second.iterations, 40);
  EXPECT_EQ(result.group_debug[1].first, (std::vector<int>{2}));
  EXPECT_EQ(result.group_debug[1].second.iterations, 20);

  const auto repeat =
      mbsm::plan_step(predicted, {a, b, c}, open_environment(), config, 777);
  EXPECT_EQ(result.actions, repeat.actions);
}

TEST(PlanStep, ObstaclesRestrictChosenActions) {
  // A sensor pinned between walls can only hold or slide vertically; the
  // planner must still return a feasible action.
  mbsm::PlanningEnvironment environment = open_environment();
  environment.obstacles.push_back(mbsm::Obstacle{Vec2{5.0, -500.0}, Vec2{20.0, 500.0}});
  environment.obstacles.push_back(mbsm::Obstacle{Vec2{-20.0, -500.0}, Vec2{-5.0, 500.0}});

  mbsm::Rng rng_state(99);
  mbsm::MultiBernoulliState predicted;
  predicted.components = {random_component(rng_state)};
  PlannerSensor sensor;
  sensor.position = Vec2{0.0, 0.0};
  sensor.step_radius = 15.0;

  mbsm::SensorManagementConfig config;
  config.planner.lookahead = 3;
  config.budget_individual = 25;
  const auto result = mbsm::plan_step(predicted, {sensor}, environment, config, 5);
  const auto feasible = mbsm::available_actions(sensor.position, sensor.step_radius,
                                                environment.obstacles, environment.extent);
  EXPECT_TRUE(std::binary_search(feasible.begin(), feasible.end(), result.actions[0]));
}

}  // namespace
