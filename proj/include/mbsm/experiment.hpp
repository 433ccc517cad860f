#pragma once

#include "mbsm/common.hpp"
#include "mbsm/gospa.hpp"
#include "mbsm/mb_filter.hpp"
#include "mbsm/models.hpp"
#include "mbsm/planner.hpp"
#include "mbsm/random.hpp"
#include "mbsm/sim_world.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mbsm {

// ---- Experiment configuration ----

/// One algorithm column of the comparison table.
struct AlgorithmConfig {
  std::string name;
  PlanDriver driver = PlanDriver::bound;
  int budget_joint = 200;
  int budget_individual = 40;
  int lookahead = 5;
};

/// A complete simulated scene: extent, obstacles, dynamics, sensors, targets.
struct ScenarioConfig {
  int steps = 100;
  Rect extent;
  std::vector<Obstacle> obstacles;
  MotionModel motion;
  BirthModel births;
  SensorModel sensor_model;
  std::vector<PlannerSensor> sensors;
  FilterParameters filter;
  bool scripted = true;
  std::vector<ScriptedTarget> script;
};

/// Batch experiment: scenario, metric, planner knobs and the algorithm list.
struct ExperimentConfig {
  ScenarioConfig scenario;
  std::string scenario_path;
  GospaParameters gospa;
  double decay = 0.9;
  double uct_epsilon = 2.0;
  double proximity = 120.0;
  std::vector<AlgorithmConfig> algorithms;
  int runs = 10;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  bool debug_planner = false;
};

namespace detail {

[[nodiscard]] inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw config_error(path + ": cannot open file");
  try {
    return nlohmann::json::parse(stream);
  } catch (const nlohmann::json::parse_error& error) {
    throw config_error(path + ": " + error.what());
  }
}

template <int N>
[[nodiscard]] Eigen::Matrix<double, N, 1> to_vector(const nlohmann::json& value,
                                                    const std::string& context) {
  if (!value.is_array() || value.size() != N) {
    throw config_error(context + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out(i) = value[static_cast<std::size_t>(i)].get<double>();
  return out;
}

[[nodiscard]] inline Rect to_rect(const nlohmann::json& value, const std::string& context) {
  Rect rect;
  rect.lo = to_vector<2>(value.at("lo"), context + ".lo");
  rect.hi = to_vector<2>(value.at("hi"), context + ".hi");
  if (rect.lo.x() > rect.hi.x() || rect.lo.y() > rect.hi.y()) {
    throw config_error(context + ": lo must not exceed hi");
  }
  return rect;
}

/// Deterministic shortest-round-trip-safe float formatting for CSV cells.
[[nodiscard]] inline std::string format_double(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace detail

/// Load and validate a scenario file.
[[nodiscard]] inline ScenarioConfig load_scenario(const std::string& path) {
  const nlohmann::json root = detail::read_json_file(path);
  ScenarioConfig scenario;
  try {
    scenario.steps = root.at("steps").get<int>();
    if (scenario.steps < 1) throw config_error("steps must be at least 1");
    scenario.extent = detail::to_rect(root.at("extent"), "extent");
    for (const auto& entry : root.value("obstacles", nlohmann::json::array())) {
      scenario.obstacles.push_back(detail::to_rect(entry, "obstacles"));
    }

    const auto& motion = root.at("motion");
    scenario.motion = ncv_motion_model(motion.at("tau").get<double>(),
                                       motion.at("q").get<double>(),
                                       motion.at("p_survival").get<double>());
    if (scenario.motion.p_survival < 0.0 || scenario.motion.p_survival > 1.0) {
      throw config_error("motion.p_survival must be a probability");
    }

    for (const auto& entry : root.at("births")) {
      BirthComponent birth;
      birth.r_birth = entry.at("r").get<double>();
      if (birth.r_birth < 0.0 || birth.r_birth > 1.0) {
        throw config_error("births.r must be a probability");
      }
      birth.density.mean = detail::to_vector<4>(entry.at("mean"), "births.mean");
      const Vec4 diagonal = detail::to_vector<4>(entry.at("cov_diag"), "births.cov_diag");
      birth.density.cov = diagonal.asDiagonal();
      scenario.births.push_back(birth);
    }
    if (scenario.births.empty()) throw config_error("births must be non-empty");

    const auto& sensor = root.at("sensor");
    scenario.sensor_model.p_d_max = sensor.at("p_d_max").get<double>();
    scenario.sensor_model.fov_radius = sensor.at("fov_radius").get<double>();
    if (scenario.sensor_model.fov_radius <= 0.0) {
      throw config_error("sensor.fov_radius must be positive");
    }
    const Vec2 noise = detail::to_vector<2>(sensor.at("noise_diag"), "sensor.noise_diag");
    scenario.sensor_model.noise = noise.asDiagonal();
    scenario.sensor_model.clutter_rate = sensor.at("clutter_rate").get<double>();
    if (scenario.sensor_model.clutter_rate < 0.0) {
      throw config_error("sensor.clutter_rate must be non-negative");
    }
    scenario.sensor_model.integrate_detection = sensor.value("integrate_detection", false);

    for (const auto& entry : root.at("sensors")) {
      PlannerSensor planner_sensor;
      planner_sensor.model = scenario.sensor_model;
      planner_sensor.position = detail::to_vector<2>(entry.at("position"), "sensors.position");
      planner_sensor.step_radius = entry.at("step_radius").get<double>();
      if (planner_sensor.step_radius <= 0.0) {
        throw config_error("sensors.step_radius must be positive");
      }
      scenario.sensors.push_back(planner_sensor);
    }
    if (scenario.sensors.empty()) throw config_error("sensors must be non-empty");

    if (root.contains("filter")) {
      const auto& filter = root.at("filter");
      scenario.filter.prune_threshold =
          filter.value("prune_threshold", scenario.filter.prune_threshold);
      scenario.filter.merge_distance =
          filter.value("merge_distance", scenario.filter.merge_distance);
      scenario.filter.gate_sq_distance =
          filter.value("gate_sq_distance", scenario.filter.gate_sq_distance);
      scenario.filter.report_threshold =
          filter.value("report_threshold", scenario.filter.report_threshold);
      scenario.filter.enumeration_limit =
          filter.value("enumeration_limit", scenario.filter.enumeration_limit);
    }

    const std::string mode = root.value("mode", std::string("scripted"));
    if (mode == "scripted") {
      scenario.scripted = true;
      for (const auto& entry : root.at("scripted_targets")) {
        ScriptedTarget target;
        target.initial_state = detail::to_vector<4>(entry.at("state"), "scripted_targets.state");
        target.birth_step = entry.at("birth_step").get<int>();
        target.death_step = entry.at("death_step").get<int>();
        if (target.birth_step < 0 || target.death_step <= target.birth_step) {
          throw config_error("scripted_targets: death_step must exceed birth_step >= 0");
        }
        scenario.script.push_back(target);
      }
    } else if (mode == "stochastic") {
      scenario.scripted = false;
    } else {
      throw config_error("mode must be 'scripted' or 'stochastic'");
    }

    if (root.value("require_blocked_birth_paths", false)) {
      for (std::size_t s = 0; s < scenario.sensors.size(); ++s) {
        for (const BirthComponent& birth : scenario.births) {
          const Vec2 birth_position = position_matrix() * birth.density.mean;
          bool blocked = false;
          for (const Obstacle& obstacle : scenario.obstacles) {
            if (segment_intersects(obstacle, scenario.sensors[s].position, birth_position)) {
              blocked = true;
              break;
            }
          }
          if (!blocked) {
            throw config_error("sensor " + std::to_string(s) +
                               " has an unobstructed straight path to a birth location");
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& error) {
    throw config_error(path + ": " + error.what());
  } catch (const config_error& error) {
    throw config_error(path + ": " + error.what());
  }
  return scenario;
}

/// Load and validate an experiment file; scenario paths resolve relative to it.
[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::string& path) {
  const nlohmann::json root = detail::read_json_file(path);
  ExperimentConfig config;
  try {
    std::filesystem::path scenario_path(root.at("scenario").get<std::string>());
    if (scenario_path.is_relative()) {
      scenario_path = std::filesystem::path(path).parent_path() / scenario_path;
    }
    config.scenario_path = scenario_path.string();
    config.scenario = load_scenario(config.scenario_path);

    config.runs = root.at("runs").get<int>();
    config.seed = root.at("seed").get<std::uint64_t>();
    config.workers = root.value("workers", 1);
    config.output_dir = root.at("output_dir").get<std::string>();

    const auto& gospa = root.at("gospa");
    config.gospa.c = gospa.at("c").get<double>();
    config.gospa.p = gospa.value("p", 2.0);
    config.gospa.alpha = gospa.value("alpha", 2.0);
    if (!(config.gospa.c > 0.0)) throw config_error("gospa.c must be positive");
    if (config.gospa.p != 2.0 || config.gospa.alpha != 2.0) {
      throw config_error("gospa: only p = 2, alpha = 2 is supported");
    }

    if (root.contains("planner")) {
      const auto& planner = root.at("planner");
      config.decay = planner.value("decay", config.decay);
      config.uct_epsilon = planner.value("uct_epsilon", config.uct_epsilon);
      config.proximity = planner.value("proximity", config.proximity);
    }
    if (config.decay <= 0.0 || config.decay > 1.0) {
      throw config_error("planner.decay must be in (0, 1]");
    }

    if (root.contains("clutter_rate")) {
      const double rate = root.at("clutter_rate").get<double>();
      if (rate < 0.0) throw config_error("clutter_rate must be non-negative");
      config.scenario.sensor_model.clutter_rate = rate;
      for (PlannerSensor& sensor : config.scenario.sensors) {
        sensor.model.clutter_rate = rate;
      }
    }

    for (const auto& entry : root.at("algorithms")) {
      AlgorithmConfig algorithm;
      algorithm.name = entry.at("name").get<std::string>();
      if (algorithm.name.empty() ||
          algorithm.name.find_first_of(",\n\r") != std::string::npos) {
        throw config_error("algorithm names must be non-empty and comma-free");
      }
      const std::string driver = entry.at("driver").get<std::string>();
      if (driver == "bound") {
        algorithm.driver = PlanDriver::bound;
      } else if (driver == "kld") {
        algorithm.driver = PlanDriver::kld;
      } else {
        throw config_error("algorithm driver must be 'bound' or 'kld'");
      }
      algorithm.budget_joint = entry.at("budget_joint").get<int>();
      algorithm.budget_individual = entry.at("budget_individual").get<int>();
      algorithm.lookahead = entry.at("lookahead").get<int>();
      if (algorithm.budget_joint < 1 || algorithm.budget_individual < 1) {
        throw config_error("algorithm budgets must be at least 1");
      }
      if (algorithm.lookahead < 1) throw config_error("algorithm lookahead must be at least 1");
      config.algorithms.push_back(algorithm);
    }
    if (config.algorithms.empty()) throw config_error("algorithms must be non-empty");
    if (config.runs < 1) throw config_error("runs must be at least 1");
    if (config.workers < 1) throw config_error("workers must be at least 1");
  } catch (const nlohmann::json::exception& error) {
    throw config_error(path + ": " + error.what());
  } catch (const config_error& error) {
    throw config_error(path + ": " + error.what());
  }
  return config;
}

// ---- Closed-loop execution ----

/// One scored step of one run.
struct RunRecord {
  std::string algorithm;
  int run = 0;
  int step = 0;
  double sq_gospa = 0.0;
  double loc_sq = 0.0;
  int missed = 0;
  int false_alarms = 0;
  bool joint = false;
  double plan_seconds = 0.0;
};

/// Everything one (algorithm, run) job produces.
struct RunResult {
  std::vector<RunRecord> records;
  std::vector<int> target_counts;
  std::vector<Vec2> final_sensor_positions;
  /// Per sensor: closest approach to the first birth location over the run.
  std::vector<double> min_birth_distance;
  std::vector<std::string> debug_lines;
};

/// Execute the closed loop (plan, act, sense, filter, estimate, score) for one
/// algorithm and one Monte-Carlo run.
[[nodiscard]] inline RunResult run_single(const ExperimentConfig& config, int algorithm_index,
                                          int run) {
  const ScenarioConfig& scenario = config.scenario;
  const AlgorithmConfig& algorithm =
      config.algorithms[static_cast<std::size_t>(algorithm_index)];
  const auto a = static_cast<std::uint64_t>(algorithm_index);
  const auto r = static_cast<std::uint64_t>(run);

  SimWorld world =
      scenario.scripted
          ? SimWorld(scenario.script, scenario.motion)
          : SimWorld(scenario.motion, scenario.births, derive_seed(config.seed, 0x545255, r));
  Rng measurement_rng(derive_seed(config.seed, 0x4d4541, r, a));
  const std::uint64_t plan_seed = derive_seed(config.seed, 0x504c41, r, a);

  PlanningEnvironment environment{scenario.motion, scenario.births, scenario.obstacles,
                                  scenario.extent};
  SensorManagementConfig management;
  management.planner.lookahead = algorithm.lookahead;
  management.planner.decay = config.decay;
  management.planner.uct_epsilon = config.uct_epsilon;
  management.planner.driver = algorithm.driver;
  management.planner.gospa_c = config.gospa.c;
  management.budget_joint = algorithm.budget_joint;
  management.budget_individual = algorithm.budget_individual;
  management.proximity = config.proximity;
  management.debug = config.debug_planner;

  std::vector<PlannerSensor> sensors = scenario.sensors;
  const Vec2 birth_position = position_matrix() * scenario.births.front().density.mean;

  RunResult result;
  result.min_birth_distance.assign(sensors.size(), 1e300);
  MultiBernoulliState belief;
  long next_id = 0;

  for (int step = 0; step < scenario.steps; ++step) {
    world.advance(step);
    result.target_counts.push_back(static_cast<int>(world.targets().size()));

    belief = predict(belief, scenario.motion, scenario.births, next_id);

    const auto start = std::chrono::steady_clock::now();
    const PlanStepResult plan =
        plan_step(belief, sensors, environment, management, derive_seed(plan_seed, step));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    for (std::size_t s = 0; s < sensors.size(); ++s) {
      sensors[s].position = apply_action(sensors[s].position, sensors[s].step_radius,
                                         plan.actions[s]);
      result.min_birth_distance[s] = std::min(result.min_birth_distance[s],
                                              (sensors[s].position - birth_position).norm());
    }

    std::vector<Vec4> target_states;
    for (const GroundTruthTarget& target : world.targets()) target_states.push_back(target.state);
    for (const PlannerSensor& sensor : sensors) {
      const std::vector<Vec2> scan =
          generate_measurements(sensor.model, sensor.position, target_states, measurement_rng);
      const MbmState mixture =
          update_sensor(belief, scan, sensor.model, sensor.position, scenario.filter);
      const Marginals marginals =
          compute_marginals(mixture, MarginalMode::automatic, scenario.filter);
      belief = project_to_mb(mixture, marginals);
    }
    // Reduce once per step, after all sensors: pruning between sensor updates
    // could drop a weak component before a later sensor's detection revives it.
    belief = reduce(belief, scenario.filter);

    const std::vector<Vec2> estimates = estimate(belief, scenario.filter.report_threshold);
    const GospaResult score = gospa(world.positions(), estimates, config.gospa);

    RunRecord record;
    record.algorithm = algorithm.name;
    record.run = run;
    record.step = step;
    record.sq_gospa = score.sq_total;
    record.loc_sq = score.loc_sq;
    record.missed = score.missed;
    record.false_alarms = score.false_alarms;
    record.joint = plan.joint;
    record.plan_seconds = elapsed.count();
    result.records.push_back(record);

    if (config.debug_planner) {
      nlohmann::json line;
      line["algorithm"] = algorithm.name;
      line["run"] = run;
      line["step"] = step;
      nlohmann::json groups = nlohmann::json::array();
      for (const auto& [members, debug] : plan.group_debug) {
        nlohmann::json entry;
        entry["sensors"] = members;
        entry["iterations"] = debug.iterations;
        entry["expansions"] = debug.expansions;
        entry["chosen"] = debug.chosen;
        nlohmann::json children = nlohmann::json::array();
        for (const PlanChildStat& stat : debug.root_children) {
          children.push_back({{"action", stat.action},
                              {"mean_cost", stat.mean_cost},
                              {"immediate_cost", stat.immediate_cost},
                              {"visits", stat.visits}});
        }
        entry["root_children"] = children;
        groups.push_back(entry);
      }
      line["groups"] = groups;
      result.debug_lines.push_back(line.dump());
    }
  }

  for (const PlannerSensor& sensor : sensors) {
    result.final_sensor_positions.push_back(sensor.position);
  }
  return result;
}

/// All jobs of an experiment, executed on a worker pool.
///
/// Job order cannot affect any output: every stochastic stream is derived from
/// (seed, run, algorithm) and rows are sorted before writing.
[[nodiscard]] inline std::vector<std::vector<RunResult>> run_all(const ExperimentConfig& config) {
  const std::size_t algorithm_count = config.algorithms.size();
  const std::size_t total = algorithm_count * static_cast<std::size_t>(config.runs);
  std::vector<std::vector<RunResult>> results(algorithm_count);
  for (auto& row : results) row.resize(static_cast<std::size_t>(config.runs));

  std::atomic<std::size_t> next_job{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const std::size_t worker_count =
      std::min<std::size_t>(static_cast<std::size_t>(config.workers), std::max<std::size_t>(total, 1));
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (std::size_t w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t job = next_job.fetch_add(1);
        if (job >= total) return;
        const std::size_t algorithm_index = job / static_cast<std::size_t>(config.runs);
        const int run = static_cast<int>(job % static_cast<std::size_t>(config.runs));
        try {
          results[algorithm_index][static_cast<std::size_t>(run)] =
              run_single(config, static_cast<int>(algorithm_index), run);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next_job.store(total);
          return;
        }
      }
    });
  }
  for (std::thread& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

/// Run the whole experiment and write the records directory.
inline void run_experiment(const ExperimentConfig& config) {
  const std::vector<std::vector<RunResult>> results = run_all(config);

  namespace fs = std::filesystem;
  const fs::path records_dir = fs::path(config.output_dir) / "records";
  fs::create_directories(records_dir);

  {
    std::ofstream records(records_dir / "records.csv");
    records << "algorithm,run,step,sq_gospa,loc_sq,missed,false,plan_mode\n";
    std::ofstream timings(records_dir / "timings.csv");
    timings << "algorithm,run,step,plan_wallclock_seconds\n";
    for (const auto& runs : results) {
      for (const auto& run : runs) {
        for (const RunRecord& record : run.records) {
          records << record.algorithm << ',' << record.run << ',' << record.step << ','
                  << detail::format_double(record.sq_gospa) << ','
                  << detail::format_double(record.loc_sq) << ',' << record.missed << ','
                  << record.false_alarms << ',' << (record.joint ? "joint" : "individual")
                  << '\n';
          timings << record.algorithm << ',' << record.run << ',' << record.step << ','
                  << detail::format_double(record.plan_seconds) << '\n';
        }
      }
    }
  }

  {
    std::ofstream counts(records_dir / "target_counts.csv");
    counts << "run,step,target_count\n";
    for (std::size_t run = 0; run < results.front().size(); ++run) {
      const RunResult& result = results.front()[run];
      for (std::size_t step = 0; step < result.target_counts.size(); ++step) {
        counts << run << ',' << step << ',' << result.target_counts[step] << '\n';
      }
    }
  }

  {
    nlohmann::json manifest;
    nlohmann::json names = nlohmann::json::array();
    for (const AlgorithmConfig& algorithm : config.algorithms) names.push_back(algorithm.name);
    manifest["algorithms"] = names;
    manifest["gospa_c"] = config.gospa.c;
    manifest["runs"] = config.runs;
    manifest["steps"] = config.scenario.steps;
    manifest["seed"] = config.seed;
    manifest["scenario"] = config.scenario_path;
    std::ofstream stream(records_dir / "manifest.json");
    stream << manifest.dump(2) << '\n';
  }

  {
    nlohmann::json echo;
    echo["scenario"] = config.scenario_path;
    echo["runs"] = config.runs;
    echo["seed"] = config.seed;
    echo["workers"] = config.workers;
    echo["output_dir"] = config.output_dir;
    echo["gospa"] = {{"c", config.gospa.c}, {"p", config.gospa.p}, {"alpha", config.gospa.alpha}};
    echo["planner"] = {{"decay", config.decay},
                       {"uct_epsilon", config.uct_epsilon},
                       {"proximity", config.proximity}};
    nlohmann::json algorithms = nlohmann::json::array();
    for (const AlgorithmConfig& algorithm : config.algorithms) {
      algorithms.push_back({{"name", algorithm.name},
                            {"driver", algorithm.driver == PlanDriver::kld ? "kld" : "bound"},
                            {"budget_joint", algorithm.budget_joint},
                            {"budget_individual", algorithm.budget_individual},
                            {"lookahead", algorithm.lookahead}});
    }
    echo["algorithms"] = algorithms;
    std::ofstream stream(records_dir / "config_echo.json");
    stream << echo.dump(2) << '\n';
  }

  if (config.debug_planner) {
    std::ofstream stream(records_dir / "planner_debug.jsonl");
    for (const auto& runs : results) {
      for (const auto& run : runs) {
        for (const std::string& line : run.debug_lines) stream << line << '\n';
      }
    }
  }
}

// ---- Aggregation ----

/// One row of the summary table.
struct SummaryRow {
  std::string algorithm;
  double rms_gospa = 0.0;
  double mean_plan_seconds = 0.0;
};

namespace detail {

struct ParsedRecords {
  std::vector<std::string> algorithm_order;
  double gospa_c = 0.0;
  // [algorithm][row index aligned across vectors]
  std::map<std::string, std::vector<RunRecord>> rows;
};

[[nodiscard]] inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[nodiscard]] inline ParsedRecords parse_records(const std::string& records_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(records_dir);
  if (!fs::exists(dir / "records.csv")) {
    throw config_error(records_dir + ": records.csv not found");
  }
  ParsedRecords parsed;
  if (fs::exists(dir / "manifest.json")) {
    const nlohmann::json manifest = read_json_file((dir / "manifest.json").string());
    for (const auto& name : manifest.value("algorithms", nlohmann::json::array())) {
      parsed.algorithm_order.push_back(name.get<std::string>());
    }
    parsed.gospa_c = manifest.value("gospa_c", 0.0);
  }

  std::ifstream records(dir / "records.csv");
  std::string line;
  std::getline(records, line);  // header
  while (std::getline(records, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 8) throw config_error(records_dir + ": malformed records.csv row");
    RunRecord record;
    record.algorithm = fields[0];
    record.run = std::stoi(fields[1]);
    record.step = std::stoi(fields[2]);
    record.sq_gospa = std::stod(fields[3]);
    record.loc_sq = std::stod(fields[4]);
    record.missed = std::stoi(fields[5]);
    record.false_alarms = std::stoi(fields[6]);
    record.joint = fields[7] == "joint";
    if (std::find(parsed.algorithm_order.begin(), parsed.algorithm_order.end(),
                  record.algorithm) == parsed.algorithm_order.end()) {
      parsed.algorithm_order.push_back(record.algorithm);
    }
    parsed.rows[record.algorithm].push_back(record);
  }

  if (fs::exists(dir / "timings.csv")) {
    std::ifstream timings(dir / "timings.csv");
    std::getline(timings, line);  // header
    std::map<std::string, std::size_t> cursor;
    while (std::getline(timings, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() != 4) throw config_error(records_dir + ": malformed timings.csv row");
      auto it = parsed.rows.find(fields[0]);
      if (it == parsed.rows.end()) continue;
      std::size_t& index = cursor[fields[0]];
      if (index < it->second.size()) it->second[index++].plan_seconds = std::stod(fields[3]);
    }
  }
  return parsed;
}

}  // namespace detail

/// Aggregate a records directory into per-algorithm summary rows (config
/// order) and write summary.json next to the records.
inline std::vector<SummaryRow> summarise(const std::string& records_dir) {
  const detail::ParsedRecords parsed = detail::parse_records(records_dir);
  std::vector<SummaryRow> summary;
  for (const std::string& algorithm : parsed.algorithm_order) {
    const auto it = parsed.rows.find(algorithm);
    if (it == parsed.rows.end()) continue;
    SummaryRow row;
    row.algorithm = algorithm;
    std::vector<double> sq_values;
    sq_values.reserve(it->second.size());
    double seconds = 0.0;
    for (const RunRecord& record : it->second) {
      sq_values.push_back(record.sq_gospa);
      seconds += record.plan_seconds;
    }
    row.rms_gospa = rms_gospa(sq_values);
    row.mean_plan_seconds =
        it->second.empty() ? 0.0 : seconds / static_cast<double>(it->second.size());
    summary.push_back(row);
  }

  nlohmann::json out = nlohmann::json::array();
  for (const SummaryRow& row : summary) {
    out.push_back({{"algorithm", row.algorithm},
                   {"rms_gospa", row.rms_gospa},
                   {"mean_plan_seconds", row.mean_plan_seconds}});
  }
  std::ofstream stream(std::filesystem::path(records_dir) / "summary.json");
  stream << out.dump(2) << '\n';
  return summary;
}

/// Write the three figure-ready CSVs derived from a records directory:
/// target count vs step, per-algorithm RMS metric vs step, and the
/// per-algorithm error decomposition vs step (means over runs).
inline void emit_plot_data(const std::string& records_dir) {
  namespace fs = std::filesystem;
  const detail::ParsedRecords parsed = detail::parse_records(records_dir);
  const fs::path dir(records_dir);

  {
    std::ofstream stream(dir / "fig_target_count.csv");
    stream << "step,target_count\n";
    if (fs::exists(dir / "target_counts.csv")) {
      std::ifstream counts(dir / "target_counts.csv");
      std::string line;
      std::getline(counts, line);
      std::map<int, std::pair<double, int>> by_step;
      while (std::getline(counts, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != 3) continue;
        auto& [sum, n] = by_step[std::stoi(fields[1])];
        sum += std::stod(fields[2]);
        ++n;
      }
      for (const auto& [step, entry] : by_step) {
        stream << step << ','
               << detail::format_double(entry.first / std::max(entry.second, 1)) << '\n';
      }
    }
  }

  // Per (algorithm, step) aggregates over runs.
  struct StepAggregate {
    double sq = 0.0, loc = 0.0, missed = 0.0, false_alarms = 0.0;
    int n = 0;
  };
  std::map<int, std::map<std::string, StepAggregate>> by_step;
  for (const auto& [algorithm, rows] : parsed.rows) {
    for (const RunRecord& record : rows) {
      StepAggregate& aggregate = by_step[record.step][algorithm];
      aggregate.sq += record.sq_gospa;
      aggregate.loc += record.loc_sq;
      aggregate.missed += record.missed;
      aggregate.false_alarms += record.false_alarms;
      ++aggregate.n;
    }
  }

  {
    std::ofstream stream(dir / "fig_rms_gospa.csv");
    stream << "step,algorithm,rms_gospa\n";
    for (const auto& [step, per_algorithm] : by_step) {
      for (const std::string& algorithm : parsed.algorithm_order) {
        const auto it = per_algorithm.find(algorithm);
        if (it == per_algorithm.end()) continue;
        stream << step << ',' << algorithm << ','
               << detail::format_double(std::sqrt(it->second.sq / it->second.n)) << '\n';
      }
    }
  }

  {
    std::ofstream stream(dir / "fig_decomposition.csv");
    stream << "step,algorithm,sq_gospa,loc_sq,missed,false\n";
    for (const auto& [step, per_algorithm] : by_step) {
      for (const std::string& algorithm : parsed.algorithm_order) {
        const auto it = per_algorithm.find(algorithm);
        if (it == per_algorithm.end()) continue;
        const StepAggregate& aggregate = it->second;
        stream << step << ',' << algorithm << ','
               << detail::format_double(aggregate.sq / aggregate.n) << ','
               << detail::format_double(aggregate.loc / aggregate.n) << ','
               << detail::format_double(aggregate.missed / aggregate.n) << ','
               << detail::format_double(aggregate.false_alarms / aggregate.n) << '\n';
      }
    }
  }
}

}  // namespace mbsm
