// Command-line driver: scenario-based data collection, sensor scoring,
// subset selection, observability verification, and ground-truth export.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "sensorsel/io.hpp"
#include "sensorsel/oracle.hpp"
#include "sensorsel/scenario.hpp"
#include "sensorsel/selector.hpp"

namespace fs = std::filesystem;
using namespace sensorsel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDimension = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string output_dir;  // overrides scenario / environment
  int threads = 0;         // 0: keep scenario value
};

std::string scenario_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

std::string resolve_output_dir(const CommonArgs& args, const Scenario& scenario) {
  if (!args.output_dir.empty()) return args.output_dir;
  if (!scenario.output_dir.empty()) return scenario.output_dir;
  if (const char* env = std::getenv("SENSORSEL_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

struct LoadedScenario {
  Scenario scenario;
  std::string out_dir;
  std::string base_dir;
};

LoadedScenario load_common(const CommonArgs& args) {
  Scenario scenario = load_scenario(args.scenario_path);
  if (args.threads > 0) scenario.threads = args.threads;
  LoadedScenario out{std::move(scenario), "", scenario_dir(args.scenario_path)};
  out.out_dir = resolve_output_dir(args, out.scenario);
  fs::create_directories(out.out_dir);
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int cmd_generate(const CommonArgs& args) {
  const LoadedScenario loaded = load_common(args);
  const PlantSource& src = loaded.scenario.plant;
  if (!src.random_stable && !src.oscillator_network)
    throw ConfigError("generate: the scenario must name a plant generator");
  const LtiSystem sys = resolve_plant(src, loaded.base_dir);
  const std::string path = join_path(loaded.out_dir, "plant.json");
  save_plant(path, sys);
  std::cout << path << "\n";
  return kExitOk;
}

int cmd_collect(const CommonArgs& args) {
  const LoadedScenario loaded = load_common(args);
  LtiSystem plant = resolve_plant(loaded.scenario.plant, loaded.base_dir);
  const PipelineConfig cfg = pipeline_config(loaded.scenario, std::move(plant));

  const SelectionIndex eval_union =
      SelectionIndex(cfg.candidates, static_cast<int>(cfg.plant.p()))
          .union_with(cfg.seed_sensors);
  const MatrixXd u = generate_excitation(cfg.excitation, cfg.plant.m());
  const Trajectory traj = simulate(cfg.plant, u, cfg.seed_sensors, eval_union);

  const std::string path = join_path(loaded.out_dir, "trajectory.csv");
  save_trajectory_csv(path, traj);
  std::cout << path << "\n";
  return kExitOk;
}

std::string oracle_errors_csv(const SelectionResult& result, const LtiSystem& plant,
                              double logdet_floor) {
  std::ostringstream out;
  out << "sensor,horizon,estimate,oracle,abs_err,rel_err\r\n";
  const int p = static_cast<int>(plant.p());
  for (std::size_t i = 0; i < result.evaluated.size(); ++i) {
    const int id = result.evaluated[i];
    const auto& est = result.estimates[i];
    const auto emit = [&](const std::string& horizon_tag, double estimate, double truth) {
      const double abs_err = std::abs(estimate - truth);
      const double rel_err = abs_err / std::max(std::abs(truth), 1e-12);
      out << id << "," << horizon_tag << "," << format_double(estimate) << ","
          << format_double(truth) << "," << format_double(abs_err) << ","
          << format_double(rel_err) << "\r\n";
    };
    if (result.metric.horizon.is_infinite()) {
      const double truth =
          oracle::true_cost(plant, SelectionIndex::single(id, p), result.metric);
      emit("inf", metric_value(est.cost_block, result.metric.kind, logdet_floor), truth);
    } else {
      for (int t = 1; t <= result.metric.horizon.steps(); ++t) {
        const Metric step_metric{result.metric.kind, Horizon::finite(t)};
        const double truth =
            oracle::true_cost(plant, SelectionIndex::single(id, p), step_metric);
        emit(std::to_string(t),
             metric_value(est.cost_block_at(t), result.metric.kind, logdet_floor), truth);
      }
    }
  }
  return out.str();
}

int cmd_select(const CommonArgs& args, bool with_oracle) {
  const LoadedScenario loaded = load_common(args);
  LtiSystem plant = resolve_plant(loaded.scenario.plant, loaded.base_dir);
  const std::vector<std::string> labels = plant.sensor_labels;
  const PipelineConfig cfg = pipeline_config(loaded.scenario, std::move(plant));

  const SelectionResult result = run_selection(cfg);

  write_text_file(join_path(loaded.out_dir, "result.json"),
                  selection_result_json_text(result, labels));
  write_text_file(join_path(loaded.out_dir, "scores.csv"), scores_csv_text(result));
  write_text_file(join_path(loaded.out_dir, "timing.json"), timing_json_text(result.timing));
  if (with_oracle)
    write_text_file(join_path(loaded.out_dir, "errors.csv"),
                    oracle_errors_csv(result, cfg.plant, cfg.logdet_floor));

  std::cout << "chosen:";
  for (int id : result.chosen.indices()) std::cout << " " << id;
  std::cout << "\nsubset_metric: " << format_double(result.subset_metric)
            << "\nobservability: " << to_string(result.observability.verdict) << "\n";
  if (result.rank_warning)
    std::cerr << "warning: feature matrix rank " << result.regression_diagnostics.rank
              << " below row count " << result.regression_diagnostics.rows << "\n";
  return kExitOk;
}

int cmd_verify(const CommonArgs& args, const std::vector<int>& sensors) {
  const LoadedScenario loaded = load_common(args);
  LtiSystem plant = resolve_plant(loaded.scenario.plant, loaded.base_dir);
  const PipelineConfig cfg = pipeline_config(loaded.scenario, std::move(plant));
  if (sensors.empty()) throw ConfigError("verify: --sensors must list at least one sensor");

  const SelectionIndex candidate(sensors, static_cast<int>(cfg.plant.p()));
  const MatrixXd u = generate_excitation(cfg.excitation, cfg.plant.m());
  const Trajectory traj = simulate(cfg.plant, u, cfg.seed_sensors, candidate);
  const ObsDataMatrices obs = assemble_obs_matrices(traj, cfg.window);
  const ObservabilityReport report = verify_observability(obs, cfg.verify_threshold);

  const std::string path = join_path(loaded.out_dir, "verdict.json");
  write_text_file(path, observability_json_text(report, cfg.verify_threshold));
  std::cout << to_string(report.verdict) << "\n";
  return kExitOk;
}

int cmd_oracle(const CommonArgs& args) {
  const LoadedScenario loaded = load_common(args);
  LtiSystem plant = resolve_plant(loaded.scenario.plant, loaded.base_dir);
  const PipelineConfig cfg = pipeline_config(loaded.scenario, std::move(plant));
  const int p = static_cast<int>(cfg.plant.p());

  std::ostringstream out;
  out << "{\n  \"schema_version\": 1,\n";
  out << "  \"spectral_radius\": " << format_double(spectral_radius(cfg.plant.A)) << ",\n";
  out << "  \"sensors\": [";
  const SelectionIndex eval_union =
      SelectionIndex(cfg.candidates, p).union_with(cfg.seed_sensors);
  bool first = true;
  for (int id : eval_union.indices()) {
    const double truth = oracle::true_cost(cfg.plant, SelectionIndex::single(id, p), cfg.metric);
    out << (first ? "" : ",") << "\n    {\"sensor\": " << id
        << ", \"true_cost\": " << format_double(truth) << "}";
    first = false;
  }
  out << "\n  ]";

  std::vector<int> eligible;
  for (int id : cfg.candidates)
    if (!cfg.seed_with_known_set || !cfg.seed_sensors.contains(id)) eligible.push_back(id);
  if (static_cast<int>(eligible.size()) <= 20) {
    const auto best = oracle::brute_force_select(
        cfg.plant, cfg.p_prime, cfg.metric, SelectionIndex(eligible, p),
        cfg.seed_with_known_set ? std::optional<SelectionIndex>(cfg.seed_sensors)
                                : std::nullopt);
    const SelectionIndex full =
        cfg.seed_with_known_set ? best.union_with(cfg.seed_sensors) : best;
    out << ",\n  \"brute_force\": {\"picked\": [";
    for (std::size_t i = 0; i < best.indices().size(); ++i)
      out << (i ? ", " : "") << best.indices()[i];
    out << "], \"subset_cost\": " << format_double(oracle::true_cost(cfg.plant, full, cfg.metric))
        << "}";
  }
  out << "\n}\n";

  const std::string path = join_path(loaded.out_dir, "oracle.json");
  write_text_file(path, out.str());
  std::cout << path << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, int t_max, bool with_oracle) {
  const LoadedScenario loaded = load_common(args);
  Scenario scenario = loaded.scenario;
  if (scenario.metric.horizon.is_infinite())
    throw ConfigError("sweep: the scenario metric must use a finite horizon");
  if (t_max < 1) t_max = scenario.metric.horizon.steps();
  scenario.metric.horizon = Horizon::finite(t_max);

  LtiSystem plant = resolve_plant(scenario.plant, loaded.base_dir);
  const PipelineConfig cfg = pipeline_config(scenario, std::move(plant));
  const SelectionResult result = run_selection(cfg);
  const int p = static_cast<int>(cfg.plant.p());

  std::vector<int> eligible;
  for (int id : cfg.candidates)
    if (!cfg.seed_with_known_set || !cfg.seed_sensors.contains(id)) eligible.push_back(id);
  const std::optional<SelectionIndex> keep_seed =
      cfg.seed_with_known_set ? std::optional<SelectionIndex>(cfg.seed_sensors) : std::nullopt;

  std::ostringstream csv;
  csv << "sensor,T,score" << (with_oracle ? ",oracle,abs_err,rel_err" : "") << "\r\n";
  std::ostringstream chosen_json;
  chosen_json << "{\n  \"schema_version\": 1,\n  \"chosen_per_horizon\": {";

  for (int t = 1; t <= t_max; ++t) {
    VectorXd scores(static_cast<Index>(result.evaluated.size()));
    std::vector<SymMatrix> blocks;
    blocks.reserve(result.evaluated.size());
    for (std::size_t i = 0; i < result.evaluated.size(); ++i) {
      blocks.push_back(result.estimates[i].cost_block_at(t));
      scores[static_cast<Index>(i)] =
          metric_value(blocks.back(), cfg.metric.kind, cfg.logdet_floor);
    }
    for (std::size_t i = 0; i < result.evaluated.size(); ++i) {
      csv << result.evaluated[i] << "," << t << ","
          << format_double(scores[static_cast<Index>(i)]);
      if (with_oracle) {
        const Metric step_metric{cfg.metric.kind, Horizon::finite(t)};
        const double truth = oracle::true_cost(
            cfg.plant, SelectionIndex::single(result.evaluated[i], p), step_metric);
        const double abs_err = std::abs(scores[static_cast<Index>(i)] - truth);
        csv << "," << format_double(truth) << "," << format_double(abs_err) << ","
            << format_double(abs_err / std::max(std::abs(truth), 1e-12));
      }
      csv << "\r\n";
    }

    const Metric step_metric{cfg.metric.kind, Horizon::finite(t)};
    const SelectionIndex chosen_t =
        choose_subset(step_metric, result.evaluated, scores, blocks, eligible, cfg.p_prime,
                      keep_seed, p, cfg.logdet_floor);
    chosen_json << (t == 1 ? "" : ",") << "\n    \"" << t << "\": [";
    for (std::size_t i = 0; i < chosen_t.indices().size(); ++i)
      chosen_json << (i ? ", " : "") << chosen_t.indices()[i];
    chosen_json << "]";
  }
  chosen_json << "\n  }\n}\n";

  write_text_file(join_path(loaded.out_dir, "sweep.csv"), csv.str());
  write_text_file(join_path(loaded.out_dir, "sweep_selection.json"), chosen_json.str());
  write_text_file(join_path(loaded.out_dir, "timing.json"), timing_json_text(result.timing));
  std::cout << join_path(loaded.out_dir, "sweep.csv") << "\n";
  return kExitOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Input-output data-driven sensor selection"};
  app.require_subcommand(1);

  CommonArgs common;
  bool with_oracle = false;
  std::vector<int> sensors;
  int t_max = 0;

  const auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario_path, "Scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--output-dir", common.output_dir,
                    "Output directory (default: scenario, then $SENSORSEL_OUTPUT_DIR, then .)");
    sub->add_option("--threads", common.threads, "Worker thread cap (overrides the scenario)");
  };

  CLI::App* generate = app.add_subcommand("generate", "Write the generated plant to plant.json");
  add_common(generate);
  CLI::App* collect = app.add_subcommand("collect", "Record a trajectory to trajectory.csv");
  add_common(collect);
  CLI::App* select = app.add_subcommand("select", "Run the full selection pipeline");
  add_common(select);
  select->add_flag("--with-oracle", with_oracle,
                   "Also write errors.csv comparing scores against model-based ground truth");
  CLI::App* verify = app.add_subcommand("verify", "Verify observability of a sensor set");
  add_common(verify);
  verify->add_option("--sensors", sensors, "Sensor ids to verify")
      ->required()
      ->delimiter(',');
  CLI::App* orc = app.add_subcommand("oracle", "Write model-based ground truth to oracle.json");
  add_common(orc);
  CLI::App* sweep = app.add_subcommand("sweep", "Score and select across horizons 1..T");
  add_common(sweep);
  sweep->add_option("--t-max", t_max, "Largest horizon (default: the scenario metric's T)");
  sweep->add_flag("--with-oracle", with_oracle, "Add ground-truth columns to sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (generate->parsed()) return cmd_generate(common);
  if (collect->parsed()) return cmd_collect(common);
  if (select->parsed()) return cmd_select(common, with_oracle);
  if (verify->parsed()) return cmd_verify(common, sensors);
  if (orc->parsed()) return cmd_oracle(common);
  if (sweep->parsed()) return cmd_sweep(common, t_max, with_oracle);
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StabilityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
