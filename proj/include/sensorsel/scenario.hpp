#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sensorsel/selector.hpp"

namespace sensorsel {

/// Dense random plant with the spectrum rescaled to the target radius.
/// Deterministic for a given seed.  x0 is zero.
LtiSystem make_random_stable(Index n, Index m, Index p, std::uint64_t seed,
                             double target_radius = 0.95);

/// Network of damped second-order oscillators on a random connected graph,
/// discretized semi-implicitly with the given timestep.  States are all
/// node angles followed by all node rates; every state has its own sensor
/// (p = 2*nodes) and every node its own actuator (m = nodes).
LtiSystem make_oscillator_network(int nodes, std::uint64_t seed, double dt = 0.2);

/// Where the plant comes from: a file on disk or a named generator.
struct PlantSource {
  struct RandomStable {
    Index n = 0, m = 0, p = 0;
    std::uint64_t seed = 0;
  };
  struct OscillatorNetwork {
    int nodes = 0;
    std::uint64_t seed = 0;
  };

  std::string file;  // empty when a generator is used
  std::optional<RandomStable> random_stable;
  std::optional<OscillatorNetwork> oscillator_network;
};

/// One experiment description, as read from a scenario file.
struct Scenario {
  int schema_version = 1;
  PlantSource plant;
  std::vector<int> seed_sensors;
  std::vector<int> candidates;  // empty: every sensor outside the seed set
  int p_prime = 1;
  Metric metric;
  int window = 1;  // history length N
  ExcitationConfig excitation;  // horizon 0: pick the default sample budget
  PipelineConfig::DataMode data_mode = PipelineConfig::DataMode::kConcurrent;
  bool seed_with_known_set = false;
  bool relax_cardinality = false;
  RankTolerance pinv_tolerance = RankTolerance::standard();
  RankTolerance verify_threshold = RankTolerance::standard();
  double logdet_floor = kLogDetFloor;
  std::string output_dir;  // empty: environment default, then "."
  int threads = 1;
};

/// Materializes the plant: generates it or loads the referenced file
/// (relative paths resolve against base_dir).
LtiSystem resolve_plant(const PlantSource& source, const std::string& base_dir);

/// Default excitation length when a scenario leaves horizon unset:
/// N + 2x the packed coordinate count, oversampling the regressor rows.
int default_excitation_horizon(int window, Index m, Index r);

/// Validates the scenario against the plant and assembles the pipeline
/// configuration.  Enforces the config-level contracts: discount in (0,1)
/// with a*rho(A) < 1 for infinite metrics, T >= 1 for finite ones, and a
/// nonempty seed set.
PipelineConfig pipeline_config(const Scenario& scenario, LtiSystem plant);

}  // namespace sensorsel
