#include "sensorsel/scenario.hpp"

#include <random>
#include <sstream>

#include "sensorsel/io.hpp"

namespace sensorsel {

LtiSystem make_random_stable(Index n, Index m, Index p, std::uint64_t seed,
                             double target_radius) {
  if (n < 1 || m < 1 || p < 1)
    throw ConfigError("make_random_stable(): n, m, p must all be >= 1");
  if (target_radius <= 0.0 || target_radius >= 1.0)
    throw ConfigError("make_random_stable(): target radius must be in (0, 1)");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto fill = [&](MatrixXd& mat, Index rows, Index cols) {
    mat.resize(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) mat(i, j) = gauss(rng);
  };

  LtiSystem sys;
  fill(sys.A, n, n);
  const double rho = spectral_radius(sys.A);
  if (rho > 1e-12) sys.A *= target_radius / rho;
  fill(sys.B, n, m);
  fill(sys.C, p, n);
  sys.x0 = VectorXd::Zero(n);
  sys.validate();
  return sys;
}

LtiSystem make_oscillator_network(int nodes, std::uint64_t seed, double dt) {
  if (nodes < 2) throw ConfigError("make_oscillator_network(): need at least 2 nodes");
  if (dt <= 0.0) throw ConfigError("make_oscillator_network(): dt must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coupling(0.5, 2.0);
  std::uniform_real_distribution<double> inertia(0.5, 2.0);
  std::uniform_real_distribution<double> damping(0.1, 0.5);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  // Ring for connectivity plus random chords.
  MatrixXd weights = MatrixXd::Zero(nodes, nodes);
  const auto connect = [&](int i, int j) {
    const double k = coupling(rng);
    weights(i, j) = weights(j, i) = k;
  };
  for (int i = 0; i < nodes; ++i) connect(i, (i + 1) % nodes);
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 2; j < nodes; ++j)
      if (!(i == 0 && j == nodes - 1) && coin(rng) < 0.25) connect(i, j);

  MatrixXd laplacian = MatrixXd::Zero(nodes, nodes);
  for (int i = 0; i < nodes; ++i) {
    laplacian(i, i) = weights.row(i).sum();
    for (int j = 0; j < nodes; ++j)
      if (j != i) laplacian(i, j) = -weights(i, j);
  }

  VectorXd minv(nodes), damp(nodes);
  for (int i = 0; i < nodes; ++i) minv[i] = 1.0 / inertia(rng);
  for (int i = 0; i < nodes; ++i) damp[i] = damping(rng);

  const MatrixXd ml = minv.asDiagonal() * laplacian;         // M^-1 L
  const MatrixXd md = (minv.array() * damp.array()).matrix().asDiagonal();  // M^-1 D
  const Index n = 2 * nodes;
  const MatrixXd eye = MatrixXd::Identity(nodes, nodes);

  // Semi-implicit step: rates update first, angles follow the new rates.
  LtiSystem sys;
  sys.A.resize(n, n);
  sys.A.topLeftCorner(nodes, nodes) = eye - dt * dt * ml;
  sys.A.topRightCorner(nodes, nodes) = dt * (eye - dt * md);
  sys.A.bottomLeftCorner(nodes, nodes) = -dt * ml;
  sys.A.bottomRightCorner(nodes, nodes) = eye - dt * md;

  sys.B.resize(n, nodes);
  sys.B.topRows(nodes) = dt * dt * minv.asDiagonal();
  sys.B.bottomRows(nodes) = dt * MatrixXd(minv.asDiagonal());

  sys.C = MatrixXd::Identity(n, n);
  sys.x0 = VectorXd::Zero(n);

  const double rho = spectral_radius(sys.A);
  if (rho >= 0.9995) sys.A *= 0.995 / rho;

  sys.sensor_labels.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= nodes; ++i) sys.sensor_labels.push_back("angle_" + std::to_string(i));
  for (int i = 1; i <= nodes; ++i) sys.sensor_labels.push_back("rate_" + std::to_string(i));
  sys.validate();
  return sys;
}

LtiSystem resolve_plant(const PlantSource& source, const std::string& base_dir) {
  const int sources = (source.file.empty() ? 0 : 1) + (source.random_stable ? 1 : 0) +
                      (source.oscillator_network ? 1 : 0);
  if (sources != 1)
    throw ConfigError("resolve_plant(): exactly one plant source must be given");

  if (source.random_stable) {
    const auto& g = *source.random_stable;
    return make_random_stable(g.n, g.m, g.p, g.seed);
  }
  if (source.oscillator_network) {
    const auto& g = *source.oscillator_network;
    return make_oscillator_network(g.nodes, g.seed);
  }

  std::string path = source.file;
  if (!path.empty() && path.front() != '/' && !base_dir.empty())
    path = base_dir + "/" + path;
  return load_plant(path);
}

int default_excitation_horizon(int window, Index m, Index r) {
  return window + 2 * static_cast<int>(regressor_row_count(window, m, r));
}

PipelineConfig pipeline_config(const Scenario& scenario, LtiSystem plant) {
  plant.validate();
  const int p = static_cast<int>(plant.p());

  if (scenario.window < 1) throw ConfigError("scenario: window must be >= 1");
  if (scenario.seed_sensors.empty()) throw ConfigError("scenario: seed_sensors is empty");

  SelectionIndex seed = [&] {
    try {
      return SelectionIndex(scenario.seed_sensors, p);
    } catch (const DimensionError& e) {
      throw ConfigError(std::string("scenario: bad seed_sensors: ") + e.what());
    }
  }();

  std::vector<int> candidates = scenario.candidates;
  if (candidates.empty()) {
    for (int i = 1; i <= p; ++i)
      if (!seed.contains(i)) candidates.push_back(i);
    if (candidates.empty())
      throw ConfigError("scenario: seed set covers every sensor; give candidates explicitly");
  }

  const Horizon& h = scenario.metric.horizon;
  if (h.is_infinite()) {
    if (h.discount() <= 0.0 || h.discount() >= 1.0)
      throw ConfigError("scenario: infinite-horizon metrics need discount in (0, 1)");
    const double rho = spectral_radius(plant.A);
    if (h.discount() * rho >= 1.0) {
      std::ostringstream msg;
      msg << "scenario: discount * spectral radius = " << h.discount() * rho
          << " >= 1; the discounted energy diverges";
      throw ConfigError(msg.str());
    }
  } else if (h.steps() < 1) {
    throw ConfigError("scenario: finite-horizon metrics need T >= 1");
  }

  ExcitationConfig excitation = scenario.excitation;
  if (excitation.horizon == 0)
    excitation.horizon = default_excitation_horizon(
        scenario.window, plant.m(), static_cast<Index>(seed.size()));
  if (excitation.horizon < scenario.window + 2)
    throw ConfigError("scenario: excitation horizon shorter than the history window");
  if (excitation.amplitude < 0.0)
    throw ConfigError("scenario: excitation amplitude must be >= 0");

  return PipelineConfig{.plant = std::move(plant),
                        .seed_sensors = std::move(seed),
                        .candidates = std::move(candidates),
                        .p_prime = scenario.p_prime,
                        .metric = scenario.metric,
                        .window = scenario.window,
                        .excitation = excitation,
                        .data_mode = scenario.data_mode,
                        .seed_with_known_set = scenario.seed_with_known_set,
                        .relax_cardinality = scenario.relax_cardinality,
                        .pinv_tolerance = scenario.pinv_tolerance,
                        .verify_threshold = scenario.verify_threshold,
                        .logdet_floor = scenario.logdet_floor,
                        .threads = scenario.threads};
}

}  // namespace sensorsel
