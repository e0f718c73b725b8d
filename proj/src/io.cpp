#include "sensorsel/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sensorsel {

using json = nlohmann::ordered_json;

namespace {

json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json matrix_to_json(const Eigen::Ref<const MatrixXd>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::Ref<const VectorXd>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ConfigError("expected a nested array for \"" + name + "\"");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.front().size());
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ConfigError("ragged rows in \"" + name + "\"");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) throw ConfigError("non-numeric entry in \"" + name + "\"");
      m(i, c) = cell.get<double>();
    }
  }
  return m;
}

VectorXd vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError("expected an array for \"" + name + "\"");
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    const auto& cell = j[static_cast<std::size_t>(i)];
    if (!cell.is_number()) throw ConfigError("non-numeric entry in \"" + name + "\"");
    v[i] = cell.get<double>();
  }
  return v;
}

std::vector<int> int_list_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError("expected an array for \"" + name + "\"");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& cell : j) {
    if (!cell.is_number_integer()) throw ConfigError("non-integer entry in \"" + name + "\"");
    out.push_back(cell.get<int>());
  }
  return out;
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": JSON parse error: " + e.what());
  }
}

json tolerance_to_json(const RankTolerance& tol) {
  switch (tol.kind) {
    case RankTolerance::Kind::kAbsolute:
      return {{"kind", "absolute"}, {"value", tol.value}};
    case RankTolerance::Kind::kRelativeToMax:
      return {{"kind", "relative"}, {"value", tol.value}};
    default:
      return {{"kind", "standard"}};
  }
}

RankTolerance tolerance_from_json(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("\"" + name + "\" must be an object with a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "standard") return RankTolerance::standard();
  if (!j.contains("value") || !j.at("value").is_number())
    throw ConfigError("\"" + name + "\": " + kind + " tolerance needs a numeric \"value\"");
  const double value = j.at("value").get<double>();
  if (kind == "absolute") return RankTolerance::absolute(value);
  if (kind == "relative") return RankTolerance::relative_to_max(value);
  throw ConfigError("\"" + name + "\": unknown tolerance kind \"" + kind + "\"");
}

json metric_to_json(const Metric& metric) {
  json out;
  out["kind"] = to_string(metric.kind);
  if (metric.horizon.is_infinite()) {
    out["horizon"] = "infinite";
    out["discount"] = metric.horizon.discount();
  } else {
    out["horizon"] = "finite";
    out["steps"] = metric.horizon.steps();
  }
  return out;
}

Metric metric_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("\"metric\" must be an object");
  Metric metric;
  const std::string kind = j.value("kind", "trace");
  if (kind == "trace")
    metric.kind = MetricKind::kTrace;
  else if (kind == "logdet")
    metric.kind = MetricKind::kLogDet;
  else
    throw ConfigError("metric: unknown kind \"" + kind + "\"");

  const std::string horizon = j.value("horizon", "infinite");
  if (horizon == "infinite") {
    if (!j.contains("discount")) throw ConfigError("metric: infinite horizon needs \"discount\"");
    metric.horizon = Horizon::infinite(j.at("discount").get<double>());
  } else if (horizon == "finite") {
    if (!j.contains("steps")) throw ConfigError("metric: finite horizon needs \"steps\"");
    metric.horizon = Horizon::finite(j.at("steps").get<int>());
  } else {
    throw ConfigError("metric: unknown horizon \"" + horizon + "\"");
  }
  return metric;
}

json observability_report_to_json(const ObservabilityReport& report) {
  json out;
  out["verdict"] = to_string(report.verdict);
  out["rank_seed_stacks"] = report.rank_seed;
  out["rank_eval_stacks"] = report.rank_eval;
  out["columns"] = report.columns;
  out["min_retained_singular_value"] = json_number(report.min_retained_sv_eval);
  out["threshold_seed"] = json_number(report.threshold_seed);
  out["threshold_eval"] = json_number(report.threshold_eval);
  if (report.state_dim) out["state_dim"] = *report.state_dim;
  if (report.target_rank) out["target_rank"] = *report.target_rank;
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_text_file(): cannot open \"" + path + "\"");
  out << text;
  if (!out) throw ConfigError("write_text_file(): failed writing \"" + path + "\"");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_text_file(): cannot open \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LtiSystem load_plant(const std::string& path) {
  const json j = parse_text(read_text_file(path), "plant file \"" + path + "\"");
  for (const char* key : {"A", "B", "C", "x0"})
    if (!j.contains(key))
      throw ConfigError("plant file \"" + path + "\": missing \"" + key + "\"");

  LtiSystem sys;
  sys.A = matrix_from_json(j.at("A"), "A");
  sys.B = matrix_from_json(j.at("B"), "B");
  sys.C = matrix_from_json(j.at("C"), "C");
  sys.x0 = vector_from_json(j.at("x0"), "x0");
  if (j.contains("sensor_labels"))
    sys.sensor_labels = j.at("sensor_labels").get<std::vector<std::string>>();
  sys.validate();
  return sys;
}

std::string plant_to_json_text(const LtiSystem& sys) {
  sys.validate();
  json j;
  j["schema_version"] = 1;
  j["n"] = sys.n();
  j["m"] = sys.m();
  j["p"] = sys.p();
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["x0"] = vector_to_json(sys.x0);
  json labels = json::array();
  for (Index i = 0; i < sys.p(); ++i)
    labels.push_back(sys.sensor_labels.empty() ? "sensor_" + std::to_string(i + 1)
                                               : sys.sensor_labels[static_cast<std::size_t>(i)]);
  j["sensor_labels"] = std::move(labels);
  return j.dump(2) + "\n";
}

void save_plant(const std::string& path, const LtiSystem& sys) {
  write_text_file(path, plant_to_json_text(sys));
}

std::string trajectory_to_csv_text(const Trajectory& traj) {
  std::ostringstream out;
  out << "t";
  for (Index i = 1; i <= traj.u.rows(); ++i) out << ",u_" << i;
  for (Index i = 1; i <= traj.y_hat.rows(); ++i) out << ",yhat_" << i;
  for (Index i = 1; i <= traj.y_tilde.rows(); ++i) out << ",ytilde_" << i;
  out << "\r\n";
  for (Index t = 0; t < traj.length(); ++t) {
    out << traj.t0 + t;
    for (Index i = 0; i < traj.u.rows(); ++i) out << "," << format_double(traj.u(i, t));
    for (Index i = 0; i < traj.y_hat.rows(); ++i) out << "," << format_double(traj.y_hat(i, t));
    for (Index i = 0; i < traj.y_tilde.rows(); ++i)
      out << "," << format_double(traj.y_tilde(i, t));
    out << "\r\n";
  }
  return out.str();
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  write_text_file(path, trajectory_to_csv_text(traj));
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

double parse_csv_double(const std::string& cell, const std::string& path) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw ConfigError("trajectory CSV \"" + path + "\": bad number \"" + cell + "\"");
  return v;
}

}  // namespace

Trajectory load_trajectory_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("trajectory CSV \"" + path + "\": empty file");

  const auto header = split_csv_line(line);
  Index m = 0, r = 0, q = 0;
  if (header.empty() || header.front() != "t")
    throw ConfigError("trajectory CSV \"" + path + "\": header must start with t");
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("u_", 0) == 0)
      ++m;
    else if (header[i].rfind("yhat_", 0) == 0)
      ++r;
    else if (header[i].rfind("ytilde_", 0) == 0)
      ++q;
    else
      throw ConfigError("trajectory CSV \"" + path + "\": unknown column \"" + header[i] + "\"");
  }
  if (m < 1 || r < 1 || q < 1)
    throw ConfigError("trajectory CSV \"" + path + "\": need u, yhat and ytilde columns");

  std::vector<std::vector<double>> rows;
  int t0 = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (static_cast<Index>(cells.size()) != 1 + m + r + q)
      throw ConfigError("trajectory CSV \"" + path + "\": wrong cell count in a row");
    if (rows.empty()) t0 = static_cast<int>(parse_csv_double(cells[0], path));
    std::vector<double> vals;
    vals.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i)
      vals.push_back(parse_csv_double(cells[i], path));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ConfigError("trajectory CSV \"" + path + "\": no data rows");

  Trajectory traj;
  const Index L = static_cast<Index>(rows.size());
  traj.u.resize(m, L);
  traj.y_hat.resize(r, L);
  traj.y_tilde.resize(q, L);
  traj.t0 = t0;
  for (Index t = 0; t < L; ++t) {
    const auto& vals = rows[static_cast<std::size_t>(t)];
    for (Index i = 0; i < m; ++i) traj.u(i, t) = vals[static_cast<std::size_t>(i)];
    for (Index i = 0; i < r; ++i) traj.y_hat(i, t) = vals[static_cast<std::size_t>(m + i)];
    for (Index i = 0; i < q; ++i)
      traj.y_tilde(i, t) = vals[static_cast<std::size_t>(m + r + i)];
  }
  return traj;
}

Scenario scenario_from_json_text(const std::string& text) {
  const json j = parse_text(text, "scenario");
  if (!j.is_object()) throw ConfigError("scenario: top level must be an object");

  Scenario s;
  s.schema_version = j.value("schema_version", 1);
  if (s.schema_version != 1)
    throw ConfigError("scenario: unsupported schema_version " +
                      std::to_string(s.schema_version));

  if (!j.contains("plant")) throw ConfigError("scenario: missing \"plant\"");
  const json& plant = j.at("plant");
  if (plant.contains("file")) s.plant.file = plant.at("file").get<std::string>();
  if (plant.contains("random_stable")) {
    const json& g = plant.at("random_stable");
    PlantSource::RandomStable rs;
    rs.n = g.value("n", 0);
    rs.m = g.value("m", 0);
    rs.p = g.value("p", 0);
    rs.seed = g.value("seed", 0);
    s.plant.random_stable = rs;
  }
  if (plant.contains("oscillator_network")) {
    const json& g = plant.at("oscillator_network");
    PlantSource::OscillatorNetwork on;
    on.nodes = g.value("nodes", 0);
    on.seed = g.value("seed", 0);
    s.plant.oscillator_network = on;
  }

  if (!j.contains("seed_sensors")) throw ConfigError("scenario: missing \"seed_sensors\"");
  s.seed_sensors = int_list_from_json(j.at("seed_sensors"), "seed_sensors");
  if (j.contains("candidates")) s.candidates = int_list_from_json(j.at("candidates"), "candidates");

  if (!j.contains("p_prime")) throw ConfigError("scenario: missing \"p_prime\"");
  s.p_prime = j.at("p_prime").get<int>();

  if (!j.contains("metric")) throw ConfigError("scenario: missing \"metric\"");
  s.metric = metric_from_json(j.at("metric"));

  if (!j.contains("window")) throw ConfigError("scenario: missing \"window\"");
  s.window = j.at("window").get<int>();

  if (j.contains("excitation")) {
    const json& e = j.at("excitation");
    s.excitation.seed = e.value("seed", 0);
    s.excitation.horizon = e.value("horizon", 0);
    s.excitation.amplitude = e.value("amplitude", 1.0);
    const std::string kind = e.value("kind", "gaussian-iid");
    if (kind == "gaussian-iid")
      s.excitation.kind = ExcitationConfig::Kind::kGaussianIid;
    else if (kind == "sum-of-sinusoids")
      s.excitation.kind = ExcitationConfig::Kind::kSumOfSinusoids;
    else
      throw ConfigError("scenario: unknown excitation kind \"" + kind + "\"");
  }

  const std::string mode = j.value("data_mode", "concurrent");
  if (mode == "concurrent")
    s.data_mode = PipelineConfig::DataMode::kConcurrent;
  else if (mode == "sequential")
    s.data_mode = PipelineConfig::DataMode::kSequential;
  else
    throw ConfigError("scenario: unknown data_mode \"" + mode + "\"");

  if (j.contains("observability")) {
    const json& o = j.at("observability");
    s.seed_with_known_set = o.value("seed_with_known_set", false);
    s.relax_cardinality = o.value("relax_cardinality", false);
    if (o.contains("threshold"))
      s.verify_threshold = tolerance_from_json(o.at("threshold"), "observability.threshold");
  }

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (t.contains("pinv")) s.pinv_tolerance = tolerance_from_json(t.at("pinv"), "tolerances.pinv");
    s.logdet_floor = t.value("logdet_floor", kLogDetFloor);
  }

  s.output_dir = j.value("output_dir", "");
  s.threads = j.value("threads", 1);
  return s;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_json_text(read_text_file(path));
}

namespace {

json bundle_common_json(int window, Index input_dim, Index seed_dim,
                        const std::vector<int>& timestamps) {
  json j;
  j["schema_version"] = 1;
  j["window"] = window;
  j["input_dim"] = input_dim;
  j["seed_dim"] = seed_dim;
  j["timestamps"] = timestamps;
  return j;
}

}  // namespace

void save_regressor_bundle(const std::string& path, const RegressorBundle& bundle) {
  json j = bundle_common_json(bundle.window(), bundle.input_dim(), bundle.seed_dim(),
                              bundle.timestamps());
  j["type"] = "infinite";
  j["discount"] = bundle.discount();
  j["features"] = matrix_to_json(bundle.features());
  j["targets"] = matrix_to_json(bundle.targets());
  write_text_file(path, j.dump() + "\n");
}

RegressorBundle load_regressor_bundle(const std::string& path, RankTolerance tol) {
  const json j = parse_text(read_text_file(path), "bundle file \"" + path + "\"");
  if (j.value("type", "") != "infinite")
    throw ConfigError("bundle file \"" + path + "\": expected type \"infinite\"");
  return RegressorBundle::from_parts(
      matrix_from_json(j.at("features"), "features"), matrix_from_json(j.at("targets"), "targets"),
      j.at("window").get<int>(), j.at("discount").get<double>(), j.at("input_dim").get<Index>(),
      j.at("seed_dim").get<Index>(), j.at("timestamps").get<std::vector<int>>(), tol);
}

void save_finite_regressor_bundle(const std::string& path, const FiniteRegressorBundle& bundle) {
  json j = bundle_common_json(bundle.window(), bundle.input_dim(), bundle.seed_dim(),
                              bundle.timestamps());
  j["type"] = "finite";
  j["features_current"] = matrix_to_json(bundle.features_current());
  j["features_next"] = matrix_to_json(bundle.features_next());
  j["targets"] = matrix_to_json(bundle.targets());
  write_text_file(path, j.dump() + "\n");
}

FiniteRegressorBundle load_finite_regressor_bundle(const std::string& path, RankTolerance tol) {
  const json j = parse_text(read_text_file(path), "bundle file \"" + path + "\"");
  if (j.value("type", "") != "finite")
    throw ConfigError("bundle file \"" + path + "\": expected type \"finite\"");
  return FiniteRegressorBundle::from_parts(
      matrix_from_json(j.at("features_current"), "features_current"),
      matrix_from_json(j.at("features_next"), "features_next"),
      matrix_from_json(j.at("targets"), "targets"), j.at("window").get<int>(),
      j.at("input_dim").get<Index>(), j.at("seed_dim").get<Index>(),
      j.at("timestamps").get<std::vector<int>>(), tol);
}

namespace {

// Rank of each evaluated sensor under (score desc, id asc) ordering.
std::vector<int> score_ranks(const SelectionResult& result) {
  const int count = static_cast<int>(result.evaluated.size());
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&result](int a, int b) {
    if (result.scores[a] != result.scores[b]) return result.scores[a] > result.scores[b];
    return result.evaluated[static_cast<std::size_t>(a)] <
           result.evaluated[static_cast<std::size_t>(b)];
  });
  std::vector<int> rank(static_cast<std::size_t>(count));
  for (int pos = 0; pos < count; ++pos)
    rank[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos + 1;
  return rank;
}

}  // namespace

std::string selection_result_json_text(const SelectionResult& result,
                                       const std::vector<std::string>& sensor_labels) {
  const auto label_of = [&](int id) -> std::string {
    if (static_cast<std::size_t>(id) <= sensor_labels.size() && id >= 1)
      return sensor_labels[static_cast<std::size_t>(id - 1)];
    return "sensor_" + std::to_string(id);
  };

  json j;
  j["schema_version"] = 1;
  j["metric"] = metric_to_json(result.metric);
  j["chosen"] = result.chosen.indices();
  json chosen_labels = json::array();
  for (int id : result.chosen.indices()) chosen_labels.push_back(label_of(id));
  j["chosen_labels"] = std::move(chosen_labels);
  j["subset_metric"] = json_number(result.subset_metric);

  const auto ranks = score_ranks(result);
  json sensors = json::array();
  for (std::size_t i = 0; i < result.evaluated.size(); ++i) {
    const int id = result.evaluated[i];
    json entry;
    entry["sensor"] = id;
    entry["label"] = label_of(id);
    entry["score"] = json_number(result.scores[static_cast<Index>(i)]);
    entry["rank"] = ranks[i];
    entry["chosen"] = result.chosen.contains(id);
    sensors.push_back(std::move(entry));
  }
  j["sensors"] = std::move(sensors);

  j["observability"] = observability_report_to_json(result.observability);

  json diag;
  diag["feature_rank"] = result.regression_diagnostics.rank;
  diag["feature_rows"] = result.regression_diagnostics.rows;
  diag["feature_columns"] = result.regression_diagnostics.columns;
  diag["smallest_retained_singular_value"] =
      json_number(result.regression_diagnostics.smallest_retained_sv);
  diag["tolerance_used"] = json_number(result.regression_diagnostics.tolerance_used);
  diag["full_row_rank"] = result.regression_diagnostics.full_row_rank;
  j["diagnostics"] = std::move(diag);

  json warnings = json::array();
  if (result.rank_warning) {
    std::ostringstream w;
    w << "feature matrix rank " << result.regression_diagnostics.rank << " below row count "
      << result.regression_diagnostics.rows
      << "; scores follow the attainable-rank least-squares solution";
    warnings.push_back(w.str());
  }
  if (result.tie_fallback_used)
    warnings.push_back(
        "a greedy step saw only -inf log-det marginals and fell back to the trace key");
  j["warnings"] = std::move(warnings);
  return j.dump(2) + "\n";
}

std::string timing_json_text(const SelectionTiming& timing) {
  json j;
  j["collect_seconds"] = timing.collect_seconds;
  j["assemble_seconds"] = timing.assemble_seconds;
  j["pinv_seconds"] = timing.pinv_seconds;
  j["scoring_seconds"] = timing.scoring_seconds;
  j["verify_seconds"] = timing.verify_seconds;
  j["total_seconds"] = timing.total_seconds;
  return j.dump(2) + "\n";
}

std::string observability_json_text(const ObservabilityReport& report,
                                    const RankTolerance& threshold) {
  json j;
  j["schema_version"] = 1;
  j["report"] = observability_report_to_json(report);
  j["threshold_policy"] = tolerance_to_json(threshold);
  return j.dump(2) + "\n";
}

std::string scores_csv_text(const SelectionResult& result) {
  const auto ranks = score_ranks(result);
  std::ostringstream out;
  out << "sensor,score,rank,chosen\r\n";
  for (std::size_t i = 0; i < result.evaluated.size(); ++i) {
    const int id = result.evaluated[i];
    out << id << "," << format_double(result.scores[static_cast<Index>(i)]) << "," << ranks[i]
        << "," << (result.chosen.contains(id) ? 1 : 0) << "\r\n";
  }
  return out.str();
}

}  // namespace sensorsel
