#pragma once

#include <string>
#include <vector>

#include "sensorsel/scenario.hpp"

namespace sensorsel {

/// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// --- plant files (JSON: A, B, C, x0 as nested arrays, sensor labels) ---
LtiSystem load_plant(const std::string& path);
std::string plant_to_json_text(const LtiSystem& sys);
void save_plant(const std::string& path, const LtiSystem& sys);

// --- trajectory CSV: t, u_1.., yhat_1.., ytilde_1.. ---
std::string trajectory_to_csv_text(const Trajectory& traj);
void save_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory_csv(const std::string& path);

// --- scenario files ---
Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::string& path);

// --- regressor-bundle fixtures (JSON arrays) ---
void save_regressor_bundle(const std::string& path, const RegressorBundle& bundle);
RegressorBundle load_regressor_bundle(const std::string& path,
                                      RankTolerance tol = RankTolerance::standard());
void save_finite_regressor_bundle(const std::string& path, const FiniteRegressorBundle& bundle);
FiniteRegressorBundle load_finite_regressor_bundle(
    const std::string& path, RankTolerance tol = RankTolerance::standard());

// --- run outputs ---
/// result.json body: deterministic given (scenario, seed); wall-clock data
/// deliberately lives in the separate timing file.
std::string selection_result_json_text(const SelectionResult& result,
                                       const std::vector<std::string>& sensor_labels);
std::string timing_json_text(const SelectionTiming& timing);
std::string observability_json_text(const ObservabilityReport& report,
                                    const RankTolerance& threshold);
/// scores.csv body: sensor, score, rank, chosen.
std::string scores_csv_text(const SelectionResult& result);

}  // namespace sensorsel
