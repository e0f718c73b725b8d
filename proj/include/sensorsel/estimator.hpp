#pragma once

#include <vector>

#include "sensorsel/metrics.hpp"
#include "sensorsel/regressors.hpp"

namespace sensorsel {

/// Conditioning report attached to every estimate.
struct EstimateDiagnostics {
  Index rank = 0;                    // numerical rank of the feature matrix
  Index rows = 0;                    // packed coordinate count D
  Index columns = 0;                 // sample count k
  double smallest_retained_sv = 0.0; // last singular value above tolerance
  double tolerance_used = 0.0;
  bool full_row_rank = false;
};

/// Least-squares Gramian estimate in lifted history-stack coordinates, with
/// the m x m leading block that carries the energy score.
struct GramianEstimate {
  SymMatrix gramian;     // dim Nm+Nr; for finite horizons, the step-T value
  SymMatrix cost_block;  // m x m leading block of gramian
  Horizon horizon = Horizon::infinite(0.99);
  int sensor_column = 0;  // which targets column produced this estimate
  Index input_dim = 0;    // m
  EstimateDiagnostics diagnostics;

  /// Finite horizons only: packed gramian per step, column t = vech at
  /// step t, t = 0..T.  Empty for infinite-horizon estimates.
  MatrixXd sequence;

  double trace_cost() const { return cost_block.trace(); }

  /// Step-t views into the retained finite-horizon sequence.
  SymMatrix gramian_at(int t) const;
  SymMatrix cost_block_at(int t) const;
  double trace_cost_at(int t) const { return cost_block_at(t).trace(); }
};

/// Discounted-infinite-horizon estimate for one target column: the packed
/// gramian solves the stacked one-step identities in the least-squares
/// minimum-norm sense through the bundle's cached pseudoinverse.
GramianEstimate estimate_inf(const RegressorBundle& bundle, int sensor_column);

/// Finite-horizon estimate: T propagation steps from zero through the
/// cached pseudoinverse; the whole step sequence is retained.
GramianEstimate estimate_fin(const FiniteRegressorBundle& bundle, int sensor_column, int T);

/// Entrywise sum of cost blocks over a sensor subset, valid because the
/// estimates are linear in the target column.  Summation runs in ascending
/// sensor_column order regardless of input order, so results are
/// reproducible.  Throws on mixed horizons or block sizes.
SymMatrix cost_block_sum(const std::vector<GramianEstimate>& estimates);

}  // namespace sensorsel
