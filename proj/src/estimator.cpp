#include "sensorsel/estimator.hpp"

#include <algorithm>

namespace sensorsel {

namespace {

EstimateDiagnostics diagnostics_from(const PinvResult& pinv, Index rows, Index columns) {
  EstimateDiagnostics d;
  d.rank = pinv.numerical_rank;
  d.rows = rows;
  d.columns = columns;
  d.smallest_retained_sv =
      pinv.numerical_rank > 0 ? pinv.singular_values[pinv.numerical_rank - 1] : 0.0;
  d.tolerance_used = pinv.tolerance_used;
  d.full_row_rank = pinv.numerical_rank == rows;
  return d;
}

}  // namespace

SymMatrix GramianEstimate::gramian_at(int t) const {
  if (sequence.size() == 0)
    throw DimensionError("GramianEstimate::gramian_at(): no retained sequence");
  if (t < 0 || t >= sequence.cols())
    throw DimensionError("GramianEstimate::gramian_at(): step out of range");
  return unvech(sequence.col(t));
}

SymMatrix GramianEstimate::cost_block_at(int t) const {
  return gramian_at(t).top_left(input_dim);
}

GramianEstimate estimate_inf(const RegressorBundle& bundle, int sensor_column) {
  if (sensor_column < 0 || sensor_column >= bundle.eval_dim())
    throw DimensionError("estimate_inf(): sensor column out of range");

  const VectorXd packed =
      -(bundle.features_t_pinv().pseudoinverse * bundle.targets().col(sensor_column));

  GramianEstimate est;
  est.gramian = unvech(packed);
  est.cost_block = est.gramian.top_left(bundle.input_dim());
  est.horizon = Horizon::infinite(bundle.discount());
  est.sensor_column = sensor_column;
  est.input_dim = bundle.input_dim();
  est.diagnostics =
      diagnostics_from(bundle.features_t_pinv(), bundle.row_count(), bundle.column_count());
  return est;
}

GramianEstimate estimate_fin(const FiniteRegressorBundle& bundle, int sensor_column, int T) {
  if (sensor_column < 0 || sensor_column >= bundle.eval_dim())
    throw DimensionError("estimate_fin(): sensor column out of range");
  if (T < 0) throw DimensionError("estimate_fin(): T must be >= 0");

  const MatrixXd& pinv = bundle.features_current_t_pinv().pseudoinverse;
  const VectorXd y = bundle.targets().col(sensor_column);

  GramianEstimate est;
  est.sequence.resize(bundle.row_count(), T + 1);
  est.sequence.col(0).setZero();
  for (int t = 0; t < T; ++t)
    est.sequence.col(t + 1) =
        pinv * (bundle.features_next().transpose() * est.sequence.col(t) + y);

  est.gramian = unvech(est.sequence.col(T));
  est.cost_block = est.gramian.top_left(bundle.input_dim());
  est.horizon = Horizon::finite(T);
  est.sensor_column = sensor_column;
  est.input_dim = bundle.input_dim();
  est.diagnostics = diagnostics_from(bundle.features_current_t_pinv(), bundle.row_count(),
                                     bundle.column_count());
  return est;
}

SymMatrix cost_block_sum(const std::vector<GramianEstimate>& estimates) {
  if (estimates.empty()) throw DimensionError("cost_block_sum(): no estimates given");

  std::vector<const GramianEstimate*> ordered;
  ordered.reserve(estimates.size());
  for (const auto& e : estimates) ordered.push_back(&e);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->sensor_column < b->sensor_column;
  });

  SymMatrix sum(ordered.front()->cost_block.dim());
  for (const auto* e : ordered) {
    if (e->horizon != ordered.front()->horizon)
      throw std::invalid_argument("cost_block_sum(): mixed horizons");
    if (e->cost_block.dim() != sum.dim())
      throw DimensionError("cost_block_sum(): mixed block sizes");
    sum += e->cost_block;
  }
  return sum;
}

}  // namespace sensorsel
