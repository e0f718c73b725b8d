#include "sensorsel/regressors.hpp"

#include <chrono>
#include <sstream>

namespace sensorsel {

namespace {

using clock_type = std::chrono::steady_clock;

const MatrixXd& channel_of(const Trajectory& traj, OutputChannel channel) {
  return channel == OutputChannel::kSeed ? traj.y_hat : traj.y_tilde;
}

// Timestamps t with both z(t) and z(t+1) available: N <= t <= L-1.
std::vector<int> feature_timestamps(Index length, int N, int stride,
                                    std::optional<Index> max_columns) {
  if (stride < 1) throw DimensionError("AssemblyOptions: stride must be >= 1");
  std::vector<int> ts;
  for (int t = N; t + 1 <= static_cast<int>(length); t += stride) {
    ts.push_back(t);
    if (max_columns && static_cast<Index>(ts.size()) >= *max_columns) break;
  }
  return ts;
}

}  // namespace

HistoryStack build_history(const Trajectory& traj, int N, int t, OutputChannel channel) {
  if (N < 1) throw DimensionError("build_history(): N must be >= 1");
  if (t < N) throw DimensionError("build_history(): t must be >= N");
  if (t - 1 >= traj.length())
    throw DimensionError("build_history(): trajectory too short for requested t");

  const MatrixXd& y = channel_of(traj, channel);
  const Index m = traj.u.rows();
  const Index r = y.rows();

  HistoryStack stack;
  stack.window = N;
  stack.time = t;
  stack.values.resize(static_cast<Index>(N) * (m + r));
  for (int lag = 1; lag <= N; ++lag) {
    stack.values.segment(static_cast<Index>(lag - 1) * m, m) = traj.u.col(t - lag);
    stack.values.segment(static_cast<Index>(N) * m + static_cast<Index>(lag - 1) * r, r) =
        y.col(t - lag);
  }
  return stack;
}

MatrixXd input_selector(Index z_dim, Index m) {
  if (m < 1 || z_dim < m) throw DimensionError("input_selector(): need z_dim >= m >= 1");
  MatrixXd e1 = MatrixXd::Zero(z_dim, m);
  e1.topRows(m).setIdentity();
  return e1;
}

VectorXd build_regressor_inf(const HistoryStack& now, const HistoryStack& next,
                             const Eigen::Ref<const VectorXd>& u_t, double discount) {
  if (next.time != now.time + 1)
    throw DimensionError("build_regressor_inf(): stacks must be one step apart");
  if (next.values.size() != now.values.size() || next.window != now.window)
    throw DimensionError("build_regressor_inf(): stack shapes differ");
  if (u_t.size() > now.values.size())
    throw DimensionError("build_regressor_inf(): input longer than the stack");

  VectorXd w = next.values;
  w.head(u_t.size()) -= u_t;
  const VectorXd raw =
      discount * discount * kron(w, w) - kron(now.values, now.values);
  return vecs_from_vec(raw);
}

std::pair<VectorXd, VectorXd> build_regressor_fin(const HistoryStack& now,
                                                  const HistoryStack& next,
                                                  const Eigen::Ref<const VectorXd>& u_tau) {
  if (next.time != now.time + 1)
    throw DimensionError("build_regressor_fin(): stacks must be one step apart");
  if (next.values.size() != now.values.size() || next.window != now.window)
    throw DimensionError("build_regressor_fin(): stack shapes differ");
  if (u_tau.size() > now.values.size())
    throw DimensionError("build_regressor_fin(): input longer than the stack");

  VectorXd w = next.values;
  w.head(u_tau.size()) -= u_tau;
  return {vecs_from_vec(kron(now.values, now.values)), vecs_from_vec(kron(w, w))};
}

RegressorBundle RegressorBundle::assemble(const Trajectory& traj, int N, double discount,
                                          const AssemblyOptions& opts) {
  if (discount <= 0.0)
    throw std::invalid_argument("RegressorBundle::assemble(): discount must be positive");
  const auto ts = feature_timestamps(traj.length(), N, opts.stride, opts.max_columns);
  if (ts.empty())
    throw DataError("RegressorBundle::assemble(): trajectory too short for any sample");

  RegressorBundle b;
  b.window_ = N;
  b.discount_ = discount;
  b.input_dim_ = traj.u.rows();
  b.seed_dim_ = traj.y_hat.rows();
  b.timestamps_ = ts;

  const Index k = static_cast<Index>(ts.size());
  b.features_.resize(regressor_row_count(N, b.input_dim_, b.seed_dim_), k);
  b.targets_.resize(k, traj.y_tilde.rows());
  for (Index i = 0; i < k; ++i) {
    const int t = ts[static_cast<std::size_t>(i)];
    const HistoryStack now = build_history(traj, N, t);
    const HistoryStack next = build_history(traj, N, t + 1);
    b.features_.col(i) = build_regressor_inf(now, next, traj.u.col(t), discount);
    b.targets_.row(i) = traj.y_tilde.col(t).array().square().transpose();
  }

  const auto t0 = clock_type::now();
  b.pinv_ = pinv_tol(b.features_.transpose(), opts.pinv_tolerance);
  b.pinv_seconds_ = std::chrono::duration<double>(clock_type::now() - t0).count();
  return b;
}

RegressorBundle RegressorBundle::from_parts(MatrixXd features, MatrixXd targets, int window,
                                            double discount, Index input_dim, Index seed_dim,
                                            std::vector<int> timestamps, RankTolerance tol) {
  if (window < 1 || input_dim < 1 || seed_dim < 1)
    throw DimensionError("RegressorBundle::from_parts(): bad window or channel dims");
  if (features.rows() != regressor_row_count(window, input_dim, seed_dim) ||
      features.cols() != targets.rows() ||
      static_cast<Index>(timestamps.size()) != features.cols())
    throw DimensionError("RegressorBundle::from_parts(): inconsistent shapes");
  if (discount <= 0.0)
    throw std::invalid_argument("RegressorBundle::from_parts(): discount must be positive");

  RegressorBundle b;
  b.features_ = std::move(features);
  b.targets_ = std::move(targets);
  b.window_ = window;
  b.discount_ = discount;
  b.input_dim_ = input_dim;
  b.seed_dim_ = seed_dim;
  b.timestamps_ = std::move(timestamps);
  const auto t0 = clock_type::now();
  b.pinv_ = pinv_tol(b.features_.transpose(), tol);
  b.pinv_seconds_ = std::chrono::duration<double>(clock_type::now() - t0).count();
  return b;
}

FiniteRegressorBundle FiniteRegressorBundle::assemble(const Trajectory& traj, int N,
                                                      const AssemblyOptions& opts) {
  const auto ts = feature_timestamps(traj.length(), N, opts.stride, opts.max_columns);
  if (ts.empty())
    throw DataError("FiniteRegressorBundle::assemble(): trajectory too short for any sample");

  FiniteRegressorBundle b;
  b.window_ = N;
  b.input_dim_ = traj.u.rows();
  b.seed_dim_ = traj.y_hat.rows();
  b.timestamps_ = ts;

  const Index k = static_cast<Index>(ts.size());
  const Index rows = regressor_row_count(N, b.input_dim_, b.seed_dim_);

  // The current-step features and the pseudoinverse are built before the
  // next-step features: the SVD workspace is the peak allocation, and this
  // order keeps one of the two big matrices out of that peak.
  b.current_.resize(rows, k);
  b.targets_.resize(k, traj.y_tilde.rows());
  for (Index i = 0; i < k; ++i) {
    const int t = ts[static_cast<std::size_t>(i)];
    const HistoryStack now = build_history(traj, N, t);
    b.current_.col(i) = vecs_from_vec(kron(now.values, now.values));
    b.targets_.row(i) = traj.y_tilde.col(t).array().square().transpose();
  }

  const auto t0 = clock_type::now();
  b.pinv_ = pinv_tol(b.current_.transpose(), opts.pinv_tolerance);
  b.pinv_seconds_ = std::chrono::duration<double>(clock_type::now() - t0).count();

  b.next_.resize(rows, k);
  for (Index i = 0; i < k; ++i) {
    const int t = ts[static_cast<std::size_t>(i)];
    const HistoryStack next = build_history(traj, N, t + 1);
    VectorXd w = next.values;
    w.head(b.input_dim_) -= traj.u.col(t);
    b.next_.col(i) = vecs_from_vec(kron(w, w));
  }
  return b;
}

FiniteRegressorBundle FiniteRegressorBundle::from_parts(MatrixXd features_current,
                                                        MatrixXd features_next, MatrixXd targets,
                                                        int window, Index input_dim,
                                                        Index seed_dim,
                                                        std::vector<int> timestamps,
                                                        RankTolerance tol) {
  if (window < 1 || input_dim < 1 || seed_dim < 1)
    throw DimensionError("FiniteRegressorBundle::from_parts(): bad window or channel dims");
  const Index rows = regressor_row_count(window, input_dim, seed_dim);
  if (features_current.rows() != rows || features_next.rows() != rows ||
      features_current.cols() != features_next.cols() ||
      features_current.cols() != targets.rows() ||
      static_cast<Index>(timestamps.size()) != features_current.cols())
    throw DimensionError("FiniteRegressorBundle::from_parts(): inconsistent shapes");

  FiniteRegressorBundle b;
  b.current_ = std::move(features_current);
  b.next_ = std::move(features_next);
  b.targets_ = std::move(targets);
  b.window_ = window;
  b.input_dim_ = input_dim;
  b.seed_dim_ = seed_dim;
  b.timestamps_ = std::move(timestamps);
  const auto t0 = clock_type::now();
  b.pinv_ = pinv_tol(b.current_.transpose(), tol);
  b.pinv_seconds_ = std::chrono::duration<double>(clock_type::now() - t0).count();
  return b;
}

ObsDataMatrices assemble_obs_matrices(const Trajectory& traj, int N, int stride) {
  if (stride < 1) throw DimensionError("assemble_obs_matrices(): stride must be >= 1");
  if (N < 1) throw DimensionError("assemble_obs_matrices(): N must be >= 1");

  // z(t) alone only needs data up to t-1, so t may reach the trajectory end.
  std::vector<int> ts;
  for (int t = N; t <= static_cast<int>(traj.length()); t += stride) ts.push_back(t);
  if (ts.empty())
    throw DataError("assemble_obs_matrices(): trajectory too short for any stack");

  ObsDataMatrices out;
  out.window = N;
  out.input_dim = traj.u.rows();
  out.seed_dim = traj.y_hat.rows();
  out.eval_dim = traj.y_tilde.rows();
  out.timestamps = ts;

  const Index k = static_cast<Index>(ts.size());
  out.seed_stacks.resize(static_cast<Index>(N) * (out.input_dim + out.seed_dim), k);
  out.eval_stacks.resize(static_cast<Index>(N) * (out.input_dim + out.eval_dim), k);
  for (Index i = 0; i < k; ++i) {
    const int t = ts[static_cast<std::size_t>(i)];
    out.seed_stacks.col(i) = build_history(traj, N, t, OutputChannel::kSeed).values;
    out.eval_stacks.col(i) = build_history(traj, N, t, OutputChannel::kEval).values;
  }
  return out;
}

}  // namespace sensorsel
