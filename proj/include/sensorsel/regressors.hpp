#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sensorsel/lti.hpp"
#include "sensorsel/tensor_ops.hpp"

namespace sensorsel {

/// Which recorded output channel a history stack reads.
enum class OutputChannel { kSeed, kEval };

/// Stacked window of the N most recent inputs and outputs before time t,
/// newest first: [u(t-1); ...; u(t-N); y(t-1); ...; y(t-N)].
struct HistoryStack {
  int window = 0;  // N
  int time = 0;    // t, with t >= N
  VectorXd values;
};

/// Throws DimensionError when t < N or the trajectory is too short.
HistoryStack build_history(const Trajectory& traj, int N, int t,
                           OutputChannel channel = OutputChannel::kSeed);

/// Number of packed symmetric coordinates for a window of length N over an
/// m-input, r-output channel: the row count of the feature matrices.
inline Index regressor_row_count(int N, Index m, Index r) {
  return half_vec_size(static_cast<Index>(N) * (m + r));
}

/// Largest rank the feature matrix can attain for an n-state plant; data
/// from an Nr > n window is linearly dependent beyond this.
inline Index attainable_rank(int N, Index m, Index n) {
  return half_vec_size(static_cast<Index>(N) * m + n);
}

/// The constant selector [I_m; 0] that injects u(t) into the leading input
/// slot of a history stack.
MatrixXd input_selector(Index z_dim, Index m);

/// Feature vector of the discounted one-step energy identity at time t:
/// vecs_from_vec(a^2 (w (x) w) - z(t) (x) z(t)), w = z(t+1) - [u(t); 0].
/// Requires next.time == now.time + 1.
VectorXd build_regressor_inf(const HistoryStack& now, const HistoryStack& next,
                             const Eigen::Ref<const VectorXd>& u_t, double discount);

/// (current, next) feature pair of the finite-horizon recursion:
/// current = vecs_from_vec(z (x) z), next = vecs_from_vec(w (x) w).
std::pair<VectorXd, VectorXd> build_regressor_fin(const HistoryStack& now,
                                                  const HistoryStack& next,
                                                  const Eigen::Ref<const VectorXd>& u_tau);

struct AssemblyOptions {
  int stride = 1;                     // timestep spacing between columns
  std::optional<Index> max_columns;   // cap on k
  RankTolerance pinv_tolerance = RankTolerance::standard();
};

/// Stacked regressors for the discounted-infinite-horizon estimate: one
/// feature column and one squared-output row per usable timestamp, with the
/// pseudoinverse of features^T precomputed and shared across all sensors.
class RegressorBundle {
 public:
  static RegressorBundle assemble(const Trajectory& traj, int N, double discount,
                                  const AssemblyOptions& opts = {});

  /// Rebuilds a bundle from exported parts (fixture import); the
  /// pseudoinverse is recomputed, which is deterministic.
  static RegressorBundle from_parts(MatrixXd features, MatrixXd targets, int window,
                                    double discount, Index input_dim, Index seed_dim,
                                    std::vector<int> timestamps,
                                    RankTolerance tol = RankTolerance::standard());

  const MatrixXd& features() const { return features_; }       // D x k
  const MatrixXd& targets() const { return targets_; }         // k x q
  const PinvResult& features_t_pinv() const { return pinv_; }  // D x k

  int window() const { return window_; }
  double discount() const { return discount_; }
  Index input_dim() const { return input_dim_; }
  Index seed_dim() const { return seed_dim_; }
  Index eval_dim() const { return targets_.cols(); }
  Index stack_dim() const { return static_cast<Index>(window_) * (input_dim_ + seed_dim_); }
  Index row_count() const { return features_.rows(); }
  Index column_count() const { return features_.cols(); }
  Index rank() const { return pinv_.numerical_rank; }
  bool full_row_rank() const { return rank() == row_count(); }
  double pinv_seconds() const { return pinv_seconds_; }
  const std::vector<int>& timestamps() const { return timestamps_; }

 private:
  RegressorBundle() = default;
  MatrixXd features_;
  MatrixXd targets_;
  PinvResult pinv_;
  std::vector<int> timestamps_;
  int window_ = 0;
  double discount_ = 1.0;
  Index input_dim_ = 0;
  Index seed_dim_ = 0;
  double pinv_seconds_ = 0.0;
};

/// Stacked regressors for the finite-horizon recursion: feature pairs
/// (current, next) sharing timestamps, with the pseudoinverse of
/// features_current^T precomputed.
class FiniteRegressorBundle {
 public:
  static FiniteRegressorBundle assemble(const Trajectory& traj, int N,
                                        const AssemblyOptions& opts = {});

  static FiniteRegressorBundle from_parts(MatrixXd features_current, MatrixXd features_next,
                                          MatrixXd targets, int window, Index input_dim,
                                          Index seed_dim, std::vector<int> timestamps,
                                          RankTolerance tol = RankTolerance::standard());

  const MatrixXd& features_current() const { return current_; }  // D x k
  const MatrixXd& features_next() const { return next_; }        // D x k
  const MatrixXd& targets() const { return targets_; }           // k x q
  const PinvResult& features_current_t_pinv() const { return pinv_; }

  int window() const { return window_; }
  Index input_dim() const { return input_dim_; }
  Index seed_dim() const { return seed_dim_; }
  Index eval_dim() const { return targets_.cols(); }
  Index stack_dim() const { return static_cast<Index>(window_) * (input_dim_ + seed_dim_); }
  Index row_count() const { return current_.rows(); }
  Index column_count() const { return current_.cols(); }
  Index rank() const { return pinv_.numerical_rank; }
  bool full_row_rank() const { return rank() == row_count(); }
  double pinv_seconds() const { return pinv_seconds_; }
  const std::vector<int>& timestamps() const { return timestamps_; }

 private:
  FiniteRegressorBundle() = default;
  MatrixXd current_;
  MatrixXd next_;
  MatrixXd targets_;
  PinvResult pinv_;
  std::vector<int> timestamps_;
  int window_ = 0;
  Index input_dim_ = 0;
  Index seed_dim_ = 0;
  double pinv_seconds_ = 0.0;
};

/// Raw history-stack matrices for the rank-based observability check:
/// column i of seed_stacks is the seed-channel stack at timestamp i, and
/// column i of eval_stacks the evaluated-channel stack at the same time.
struct ObsDataMatrices {
  MatrixXd seed_stacks;  // (Nm+Nr) x k
  MatrixXd eval_stacks;  // (Nm+Nq) x k
  int window = 0;
  Index input_dim = 0;
  Index seed_dim = 0;
  Index eval_dim = 0;
  std::vector<int> timestamps;
};

ObsDataMatrices assemble_obs_matrices(const Trajectory& traj, int N, int stride = 1);

}  // namespace sensorsel
