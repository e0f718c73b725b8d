#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sensorsel/errors.hpp"

namespace sensorsel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Discrete-time plant x(t+1) = A x(t) + B u(t), y(t) = C x(t).
/// Each row of C is one sensor.
struct LtiSystem {
  MatrixXd A;   // n x n
  MatrixXd B;   // n x m
  MatrixXd C;   // p x n
  VectorXd x0;  // n

  std::vector<std::string> sensor_labels;  // optional, size p when present

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  Index p() const { return C.rows(); }

  /// Throws DimensionError if the pieces are inconsistent.
  void validate() const;
};

/// Ordered sensor subset: strictly increasing 1-based indices in [1, p].
class SelectionIndex {
 public:
  SelectionIndex(std::vector<int> indices, int ambient);

  static SelectionIndex all(int ambient);
  static SelectionIndex single(int index, int ambient);

  const std::vector<int>& indices() const { return indices_; }
  int ambient() const { return ambient_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool contains(int index) const;

  /// Sorted union; both sides must share the ambient count.
  SelectionIndex union_with(const SelectionIndex& other) const;
  /// Sensors of the ambient set not in this one.  May be empty only if
  /// this selection is the full set, in which case it throws, since an
  /// empty selection is not representable.
  SelectionIndex complement() const;

  friend bool operator==(const SelectionIndex&, const SelectionIndex&) = default;

 private:
  std::vector<int> indices_;
  int ambient_ = 0;
};

/// Row-selector matrix with rows e_{g_1}^T ... e_{g_k}^T, dims |g| x p.
MatrixXd selection_matrix(const SelectionIndex& sel);

struct ExcitationConfig {
  enum class Kind { kGaussianIid, kSumOfSinusoids };

  std::uint64_t seed = 0;
  int horizon = 0;       // number of input samples
  double amplitude = 1.0;
  Kind kind = Kind::kGaussianIid;
};

/// Deterministic excitation signal, one column per timestep (m x horizon).
MatrixXd generate_excitation(const ExcitationConfig& cfg, Index m);

/// Input/output record of one contiguous simulation run starting at t0 = 0.
/// Column t of each matrix holds the signal at time t.
struct Trajectory {
  MatrixXd u;        // m x L
  MatrixXd y_hat;    // r x L, outputs of the seed sensor set
  MatrixXd y_tilde;  // q x L, outputs of the evaluated sensor set
  int t0 = 0;

  Index length() const { return u.cols(); }
};

/// Runs the plant forward under the given inputs, recording both the seed
/// sensors' outputs and the evaluated sensors' outputs at every step.
Trajectory simulate(const LtiSystem& sys, const Eigen::Ref<const MatrixXd>& u,
                    const SelectionIndex& sensors_hat, const SelectionIndex& sensors_eval);

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Eigen::Ref<const MatrixXd>& a);

}  // namespace sensorsel
