#pragma once

#include <optional>
#include <vector>

#include "sensorsel/lti.hpp"
#include "sensorsel/metrics.hpp"
#include "sensorsel/tensor_ops.hpp"

// Model-based ground truth. Everything here reads the plant matrices
// directly and exists for validation and tests; the data-driven pipeline
// never calls into this namespace.
namespace sensorsel::oracle {

/// Solves a^2 A^T W A - W + Cs^T Cs = 0 for the unique symmetric W.
/// Requires a * rho(A) < 1; throws StabilityError otherwise.
SymMatrix solve_discounted_ale(const Eigen::Ref<const MatrixXd>& A,
                               const Eigen::Ref<const MatrixXd>& Cs, double discount);

/// Factors the discounted Lyapunov operator once so many right-hand sides
/// (sensor subsets) can be solved cheaply against the same plant.
class DiscountedAleSolver {
 public:
  DiscountedAleSolver(const Eigen::Ref<const MatrixXd>& A, double discount);

  /// Solves for the W matching output weight Cs (stacked selected rows).
  SymMatrix solve(const Eigen::Ref<const MatrixXd>& Cs) const;

 private:
  Index n_;
  double discount_;
  MatrixXd a_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

/// Propagates W(t+1) = A^T W(t) A + Cs^T Cs from W(0) = 0; returns W(0..T).
std::vector<SymMatrix> finite_horizon_obs_gramian(const Eigen::Ref<const MatrixXd>& A,
                                                  const Eigen::Ref<const MatrixXd>& Cs, int T);

/// Observability and controllability Gramians of the (discounted) plant for
/// one sensor subset.
struct GramianPair {
  SymMatrix W_o;  // n x n, depends on the subset
  SymMatrix W_c;  // n x n, input-side dual
  Horizon horizon = Horizon::infinite(0.99);
};

GramianPair gramians(const LtiSystem& sys, const SelectionIndex& sel, const Horizon& horizon);

/// Ground-truth score of a sensor subset.  Trace scores are computed from
/// the observability-side Gramian and cross-checked against the dual
/// controllability form; disagreement beyond 1e-6 relative raises DataError.
/// Log-det of a block with an eigenvalue below the floor returns -inf.
double true_cost(const LtiSystem& sys, const SelectionIndex& sel, const Metric& metric);

/// Matrices mapping an input/output history window of length N to the
/// current state: x(t) = state_from_history * [inputs; outputs], t >= N.
struct ReconstructionMatrices {
  MatrixXd input_to_state;       // n x Nm:  [B  AB  ...  A^(N-1)B]
  MatrixXd output_map;           // Nr x n: rows C A^(N-1) down to C
  MatrixXd input_to_output;      // Nr x Nm block Toeplitz of Markov parameters
  MatrixXd from_input_history;   // n x Nm
  MatrixXd from_output_history;  // n x Nr
  MatrixXd state_from_history;   // n x (Nm+Nr)
  int history_length = 0;        // N
  int observability_index = 0;   // K of the seed pair
};

/// Requires the seed pair observable and N >= its observability index;
/// throws DataError otherwise.
ReconstructionMatrices build_reconstruction(const LtiSystem& sys,
                                            const SelectionIndex& sensors_hat, int N);

/// Smallest K with rank[C; CA; ...; CA^(K-1)] equal to full observability
/// rank n; nullopt when the pair is unobservable.
std::optional<int> observability_index(const Eigen::Ref<const MatrixXd>& A,
                                       const Eigen::Ref<const MatrixXd>& C);

/// Exact argmax of true_cost over all p'-subsets of the candidate set
/// (optionally unioned with a fixed seed set before scoring).  Ties break
/// lexicographically.  Guarded to candidate counts <= 20.
SelectionIndex brute_force_select(const LtiSystem& sys, int p_prime, const Metric& metric,
                                  std::optional<SelectionIndex> candidates = {},
                                  std::optional<SelectionIndex> seed = {});

}  // namespace sensorsel::oracle
