#include "sensorsel/oracle.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace sensorsel::oracle {

namespace {

MatrixXd stacked_rows(const LtiSystem& sys, const SelectionIndex& sel) {
  return selection_matrix(sel) * sys.C;
}

SymMatrix input_cost_block(const MatrixXd& B, const SymMatrix& W) {
  return SymMatrix::from_dense(B.transpose() * W.dense() * B);
}

}  // namespace

DiscountedAleSolver::DiscountedAleSolver(const Eigen::Ref<const MatrixXd>& A, double discount)
    : n_(A.rows()), discount_(discount), a_(A) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw DimensionError("DiscountedAleSolver: A must be square, n >= 1");
  if (discount <= 0.0)
    throw std::invalid_argument("DiscountedAleSolver: discount must be positive");
  const double rho = spectral_radius(A);
  if (discount * rho >= 1.0) {
    std::ostringstream msg;
    msg << "DiscountedAleSolver: discount * spectral radius = " << discount * rho
        << " >= 1; the discounted energy is undefined";
    throw StabilityError(msg.str());
  }

  // Matrix of W -> a^2 A^T W A on packed symmetric coordinates.  The packed
  // basis cell (i, j) corresponds to e_i e_j^T + e_j e_i^T (i != j), whose
  // image is an outer-product combination of rows of A.
  const Index dpack = half_vec_size(n_);
  const MatrixXd rows_t = A.transpose();  // column i = i-th row of A
  MatrixXd op(dpack, dpack);
  const double a2 = discount * discount;
  for (Index j = 0; j < n_; ++j)
    for (Index i = j; i < n_; ++i) {
      const Index col = half_vec_index(i, j, n_);
      const auto ri = rows_t.col(i);
      const auto rj = rows_t.col(j);
      for (Index cj = 0; cj < n_; ++cj)
        for (Index ci = cj; ci < n_; ++ci) {
          double v = ri[ci] * rj[cj];
          if (i != j) v += rj[ci] * ri[cj];
          op(half_vec_index(ci, cj, n_), col) = a2 * v;
        }
    }
  lu_.compute(MatrixXd::Identity(dpack, dpack) - op);
}

SymMatrix DiscountedAleSolver::solve(const Eigen::Ref<const MatrixXd>& Cs) const {
  if (Cs.cols() != n_)
    throw DimensionError("DiscountedAleSolver::solve(): Cs must have n columns");
  const MatrixXd Q = Cs.transpose() * Cs;
  const VectorXd w = lu_.solve(vech(Q));
  SymMatrix W = unvech(w);

  const MatrixXd Wd = W.dense();
  const double resid =
      (discount_ * discount_ * a_.transpose() * Wd * a_ - Wd + Q).norm();
  if (resid > 1e-10 * std::max(Q.norm(), 1e-300)) {
    std::ostringstream msg;
    msg << "DiscountedAleSolver::solve(): residual " << resid
        << " exceeds 1e-10 * ||Q|| = " << 1e-10 * Q.norm();
    throw DataError(msg.str());
  }
  return W;
}

SymMatrix solve_discounted_ale(const Eigen::Ref<const MatrixXd>& A,
                               const Eigen::Ref<const MatrixXd>& Cs, double discount) {
  return DiscountedAleSolver(A, discount).solve(Cs);
}

std::vector<SymMatrix> finite_horizon_obs_gramian(const Eigen::Ref<const MatrixXd>& A,
                                                  const Eigen::Ref<const MatrixXd>& Cs,
                                                  int T) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw DimensionError("finite_horizon_obs_gramian(): A must be square, n >= 1");
  if (Cs.cols() != A.rows())
    throw DimensionError("finite_horizon_obs_gramian(): Cs must have n columns");
  if (T < 0) throw DimensionError("finite_horizon_obs_gramian(): T must be >= 0");

  const MatrixXd Q = Cs.transpose() * Cs;
  std::vector<SymMatrix> W;
  W.reserve(static_cast<std::size_t>(T) + 1);
  W.emplace_back(A.rows());  // W(0) = 0
  for (int t = 0; t < T; ++t) {
    const MatrixXd prev = W.back().dense();
    W.push_back(SymMatrix::from_dense(A.transpose() * prev * A + Q));
  }
  return W;
}

GramianPair gramians(const LtiSystem& sys, const SelectionIndex& sel, const Horizon& horizon) {
  sys.validate();
  const MatrixXd Cs = stacked_rows(sys, sel);
  GramianPair out;
  out.horizon = horizon;
  if (horizon.is_infinite()) {
    out.W_o = solve_discounted_ale(sys.A, Cs, horizon.discount());
    out.W_c = solve_discounted_ale(sys.A.transpose(), sys.B.transpose(), horizon.discount());
  } else {
    out.W_o = finite_horizon_obs_gramian(sys.A, Cs, horizon.steps()).back();
    out.W_c =
        finite_horizon_obs_gramian(sys.A.transpose(), sys.B.transpose(), horizon.steps()).back();
  }
  return out;
}

double true_cost(const LtiSystem& sys, const SelectionIndex& sel, const Metric& metric) {
  sys.validate();
  if (sel.ambient() != sys.p()) throw DimensionError("true_cost(): selection ambient != p");
  const MatrixXd Cs = stacked_rows(sys, sel);
  const Horizon& h = metric.horizon;
  const SymMatrix Wo = h.is_infinite()
                           ? solve_discounted_ale(sys.A, Cs, h.discount())
                           : finite_horizon_obs_gramian(sys.A, Cs, h.steps()).back();
  const SymMatrix block = input_cost_block(sys.B, Wo);

  if (metric.kind == MetricKind::kLogDet) return log_det(block);

  const double primal = block.trace();
  const SymMatrix Wc =
      h.is_infinite()
          ? solve_discounted_ale(sys.A.transpose(), sys.B.transpose(), h.discount())
          : finite_horizon_obs_gramian(sys.A.transpose(), sys.B.transpose(), h.steps()).back();
  const double dual = (Cs * Wc.dense() * Cs.transpose()).trace();
  if (std::abs(primal - dual) > 1e-6 * std::max(1.0, std::abs(primal))) {
    std::ostringstream msg;
    msg << "true_cost(): observability/controllability trace forms disagree: " << primal
        << " vs " << dual;
    throw DataError(msg.str());
  }
  return primal;
}

std::optional<int> observability_index(const Eigen::Ref<const MatrixXd>& A,
                                       const Eigen::Ref<const MatrixXd>& C) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw DimensionError("observability_index(): A must be square, n >= 1");
  if (C.cols() != A.rows())
    throw DimensionError("observability_index(): C must have n columns");

  const Index n = A.rows();
  const Index p = C.rows();
  MatrixXd obs(n * p, n);
  obs.topRows(p) = C;
  for (Index k = 1; k < n; ++k)
    obs.middleRows(k * p, p) = obs.middleRows((k - 1) * p, p) * A;

  if (numerical_rank(obs).rank < n) return std::nullopt;
  for (Index k = 1; k <= n; ++k)
    if (numerical_rank(obs.topRows(k * p)).rank == n) return static_cast<int>(k);
  return std::nullopt;  // unreachable
}

ReconstructionMatrices build_reconstruction(const LtiSystem& sys,
                                            const SelectionIndex& sensors_hat, int N) {
  sys.validate();
  if (N < 1) throw DimensionError("build_reconstruction(): N must be >= 1");
  const MatrixXd Chat = stacked_rows(sys, sensors_hat);
  const auto K = observability_index(sys.A, Chat);
  if (!K)
    throw DataError("build_reconstruction(): the seed sensor pair is unobservable");
  if (N < *K) {
    std::ostringstream msg;
    msg << "build_reconstruction(): N = " << N << " is below the observability index "
        << *K;
    throw DataError(msg.str());
  }

  const Index n = sys.n();
  const Index m = sys.m();
  const Index r = Chat.rows();

  std::vector<MatrixXd> Apow(static_cast<std::size_t>(N) + 1);
  Apow[0] = MatrixXd::Identity(n, n);
  for (int k = 1; k <= N; ++k) Apow[static_cast<std::size_t>(k)] = Apow[static_cast<std::size_t>(k - 1)] * sys.A;

  ReconstructionMatrices out;
  out.history_length = N;
  out.observability_index = *K;

  out.input_to_state.resize(n, N * m);
  for (int j = 0; j < N; ++j)
    out.input_to_state.middleCols(j * m, m) = Apow[static_cast<std::size_t>(j)] * sys.B;

  out.output_map.resize(N * r, n);
  for (int i = 0; i < N; ++i)
    out.output_map.middleRows(i * r, r) = Chat * Apow[static_cast<std::size_t>(N - 1 - i)];

  out.input_to_output = MatrixXd::Zero(N * r, N * m);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      out.input_to_output.block(i * r, j * m, r, m) =
          Chat * Apow[static_cast<std::size_t>(j - i - 1)] * sys.B;

  out.from_output_history = Apow[static_cast<std::size_t>(N)] * pinv_tol(out.output_map).pseudoinverse;
  out.from_input_history = out.input_to_state - out.from_output_history * out.input_to_output;
  out.state_from_history.resize(n, N * (m + r));
  out.state_from_history << out.from_input_history, out.from_output_history;
  return out;
}

SelectionIndex brute_force_select(const LtiSystem& sys, int p_prime, const Metric& metric,
                                  std::optional<SelectionIndex> candidates,
                                  std::optional<SelectionIndex> seed) {
  sys.validate();
  const int p = static_cast<int>(sys.p());
  const SelectionIndex cand = candidates.value_or(SelectionIndex::all(p));

  std::vector<int> pool;
  for (int idx : cand.indices())
    if (!seed || !seed->contains(idx)) pool.push_back(idx);

  if (static_cast<int>(pool.size()) > 20)
    throw std::invalid_argument(
        "brute_force_select(): more than 20 candidates; exhaustive search refused");
  if (p_prime < 1 || p_prime > static_cast<int>(pool.size()))
    throw DimensionError("brute_force_select(): p' must be in [1, |candidates|]");

  // Shared factorizations across subsets: the Lyapunov operator depends only
  // on (A, a), and the controllability-side Gramian not on the subset at all.
  const Horizon& h = metric.horizon;
  std::optional<DiscountedAleSolver> solver;
  if (h.is_infinite()) solver.emplace(sys.A, h.discount());
  SymMatrix Wc;
  if (metric.kind == MetricKind::kTrace) {
    Wc = h.is_infinite()
             ? solve_discounted_ale(sys.A.transpose(), sys.B.transpose(), h.discount())
             : finite_horizon_obs_gramian(sys.A.transpose(), sys.B.transpose(), h.steps()).back();
  }

  const auto cost_of = [&](const SelectionIndex& subset) {
    const SelectionIndex full = seed ? subset.union_with(*seed) : subset;
    const MatrixXd Cs = stacked_rows(sys, full);
    const SymMatrix Wo = h.is_infinite()
                             ? solver->solve(Cs)
                             : finite_horizon_obs_gramian(sys.A, Cs, h.steps()).back();
    const SymMatrix block = input_cost_block(sys.B, Wo);
    if (metric.kind == MetricKind::kLogDet) return log_det(block);
    const double primal = block.trace();
    const double dual = (Cs * Wc.dense() * Cs.transpose()).trace();
    if (std::abs(primal - dual) > 1e-6 * std::max(1.0, std::abs(primal)))
      throw DataError("brute_force_select(): trace cross-check failed");
    return primal;
  };

  // Lexicographic enumeration of p'-combinations of the pool; strict
  // improvement keeps the first (lexicographically smallest) argmax.
  std::vector<int> pick(static_cast<std::size_t>(p_prime));
  for (int i = 0; i < p_prime; ++i) pick[static_cast<std::size_t>(i)] = i;

  std::vector<int> best_set;
  double best_val = -std::numeric_limits<double>::infinity();
  bool first = true;
  const int pool_n = static_cast<int>(pool.size());
  while (true) {
    std::vector<int> subset_ids(static_cast<std::size_t>(p_prime));
    for (int i = 0; i < p_prime; ++i)
      subset_ids[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
    const double val = cost_of(SelectionIndex(subset_ids, p));
    if (first || val > best_val) {
      best_val = val;
      best_set = subset_ids;
      first = false;
    }

    int i = p_prime - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == pool_n - p_prime + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < p_prime; ++j)
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return SelectionIndex(best_set, p);
}

}  // namespace sensorsel::oracle
