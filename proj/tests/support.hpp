#pragma once

#include <random>

#include "sensorsel/lti.hpp"
#include "sensorsel/oracle.hpp"
#include "sensorsel/scenario.hpp"

namespace test_support {

using namespace sensorsel;

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, Index size) {
  return random_matrix(rng, size, 1);
}

inline SymMatrix random_symmetric(std::mt19937_64& rng, Index dim) {
  return SymMatrix::from_dense(random_matrix(rng, dim, dim));
}

/// Random stable plant whose first `seed_count` sensors form an observable
/// pair with observability index <= window; bumps the generator seed until
/// that holds (generic draws satisfy it immediately).
inline LtiSystem observable_system(std::uint64_t seed, Index n, Index m, Index p,
                                   int seed_count, int window, double radius = 0.9) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    LtiSystem sys = make_random_stable(n, m, p, seed + 1000 * attempt, radius);
    std::vector<int> ids(static_cast<std::size_t>(seed_count));
    for (int i = 0; i < seed_count; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    const auto K = oracle::observability_index(
        sys.A, selection_matrix(SelectionIndex(ids, static_cast<int>(p))) * sys.C);
    if (K && *K <= window) return sys;
  }
}

inline SelectionIndex first_sensors(int count, int p) {
  std::vector<int> ids(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  return SelectionIndex(ids, p);
}

inline Trajectory collect(const LtiSystem& sys, const SelectionIndex& seed_set,
                          const SelectionIndex& eval_set, int horizon, std::uint64_t seed) {
  ExcitationConfig cfg;
  cfg.seed = seed;
  cfg.horizon = horizon;
  return simulate(sys, generate_excitation(cfg, sys.m()), seed_set, eval_set);
}

/// States of the plant under the given inputs, recomputed by the plain
/// recursion; column t holds x(t).
inline MatrixXd replay_states(const LtiSystem& sys, const Eigen::Ref<const MatrixXd>& u) {
  MatrixXd xs(sys.n(), u.cols() + 1);
  xs.col(0) = sys.x0;
  for (Index t = 0; t < u.cols(); ++t)
    xs.col(t + 1) = sys.A * xs.col(t) + sys.B * u.col(t);
  return xs;
}

}  // namespace test_support
