#include "sensorsel/lti.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sensorsel {

void LtiSystem::validate() const {
  if (A.rows() < 1 || A.rows() != A.cols())
    throw DimensionError("LtiSystem: A must be square, n >= 1");
  if (B.rows() != A.rows() || B.cols() < 1)
    throw DimensionError("LtiSystem: B must be n x m with m >= 1");
  if (C.cols() != A.rows() || C.rows() < 1)
    throw DimensionError("LtiSystem: C must be p x n with p >= 1");
  if (x0.size() != A.rows()) throw DimensionError("LtiSystem: x0 must have n entries");
  if (!sensor_labels.empty() && static_cast<Index>(sensor_labels.size()) != C.rows())
    throw DimensionError("LtiSystem: sensor_labels must have one entry per sensor");
}

SelectionIndex::SelectionIndex(std::vector<int> indices, int ambient)
    : indices_(std::move(indices)), ambient_(ambient) {
  if (ambient_ < 1) throw DimensionError("SelectionIndex: ambient sensor count must be >= 1");
  if (indices_.empty()) throw DimensionError("SelectionIndex: selection must be nonempty");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 1 || indices_[i] > ambient_)
      throw DimensionError("SelectionIndex: index out of [1, p]");
    if (i > 0 && indices_[i] <= indices_[i - 1])
      throw DimensionError("SelectionIndex: indices must be strictly increasing");
  }
}

SelectionIndex SelectionIndex::all(int ambient) {
  std::vector<int> idx(static_cast<std::size_t>(ambient));
  for (int i = 0; i < ambient; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
  return SelectionIndex(std::move(idx), ambient);
}

SelectionIndex SelectionIndex::single(int index, int ambient) {
  return SelectionIndex({index}, ambient);
}

bool SelectionIndex::contains(int index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

SelectionIndex SelectionIndex::union_with(const SelectionIndex& other) const {
  if (other.ambient_ != ambient_)
    throw DimensionError("SelectionIndex::union_with(): ambient mismatch");
  std::vector<int> merged;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                 std::back_inserter(merged));
  return SelectionIndex(std::move(merged), ambient_);
}

SelectionIndex SelectionIndex::complement() const {
  std::vector<int> rest;
  for (int i = 1; i <= ambient_; ++i)
    if (!contains(i)) rest.push_back(i);
  if (rest.empty())
    throw DimensionError("SelectionIndex::complement(): full selection has empty complement");
  return SelectionIndex(std::move(rest), ambient_);
}

MatrixXd selection_matrix(const SelectionIndex& sel) {
  MatrixXd s = MatrixXd::Zero(sel.size(), sel.ambient());
  for (int row = 0; row < sel.size(); ++row)
    s(row, sel.indices()[static_cast<std::size_t>(row)] - 1) = 1.0;
  return s;
}

MatrixXd generate_excitation(const ExcitationConfig& cfg, Index m) {
  if (cfg.horizon < 0) throw DimensionError("generate_excitation(): negative horizon");
  if (m < 1) throw DimensionError("generate_excitation(): input dimension must be >= 1");
  MatrixXd u(m, cfg.horizon);
  std::mt19937_64 rng(cfg.seed);

  switch (cfg.kind) {
    case ExcitationConfig::Kind::kGaussianIid: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (Index t = 0; t < cfg.horizon; ++t)
        for (Index i = 0; i < m; ++i) u(i, t) = cfg.amplitude * gauss(rng);
      break;
    }
    case ExcitationConfig::Kind::kSumOfSinusoids: {
      // Per channel: average of tones with frequencies spread over
      // (0, pi) and random phases, scaled to the requested amplitude.
      constexpr int kTones = 8;
      std::uniform_real_distribution<double> freq(0.05 * std::numbers::pi,
                                                  0.95 * std::numbers::pi);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      for (Index i = 0; i < m; ++i) {
        double w[kTones], ph[kTones];
        for (int s = 0; s < kTones; ++s) {
          w[s] = freq(rng);
          ph[s] = phase(rng);
        }
        for (Index t = 0; t < cfg.horizon; ++t) {
          double v = 0.0;
          for (int s = 0; s < kTones; ++s) v += std::sin(w[s] * static_cast<double>(t) + ph[s]);
          u(i, t) = cfg.amplitude * v / std::sqrt(static_cast<double>(kTones));
        }
      }
      break;
    }
  }
  return u;
}

Trajectory simulate(const LtiSystem& sys, const Eigen::Ref<const MatrixXd>& u,
                    const SelectionIndex& sensors_hat, const SelectionIndex& sensors_eval) {
  sys.validate();
  if (u.rows() != sys.m()) throw DimensionError("simulate(): input rows must equal m");
  if (u.cols() < 1) throw DimensionError("simulate(): need at least one input sample");
  if (sensors_hat.ambient() != sys.p() || sensors_eval.ambient() != sys.p())
    throw DimensionError("simulate(): selection ambient count must equal p");

  const Index L = u.cols();
  const MatrixXd c_hat = selection_matrix(sensors_hat) * sys.C;
  const MatrixXd c_eval = selection_matrix(sensors_eval) * sys.C;

  Trajectory traj;
  traj.u = u;
  traj.y_hat.resize(c_hat.rows(), L);
  traj.y_tilde.resize(c_eval.rows(), L);

  VectorXd x = sys.x0;
  for (Index t = 0; t < L; ++t) {
    traj.y_hat.col(t) = c_hat * x;
    traj.y_tilde.col(t) = c_eval * x;
    x = sys.A * x + sys.B * u.col(t);
  }
  return traj;
}

double spectral_radius(const Eigen::Ref<const MatrixXd>& a) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw DimensionError("spectral_radius(): matrix must be square");
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sensorsel
