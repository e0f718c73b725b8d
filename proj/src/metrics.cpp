#include "sensorsel/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace sensorsel {

double log_det(const SymMatrix& block, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block.dense(),
                                                     Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda < floor) return -std::numeric_limits<double>::infinity();
    sum += std::log(lambda);
  }
  return sum;
}

double metric_value(const SymMatrix& block, MetricKind kind, double floor) {
  return kind == MetricKind::kTrace ? block.trace() : log_det(block, floor);
}

std::string to_string(MetricKind kind) {
  return kind == MetricKind::kTrace ? "trace" : "logdet";
}

}  // namespace sensorsel
