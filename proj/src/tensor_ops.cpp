#include "sensorsel/tensor_ops.hpp"

#include <Eigen/SVD>
#include <limits>

namespace sensorsel {

double RankTolerance::resolve(double sigma_max, Index rows, Index cols) const {
  switch (kind) {
    case Kind::kAbsolute:
      return value;
    case Kind::kRelativeToMax:
      return value * sigma_max;
    case Kind::kStandard:
    default:
      return sigma_max * static_cast<double>(std::max(rows, cols)) *
             std::numeric_limits<double>::epsilon();
  }
}

namespace {

Index count_above(const Eigen::VectorXd& sv, double tol) {
  Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  return rank;
}

}  // namespace

PinvResult pinv_tol(const Eigen::Ref<const Eigen::MatrixXd>& m, RankTolerance tol) {
  if (m.rows() == 0 || m.cols() == 0) throw DimensionError("pinv_tol(): empty matrix");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PinvResult out;
  out.singular_values = svd.singularValues();
  const double sigma_max = out.singular_values.size() > 0 ? out.singular_values[0] : 0.0;
  out.tolerance_used = tol.resolve(sigma_max, m.rows(), m.cols());
  out.numerical_rank = count_above(out.singular_values, out.tolerance_used);

  const Index r = out.numerical_rank;
  if (r == 0) {
    out.pseudoinverse = Eigen::MatrixXd::Zero(m.cols(), m.rows());
  } else {
    out.pseudoinverse = svd.matrixV().leftCols(r) *
                        out.singular_values.head(r).cwiseInverse().asDiagonal() *
                        svd.matrixU().leftCols(r).transpose();
  }
  return out;
}

RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m, RankTolerance tol) {
  if (m.rows() == 0 || m.cols() == 0) throw DimensionError("numerical_rank(): empty matrix");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  RankInfo out;
  out.singular_values = svd.singularValues();
  const double sigma_max = out.singular_values.size() > 0 ? out.singular_values[0] : 0.0;
  out.tolerance_used = tol.resolve(sigma_max, m.rows(), m.cols());
  out.rank = count_above(out.singular_values, out.tolerance_used);
  return out;
}

}  // namespace sensorsel
