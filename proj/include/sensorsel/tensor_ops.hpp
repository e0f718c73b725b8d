#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <type_traits>

#include "sensorsel/errors.hpp"

namespace sensorsel {

using Eigen::Index;

/// Number of entries in the packed lower triangle of a d x d symmetric matrix.
constexpr Index half_vec_size(Index d) { return d * (d + 1) / 2; }

/// Flat position of entry (i, j), i >= j, in lower-triangular column-major
/// packing: columns are stacked, column j contributing entries j..d-1.
/// This single index map is shared by vech/vecs/SymMatrixT and by every
/// regressor row, so the pairing between feature vectors and packed Gramian
/// coordinates stays consistent across the library.
inline Index half_vec_index(Index i, Index j, Index d) {
  return j * d - j * (j - 1) / 2 + (i - j);
}

/// Recovers d from a packed length d*(d+1)/2.  Throws DimensionError if the
/// length is not a triangular number.
inline Index half_vec_dim(Index len) {
  const Index d = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
  if (d < 0 || half_vec_size(d) != len)
    throw DimensionError("half_vec_dim(): length is not a triangular number");
  return d;
}

/// Kronecker product, dims (ra*rb) x (ca*cb).
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  static_assert(std::is_same_v<typename DerivedA::Scalar, typename DerivedB::Scalar>,
                "kron(): mixed scalar types");
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
      a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Column-stacking vectorization.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> vec(
    const Eigen::MatrixBase<Derived>& m) {
  return m.reshaped();
}

/// Inverse of vec.  Throws DimensionError unless v has rows*cols entries.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> unvec(
    const Eigen::MatrixBase<Derived>& v, Index rows, Index cols) {
  if (v.cols() != 1 || v.size() != rows * cols)
    throw DimensionError("unvec(): length does not match rows*cols");
  return v.reshaped(rows, cols);
}

/// Dense symmetric matrix with packed lower-triangular storage, so the
/// symmetry invariant holds exactly: (i, j) and (j, i) share one cell.
template <typename Scalar>
class SymMatrixT {
 public:
  using PackedVector = Eigen::Vector<Scalar, Eigen::Dynamic>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SymMatrixT() = default;

  /// Zero matrix of the given dimension (dim >= 1).
  explicit SymMatrixT(Index dim) : dim_(dim) {
    if (dim < 1) throw DimensionError("SymMatrixT(): dim must be >= 1");
    packed_ = PackedVector::Zero(half_vec_size(dim));
  }

  /// Builds from a square matrix; off-diagonal pairs are averaged so the
  /// stored value is (m(i,j) + m(j,i)) / 2.
  static SymMatrixT from_dense(const Eigen::Ref<const DenseMatrix>& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw DimensionError("SymMatrixT::from_dense(): matrix must be square, dim >= 1");
    SymMatrixT out(m.rows());
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = j; i < m.rows(); ++i)
        out.packed_[half_vec_index(i, j, m.rows())] =
            (i == j) ? m(i, i) : (m(i, j) + m(j, i)) / Scalar(2);
    return out;
  }

  /// Builds from packed lower-triangular entries (the vech vector).
  static SymMatrixT from_packed(const Eigen::Ref<const PackedVector>& packed) {
    SymMatrixT out;
    out.dim_ = half_vec_dim(packed.size());
    out.packed_ = packed;
    return out;
  }

  static SymMatrixT identity(Index dim) {
    SymMatrixT out(dim);
    for (Index i = 0; i < dim; ++i) out.packed_[half_vec_index(i, i, dim)] = Scalar(1);
    return out;
  }

  Index dim() const { return dim_; }

  Scalar operator()(Index i, Index j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
      throw DimensionError("SymMatrixT::operator(): index out of range");
    return i >= j ? packed_[half_vec_index(i, j, dim_)] : packed_[half_vec_index(j, i, dim_)];
  }

  /// Mutable access; (i, j) and (j, i) resolve to the same cell.
  Scalar& entry(Index i, Index j) {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
      throw DimensionError("SymMatrixT::entry(): index out of range");
    return i >= j ? packed_[half_vec_index(i, j, dim_)] : packed_[half_vec_index(j, i, dim_)];
  }

  /// Packed lower triangle in column-major order (the vech vector).
  const PackedVector& packed() const { return packed_; }

  /// Packed lower triangle with strictly-off-diagonal entries doubled
  /// (the vecs vector), so that scaled_packed(S) . packed(W) == tr(S W).
  PackedVector scaled_packed() const {
    PackedVector out = packed_;
    for (Index j = 0; j < dim_; ++j)
      for (Index i = j + 1; i < dim_; ++i) out[half_vec_index(i, j, dim_)] *= Scalar(2);
    return out;
  }

  DenseMatrix dense() const {
    DenseMatrix out(dim_, dim_);
    for (Index j = 0; j < dim_; ++j)
      for (Index i = j; i < dim_; ++i) out(i, j) = out(j, i) = packed_[half_vec_index(i, j, dim_)];
    return out;
  }

  Scalar trace() const {
    Scalar t(0);
    for (Index i = 0; i < dim_; ++i) t += packed_[half_vec_index(i, i, dim_)];
    return t;
  }

  /// Leading b x b principal block, still exactly symmetric.
  SymMatrixT top_left(Index b) const {
    if (b < 1 || b > dim_) throw DimensionError("SymMatrixT::top_left(): bad block size");
    SymMatrixT out(b);
    for (Index j = 0; j < b; ++j)
      for (Index i = j; i < b; ++i)
        out.packed_[half_vec_index(i, j, b)] = packed_[half_vec_index(i, j, dim_)];
    return out;
  }

  SymMatrixT& operator+=(const SymMatrixT& other) {
    if (other.dim_ != dim_) throw DimensionError("SymMatrixT::operator+=: dimension mismatch");
    packed_ += other.packed_;
    return *this;
  }

  friend SymMatrixT operator+(SymMatrixT a, const SymMatrixT& b) { return a += b; }

 private:
  Index dim_ = 0;
  PackedVector packed_;
};

using SymMatrix = SymMatrixT<double>;

/// Half-vectorization: packed lower triangle, columns stacked.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> vech(const SymMatrixT<Scalar>& m) {
  return m.packed();
}

/// Scaled half-vectorization: like vech but strictly-off-diagonal entries
/// doubled, so vecs(S) . vech(W) == tr(S W) for symmetric S, W.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> vecs(const SymMatrixT<Scalar>& m) {
  return m.scaled_packed();
}

/// vech of a square matrix, reading the lower triangle.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> vech(
    const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw DimensionError("vech(): matrix must be square");
  const Index d = m.rows();
  Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> out(half_vec_size(d));
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) out[half_vec_index(i, j, d)] = m(i, j);
  return out;
}

/// vecs of a square matrix, reading the lower triangle.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> vecs(
    const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw DimensionError("vecs(): matrix must be square");
  const Index d = m.rows();
  Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> out(half_vec_size(d));
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i)
      out[half_vec_index(i, j, d)] = (i == j) ? m(i, i) : typename Derived::Scalar(2) * m(i, j);
  return out;
}

/// Inverse of vecs: halves the doubled off-diagonal entries.
/// Throws DimensionError on non-triangular-number lengths.
template <typename Derived>
SymMatrixT<typename Derived::Scalar> unvecs(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.cols() != 1) throw DimensionError("unvecs(): expected a column vector");
  const Eigen::Vector<Scalar, Eigen::Dynamic> packed = v.reshaped();
  const Index d = half_vec_dim(packed.size());
  SymMatrixT<Scalar> out(d);
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) {
      const Scalar raw = packed[half_vec_index(i, j, d)];
      out.entry(i, j) = (i == j) ? raw : raw / Scalar(2);
    }
  return out;
}

/// Inverse of vech: unpacks raw lower-triangular entries.
template <typename Derived>
SymMatrixT<typename Derived::Scalar> unvech(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.cols() != 1) throw DimensionError("unvech(): expected a column vector");
  const Eigen::Vector<Scalar, Eigen::Dynamic> packed = v.reshaped();
  return SymMatrixT<Scalar>::from_packed(packed);
}

/// Compresses the vectorization of a (nominally symmetric) square matrix to
/// scaled half-vectorized form: vecs(unvec(v)).  The unvec'd matrix is
/// symmetrized as (M + M^T)/2 first, which removes round-off asymmetry from
/// inputs assembled as outer products or differences of them.  Satisfies
/// vecs_from_vec(z (x) z) . vech(W) == z^T W z for any z and symmetric W.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> vecs_from_vec(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.cols() != 1) throw DimensionError("vecs_from_vec(): expected a column vector");
  const Eigen::Vector<Scalar, Eigen::Dynamic> flat = v.reshaped();
  const Index d = static_cast<Index>(std::sqrt(static_cast<double>(flat.size())) + 0.5);
  if (d * d != flat.size())
    throw DimensionError("vecs_from_vec(): length is not a perfect square");
  Eigen::Vector<Scalar, Eigen::Dynamic> out(half_vec_size(d));
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) {
      const Scalar sym = (flat[j * d + i] + flat[i * d + j]) / Scalar(2);
      out[half_vec_index(i, j, d)] = (i == j) ? sym : Scalar(2) * sym;
    }
  return out;
}

/// How singular values are thresholded when deciding numerical rank.
struct RankTolerance {
  enum class Kind { kStandard, kAbsolute, kRelativeToMax };

  Kind kind = Kind::kStandard;
  double value = 0.0;

  static RankTolerance standard() { return {}; }
  static RankTolerance absolute(double t) { return {Kind::kAbsolute, t}; }
  static RankTolerance relative_to_max(double factor) { return {Kind::kRelativeToMax, factor}; }

  /// The absolute threshold for a matrix with the given largest singular
  /// value and shape.  kStandard uses sigma_max * max(rows, cols) * eps.
  double resolve(double sigma_max, Index rows, Index cols) const;
};

struct RankInfo {
  Index rank = 0;
  Eigen::VectorXd singular_values;  // descending
  double tolerance_used = 0.0;
};

/// Tolerance-controlled Moore-Penrose pseudoinverse via SVD.
struct PinvResult {
  Eigen::MatrixXd pseudoinverse;  // dims are the transpose of the input's
  Index numerical_rank = 0;
  Eigen::VectorXd singular_values;  // descending
  double tolerance_used = 0.0;
};

/// SVD-based pseudoinverse; singular values <= tolerance are treated as zero.
/// Throws DimensionError on an empty matrix.
PinvResult pinv_tol(const Eigen::Ref<const Eigen::MatrixXd>& m,
                    RankTolerance tol = RankTolerance::standard());

/// Numerical rank under the same thresholding policy as pinv_tol.
RankInfo numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m,
                        RankTolerance tol = RankTolerance::standard());

}  // namespace sensorsel
