#include <doctest.h>

#include <random>

#include "sensorsel/tensor_ops.hpp"
#include "support.hpp"

using namespace sensorsel;
using test_support::random_matrix;
using test_support::random_symmetric;
using test_support::random_vector;

TEST_CASE("kron: identity factor and forced small cases") {
  std::mt19937_64 rng(1);
  const MatrixXd m = random_matrix(rng, 3, 2);
  CHECK((kron(MatrixXd::Identity(1, 1), m) - m).norm() == 0.0);

  Eigen::Vector2d a(1.0, 2.0), b(3.0, 4.0);
  const MatrixXd k = kron(a, b);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 1);
  CHECK(k(0, 0) == 3.0);
  CHECK(k(1, 0) == 4.0);
  CHECK(k(2, 0) == 6.0);
  CHECK(k(3, 0) == 8.0);
}

TEST_CASE("kron matches the entrywise definition on random input") {
  std::mt19937_64 rng(2);
  const MatrixXd a = random_matrix(rng, 3, 2);
  const MatrixXd b = random_matrix(rng, 2, 2);
  const MatrixXd k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 4);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index s = 0; s < b.rows(); ++s)
        for (Index t = 0; t < b.cols(); ++t)
          CHECK(k(i * b.rows() + s, j * b.cols() + t) == a(i, j) * b(s, t));
}

TEST_CASE("vec stacks columns; unvec inverts it") {
  MatrixXd m(2, 2);
  m << 1, 3, 2, 4;
  const VectorXd v = vec(m);
  REQUIRE(v.size() == 4);
  CHECK(v[0] == 1);
  CHECK(v[1] == 2);
  CHECK(v[2] == 3);
  CHECK(v[3] == 4);

  CHECK(vec(MatrixXd::Zero(2, 2)).norm() == 0.0);

  std::mt19937_64 rng(3);
  const MatrixXd r = random_matrix(rng, 4, 3);
  CHECK((unvec(vec(r), 4, 3) - r).norm() == 0.0);

  CHECK_THROWS_AS(unvec(v, 3, 2), DimensionError);
}

TEST_CASE("vech and vecs on a 2x2 symmetric matrix") {
  MatrixXd m(2, 2);
  m << 5.0, -1.5, -1.5, 2.0;
  const SymMatrix s = SymMatrix::from_dense(m);

  const VectorXd h = vech(s);
  REQUIRE(h.size() == 3);
  CHECK(h[0] == 5.0);
  CHECK(h[1] == -1.5);
  CHECK(h[2] == 2.0);

  const VectorXd sc = vecs(s);
  CHECK(sc[0] == 5.0);
  CHECK(sc[1] == -3.0);
  CHECK(sc[2] == 2.0);

  // Dense overloads read the lower triangle.
  CHECK((vech(m) - h).norm() == 0.0);
  CHECK((vecs(m) - sc).norm() == 0.0);
}

TEST_CASE("unvecs inverts vecs; unvech inverts vech") {
  std::mt19937_64 rng(4);
  for (Index d : {1, 2, 5}) {
    const SymMatrix s = random_symmetric(rng, d);
    CHECK((unvecs(vecs(s)).dense() - s.dense()).norm() == 0.0);
    CHECK((unvech(vech(s)).dense() - s.dense()).norm() == 0.0);
  }
  VectorXd bad(4);
  bad.setZero();
  CHECK_THROWS_AS(unvecs(bad), DimensionError);
  CHECK_THROWS_AS(unvech(bad), DimensionError);
}

TEST_CASE("vecs_from_vec on forced inputs") {
  Eigen::Vector4d zz(1.0, 2.0, 2.0, 4.0);  // z = [1, 2], z (x) z
  const VectorXd h = vecs_from_vec(zz);
  REQUIRE(h.size() == 3);
  CHECK(h[0] == 1.0);
  CHECK(h[1] == 4.0);
  CHECK(h[2] == 4.0);

  const VectorXd id = vecs_from_vec(vec(MatrixXd::Identity(2, 2)));
  CHECK(id[0] == 1.0);
  CHECK(id[1] == 0.0);
  CHECK(id[2] == 1.0);

  VectorXd bad(5);
  bad.setZero();
  CHECK_THROWS_AS(vecs_from_vec(bad), DimensionError);
}

TEST_CASE("vecs_from_vec(z (x) z) pairs with vech(W) as the quadratic form") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 1 + static_cast<Index>(rng() % 8);
    const VectorXd z = random_vector(rng, d);
    const SymMatrix w = random_symmetric(rng, d);
    const double via_packed = vecs_from_vec(kron(z, z)).dot(vech(w));
    const double direct = z.dot(w.dense() * z);
    CHECK(std::abs(via_packed - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("half_vec index map round-trips") {
  CHECK(half_vec_size(4) == 10);
  CHECK(half_vec_dim(10) == 4);
  CHECK_THROWS_AS(half_vec_dim(11), DimensionError);
  // Column-major lower-triangular order: (0,0),(1,0),(2,0),(1,1),(2,1),(2,2).
  CHECK(half_vec_index(0, 0, 3) == 0);
  CHECK(half_vec_index(2, 0, 3) == 2);
  CHECK(half_vec_index(1, 1, 3) == 3);
  CHECK(half_vec_index(2, 2, 3) == 5);
}

TEST_CASE("SymMatrix storage shares cells across the diagonal") {
  SymMatrix s(3);
  s.entry(2, 0) = 7.0;
  CHECK(s(0, 2) == 7.0);
  s.entry(0, 2) = -1.0;
  CHECK(s(2, 0) == -1.0);
  CHECK(s.trace() == 0.0);

  const SymMatrix i3 = SymMatrix::identity(3);
  CHECK(i3.trace() == 3.0);
  CHECK((i3.dense() - MatrixXd::Identity(3, 3)).norm() == 0.0);

  std::mt19937_64 rng(6);
  const SymMatrix r = random_symmetric(rng, 4);
  const SymMatrix block = r.top_left(2);
  CHECK(block(0, 1) == r(0, 1));
  CHECK(block(1, 1) == r(1, 1));

  CHECK_THROWS_AS(SymMatrix(0), DimensionError);
  CHECK_THROWS_AS(r.top_left(5), DimensionError);
}

TEST_CASE("pinv_tol on diagonal and identity matrices") {
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  const PinvResult r = pinv_tol(d);
  CHECK(r.numerical_rank == 1);
  CHECK(r.pseudoinverse(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(r.pseudoinverse(1, 1)) == 0.0);

  const PinvResult ri = pinv_tol(MatrixXd::Identity(3, 3));
  CHECK(ri.numerical_rank == 3);
  CHECK((ri.pseudoinverse - MatrixXd::Identity(3, 3)).norm() <= 1e-14);
}

TEST_CASE("pinv_tol satisfies the four Penrose conditions") {
  std::mt19937_64 rng(7);
  // Rank-2 factor product, deliberately rank deficient.
  const MatrixXd m = random_matrix(rng, 6, 2) * random_matrix(rng, 2, 4);
  const PinvResult r = pinv_tol(m);
  CHECK(r.numerical_rank == 2);
  const MatrixXd& pi = r.pseudoinverse;
  REQUIRE(pi.rows() == 4);
  REQUIRE(pi.cols() == 6);
  const double scale = m.norm();
  CHECK((m * pi * m - m).norm() <= 1e-10 * scale);
  CHECK((pi * m * pi - pi).norm() <= 1e-9 * pi.norm());
  CHECK(((m * pi).transpose() - m * pi).norm() <= 1e-9);
  CHECK(((pi * m).transpose() - pi * m).norm() <= 1e-9);
}

TEST_CASE("pinv_tol rank bookkeeping and tolerance policies") {
  std::mt19937_64 rng(8);
  const MatrixXd m = random_matrix(rng, 5, 3);
  const PinvResult r = pinv_tol(m);
  Index above = 0;
  for (Index i = 0; i < r.singular_values.size(); ++i) {
    if (r.singular_values[i] > r.tolerance_used) ++above;
    if (i > 0) CHECK(r.singular_values[i] <= r.singular_values[i - 1]);
  }
  CHECK(above == r.numerical_rank);

  const PinvResult crushed = pinv_tol(m, RankTolerance::absolute(1e9));
  CHECK(crushed.numerical_rank == 0);
  CHECK(crushed.pseudoinverse.norm() == 0.0);

  const PinvResult rel = pinv_tol(m, RankTolerance::relative_to_max(2.0));
  CHECK(rel.numerical_rank == 0);

  CHECK_THROWS_AS(pinv_tol(MatrixXd(0, 0)), DimensionError);
}

TEST_CASE("numerical_rank agrees with pinv_tol") {
  std::mt19937_64 rng(9);
  const MatrixXd m = random_matrix(rng, 7, 3) * random_matrix(rng, 3, 7);
  CHECK(numerical_rank(m).rank == pinv_tol(m).numerical_rank);
  CHECK(numerical_rank(MatrixXd::Zero(3, 3)).rank == 0);
}
