#include <gtest/gtest.h>

#include <array>

#include "net3/error.hpp"
#include "net3/tensor.hpp"
#include "support.hpp"

using namespace net3;
using net3::test::random_matrix;
using net3::test::random_tensor;

TEST(ModeProduct, IdentityLeavesMatrixUnchanged) {
  const DenseTensor x({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(mode_product(x, Matrix::identity(2), 1), x);
}

TEST(ModeProduct, HandComputedTwoByTwo) {
  // rows [1,2] and [3,4] times [[1,1],[1,-1]] on the column mode
  const DenseTensor x({2, 2}, {1, 2, 3, 4});
  const Matrix u = Matrix::from_rows({{1, 1}, {1, -1}});
  const DenseTensor y = mode_product(x, u, 1);
  EXPECT_EQ(y, DenseTensor({2, 2}, {3, -1, 7, -1}));
  // same u on the row mode
  EXPECT_EQ(mode_product(x, u, 0), DenseTensor({2, 2}, {4, 6, -2, -2}));
}

TEST(ModeProduct, ZeroMatrixGivesZeroOfMappedShape) {
  std::mt19937_64 rng(1);
  const DenseTensor x = random_tensor({3, 4, 2}, rng);
  const DenseTensor y = mode_product(x, Matrix(4, 5), 1);
  EXPECT_EQ(y.shape(), (Shape{3, 5, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(ModeProduct, MatchesDirectSummationEveryMode) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape shape{2 + rng() % 3, 1 + rng() % 4, 2 + rng() % 2, 1 + rng() % 3};
    const DenseTensor x = random_tensor(shape, rng);
    for (std::size_t m = 0; m < shape.size(); ++m) {
      const Matrix u = random_matrix(shape[m], 1 + rng() % 4, rng);
      EXPECT_LE(max_abs_diff(mode_product(x, u, m), net3::test::naive_mode_product(x, u, m)), 1e-12);
    }
  }
}

TEST(ModeProduct, MatchesUnfoldFoldFormulation) {
  std::mt19937_64 rng(3);
  const DenseTensor x = random_tensor({3, 4, 2}, rng);
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix u = random_matrix(x.dim(m), 5, rng);
    Shape shape = x.shape();
    shape[m] = 5;
    const DenseTensor via_unfold = fold(matmul(transpose(u), unfold(x, m)), shape, m);
    EXPECT_LE(max_abs_diff(mode_product(x, u, m), via_unfold), 1e-12);
  }
}

TEST(ModeProduct, RejectsMismatchedRows) {
  EXPECT_THROW(mode_product(DenseTensor({2, 3}), Matrix(2, 2), 1), ShapeError);
  EXPECT_THROW(mode_product(DenseTensor({2, 3}), Matrix(2, 2), 2), UsageError);
}

TEST(ModeGram, EqualsUnfoldProduct) {
  std::mt19937_64 rng(4);
  const DenseTensor x = random_tensor({3, 2, 4}, rng);
  for (std::size_t m = 0; m < 3; ++m) {
    Shape ys = x.shape();
    ys[m] = 5;
    const DenseTensor y = random_tensor(ys, rng);
    EXPECT_LE(max_abs_diff(mode_gram(x, y, m), matmul(unfold(x, m), transpose(unfold(y, m)))), 1e-12);
  }
}

TEST(MultiModeProduct, DistinctModesCommute) {
  std::mt19937_64 rng(5);
  const DenseTensor x = random_tensor({3, 4, 2}, rng);
  const Matrix u1 = random_matrix(3, 3, rng);
  const Matrix u2 = random_matrix(4, 2, rng);
  const std::array<ModeFactor, 2> ab{ModeFactor{0, u1}, ModeFactor{1, u2}};
  const std::array<ModeFactor, 2> ba{ModeFactor{1, u2}, ModeFactor{0, u1}};
  EXPECT_LE(max_abs_diff(multi_mode_product(x, ab), multi_mode_product(x, ba)), 1e-12);
}

TEST(MultiModeProduct, IdentityFactorsAndSingleFactor) {
  std::mt19937_64 rng(6);
  const DenseTensor x = random_tensor({2, 3}, rng);
  const std::array<ModeFactor, 2> ids{ModeFactor{0, Matrix::identity(2)}, ModeFactor{1, Matrix::identity(3)}};
  EXPECT_EQ(multi_mode_product(x, ids), x);
  const Matrix u = random_matrix(3, 4, rng);
  const std::array<ModeFactor, 1> one{ModeFactor{1, u}};
  EXPECT_EQ(multi_mode_product(x, one), mode_product(x, u, 1));
}

TEST(MultiModeProduct, RejectsRepeatedMode) {
  const std::array<ModeFactor, 2> twice{ModeFactor{0, Matrix::identity(2)}, ModeFactor{0, Matrix::identity(2)}};
  EXPECT_THROW(multi_mode_product(DenseTensor({2, 2}), twice), UsageError);
}

TEST(Unfold, OrderTwoIsTheMatrixItself) {
  const DenseTensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  const Matrix m = unfold(x, 0);
  EXPECT_EQ(m, Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
}

TEST(Unfold, RoundTripEveryModeAndRowCount) {
  std::mt19937_64 rng(7);
  const DenseTensor x = random_tensor({2, 3, 4}, rng);
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix u = unfold(x, m);
    EXPECT_EQ(u.rows(), x.dim(m));
    EXPECT_EQ(fold(u, x.shape(), m), x);
  }
}

TEST(Kronecker, IdentityTimesIdentity) { EXPECT_EQ(kronecker(Matrix::identity(2), Matrix::identity(3)), Matrix::identity(6)); }

TEST(Kronecker, SwapBlockExpansion) {
  const Matrix swap = Matrix::from_rows({{0, 1}, {1, 0}});
  const Matrix expect = Matrix::from_rows({{0, 0, 1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {0, 1, 0, 0}});
  EXPECT_EQ(kronecker(swap, Matrix::identity(2)), expect);
}

TEST(Kronecker, MatchesNaiveExpansion) {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(2, 3, rng);
  const Matrix b = random_matrix(4, 2, rng);
  EXPECT_EQ(kronecker(a, b), net3::test::naive_kron(a, b));
}

TEST(Kronecker, VectorizationIdentity) {
  std::mt19937_64 rng(9);
  const DenseTensor x = random_tensor({2, 3}, rng);
  const Matrix a1 = random_matrix(2, 2, rng);
  const Matrix a2 = random_matrix(3, 3, rng);
  const std::array<ModeFactor, 2> f{ModeFactor{0, a1}, ModeFactor{1, a2}};
  const auto lhs = vectorize(multi_mode_product(x, f));
  const auto rhs = net3::test::matvec(net3::test::naive_kron(transpose(a2), transpose(a1)), net3::test::naive_vec(x));
  EXPECT_LE(net3::test::max_abs(lhs, rhs), 1e-12);
}

TEST(Vectorize, FirstModeFastestAndInverse) {
  const DenseTensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(vectorize(x), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  std::mt19937_64 rng(10);
  const DenseTensor y = random_tensor({3, 2, 2}, rng);
  EXPECT_EQ(unvectorize(vectorize(y), y.shape()), y);
  EXPECT_EQ(vectorize(y), net3::test::naive_vec(y));
}

TEST(Hosvd, FullRankReconstructs) {
  std::mt19937_64 rng(11);
  const DenseTensor x = random_tensor({3, 4, 2}, rng);
  const std::array<std::size_t, 3> ranks{3, 4, 2};
  EXPECT_LE(max_abs_diff(hosvd(x, ranks).reconstruct(), x), 1e-8);
}

TEST(Hosvd, RankOneOuterProductIsExact) {
  const std::vector<double> a{1, -2, 0.5}, b{3, 1}, c{2, -1, 1, 4};
  DenseTensor x({3, 2, 4});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 4; ++k) x[(i * 2 + j) * 4 + k] = a[i] * b[j] * c[k];
  const std::array<std::size_t, 3> ranks{1, 1, 1};
  EXPECT_LE(max_abs_diff(hosvd(x, ranks).reconstruct(), x), 1e-10);
}

TEST(Hosvd, MatchesPerModeProjectionOracle) {
  // Oracle: project each mode onto the leading eigenvectors of X_(m) X_(m)ᵀ.
  std::mt19937_64 rng(12);
  const DenseTensor x = random_tensor({4, 4, 4}, rng);
  const std::array<std::size_t, 3> ranks{2, 2, 2};
  const HosvdResult h = hosvd(x, ranks);
  DenseTensor oracle = x;
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix g = mode_gram(x, x, m);
    // power iteration with deflation for the top-2 eigenvectors
    Matrix basis(4, 2);
    Matrix work = g;
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> v{1.0, 0.7, -0.3, 0.2};
      for (int it = 0; it < 5000; ++it) {
        std::vector<double> w(4, 0.0);
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t j = 0; j < 4; ++j) w[i] += work(i, j) * v[j];
        double n = 0.0;
        for (double e : w) n += e * e;
        n = std::sqrt(n);
        for (std::size_t i = 0; i < 4; ++i) v[i] = w[i] / n;
      }
      double lambda = 0.0;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) lambda += v[i] * work(i, j) * v[j];
      for (std::size_t i = 0; i < 4; ++i) {
        basis(i, k) = v[i];
        for (std::size_t j = 0; j < 4; ++j) work(i, j) -= lambda * v[i] * v[j];
      }
    }
    oracle = mode_product(oracle, matmul(basis, transpose(basis)), m);
  }
  const double err_lib = frobenius_norm(h.reconstruct() - x);
  const double err_oracle = frobenius_norm(oracle - x);
  EXPECT_NEAR(err_lib, err_oracle, 1e-8);
  for (const Matrix& u : h.factors) EXPECT_LE(max_abs_diff(matmul(transpose(u), u), Matrix::identity(2)), 1e-10);
}

TEST(Norms, FrobeniusBasics) {
  EXPECT_EQ(frobenius_norm(DenseTensor({3, 2})), 0.0);
  EXPECT_EQ(frobenius_norm(DenseTensor({1, 2}, {3, 4})), 5.0);
}

TEST(ConcatLast, FeaturesAreOrdered) {
  const DenseTensor a({2, 2}, {1, 2, 3, 4});
  const DenseTensor b({2, 3}, {5, 6, 7, 8, 9, 10});
  const DenseTensor c = concat_last(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 5}));
  EXPECT_EQ(c, DenseTensor({2, 5}, {1, 2, 5, 6, 7, 3, 4, 8, 9, 10}));
  EXPECT_THROW(concat_last(a, DenseTensor({3, 1})), ShapeError);
}

TEST(DenseTensor, ReshapeKeepsDataAndChecksSize) {
  const DenseTensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(x.reshaped({3, 2}).values(), x.values());
  EXPECT_THROW(x.reshaped({4, 2}), ShapeError);
}
