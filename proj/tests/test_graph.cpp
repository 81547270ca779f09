#include <gtest/gtest.h>

#include <array>
#include <filesystem>

#include "net3/error.hpp"
#include "net3/graph.hpp"
#include "support.hpp"

using namespace net3;

TEST(SymmetricNormalize, IdentityAndSwap) {
  EXPECT_EQ(symmetric_normalize(Matrix::identity(3)), Matrix::identity(3));
  const Matrix swap = Matrix::from_rows({{0, 1}, {1, 0}});
  EXPECT_EQ(symmetric_normalize(swap), swap);
}

TEST(SymmetricNormalize, PathGraph) {
  const Matrix path = Matrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const Matrix n = symmetric_normalize(path);
  EXPECT_NEAR(n(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(n(1, 2), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(n(0, 2), 0.0);
  EXPECT_EQ(n(1, 1), 0.0);
}

TEST(SymmetricNormalize, IsolatedNodeGetsZeroRow) {
  const Matrix a = Matrix::from_rows({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}});
  const Matrix n = symmetric_normalize(a);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(n(2, j), 0.0);
    EXPECT_EQ(n(j, 2), 0.0);
  }
}

TEST(Laplacian, IdentityAndSwap) {
  EXPECT_EQ(laplacian(Matrix::identity(3)), Matrix(3, 3));
  EXPECT_EQ(laplacian(Matrix::from_rows({{0, 1}, {1, 0}})), Matrix::from_rows({{1, -1}, {-1, 1}}));
}

TEST(Laplacian, SpectrumWithinZeroTwo) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = trial == 0 ? Matrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}})
                                : net3::test::random_adjacency(2 + rng() % 7, rng);
    for (double l : SpectralOracle::of(laplacian(a)).eigvals) {
      EXPECT_GE(l, -1e-12);
      EXPECT_LE(l, 2.0 + 1e-12);
    }
  }
}

TEST(Pearson, IdenticalNegatedAndConstant) {
  const Matrix s = Matrix::from_rows({{1, 2, 4, 3}, {1, 2, 4, 3}, {-1, -2, -4, -3}, {5, 5, 5, 5}});
  const Matrix a = pearson_adjacency(s);
  EXPECT_NEAR(a(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(a(0, 2), 0.0, 1e-12);
  EXPECT_EQ(a(0, 3), 0.5);
  EXPECT_EQ(a(3, 2), 0.5);
  EXPECT_TRUE(is_symmetric(a, 0.0));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a(i, i), 1.0);
}

TEST(Pearson, EntriesInUnitInterval) {
  std::mt19937_64 rng(2);
  const Matrix a = pearson_adjacency(net3::test::random_matrix(6, 20, rng));
  for (double v : a.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_NO_THROW(validate_adjacency(a));
}

TEST(FlattenKronecker, AllIdentity) {
  const std::array<ModeNetwork, 2> nets{ModeNetwork::identity(3), ModeNetwork::identity(2)};
  EXPECT_EQ(flatten_kronecker(nets), Matrix::identity(6));
}

TEST(FlattenKronecker, HandExpansionTwoModes) {
  const Matrix a1 = Matrix::from_rows({{0, 1}, {1, 0}});
  const Matrix a2 = Matrix::from_rows({{1, 2}, {2, 0}});
  const std::array<ModeNetwork, 2> nets{ModeNetwork::from_adjacency(a1), ModeNetwork::from_adjacency(a2)};
  // A2 ⊗ A1 written out block by block
  const Matrix expect = Matrix::from_rows({{0, 1, 0, 2}, {1, 0, 2, 0}, {0, 2, 0, 0}, {2, 0, 0, 0}});
  EXPECT_EQ(flatten_kronecker(nets), expect);
}

TEST(FlattenKronecker, MatchesModeProductsOnVectorization) {
  std::mt19937_64 rng(3);
  const Matrix a1 = net3::test::random_adjacency(3, rng);
  const Matrix a2 = net3::test::random_adjacency(4, rng);
  const std::array<ModeNetwork, 2> nets{ModeNetwork::from_adjacency(a1), ModeNetwork::from_adjacency(a2)};
  const DenseTensor x = net3::test::random_tensor({3, 4}, rng);
  const auto lhs = vectorize(mode_product(mode_product(x, a1, 0), a2, 1));
  const auto rhs = net3::test::matvec(flatten_kronecker(nets), net3::test::naive_vec(x));
  EXPECT_LE(net3::test::max_abs(lhs, rhs), 1e-12);
}

TEST(Chebyshev, LowOrders) {
  std::mt19937_64 rng(4);
  const Matrix l = rescaled_laplacian(net3::test::random_adjacency(4, rng), 2.0);
  EXPECT_EQ(chebyshev_matrix_poly(l, 0), Matrix::identity(4));
  EXPECT_EQ(chebyshev_matrix_poly(l, 1), l);
  EXPECT_EQ(chebyshev(3, 0.5), 4 * 0.125 - 3 * 0.5);
}

TEST(Chebyshev, MatrixPolyMatchesEigenOracle) {
  std::mt19937_64 rng(5);
  const Matrix a = net3::test::random_adjacency(4, rng);
  const Matrix lap = laplacian(a);
  const SpectralOracle spec = SpectralOracle::of(lap);
  const Matrix lt = rescaled_laplacian(a, spec.lambda_max);
  const SpectralOracle spec_t = SpectralOracle::of(lt);
  const Matrix oracle = spec_t.apply([](double x) { return 4 * x * x * x - 3 * x; });
  EXPECT_LE(max_abs_diff(chebyshev_matrix_poly(lt, 3), oracle), 1e-8);
}

TEST(SpectralOracle, ReconstructsMatrix) {
  std::mt19937_64 rng(6);
  const Matrix lap = laplacian(net3::test::random_adjacency(6, rng));
  const SpectralOracle s = SpectralOracle::of(lap);
  EXPECT_LE(max_abs_diff(s.apply([](double x) { return x; }), lap), 1e-10);
}

TEST(ModeNetwork, RejectsBadAdjacency) {
  EXPECT_THROW(ModeNetwork::from_adjacency(Matrix::from_rows({{0, 1}, {0, 0}})), ValidationError);
  EXPECT_THROW(ModeNetwork::from_adjacency(Matrix::from_rows({{0, -1}, {-1, 0}})), ValidationError);
  EXPECT_THROW(ModeNetwork::from_adjacency(Matrix(2, 3)), ValidationError);
}

TEST(AdjacencyCsv, RoundTrip) {
  std::mt19937_64 rng(7);
  const Matrix a = net3::test::random_adjacency(5, rng);
  const auto path = std::filesystem::temp_directory_path() / "net3_adj_roundtrip.csv";
  write_adjacency_csv(path, a);
  EXPECT_EQ(read_adjacency_csv(path), a);
  std::filesystem::remove(path);
}
