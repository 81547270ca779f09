#include <gtest/gtest.h>

#include <array>

#include "net3/error.hpp"
#include "net3/trnn.hpp"
#include "support.hpp"

using namespace net3;
using net3::test::random_matrix;
using net3::test::random_tensor;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

FactorSet identity_factors(const Shape& dims) {
  FactorSet f;
  for (std::size_t n : dims) f.factors.push_back(Matrix::identity(n));
  return f;
}

}  // namespace

TEST(CoreDims, CeilingAndClamp) {
  const std::array<std::size_t, 2> revenue{410, 3}, motes{54, 4};
  EXPECT_EQ(core_dims(0.2, revenue), (std::vector<std::size_t>{82, 1}));
  EXPECT_EQ(core_dims(0.8, motes), (std::vector<std::size_t>{44, 4}));
  EXPECT_EQ(core_dims(1.0, motes), (std::vector<std::size_t>{54, 4}));
  EXPECT_EQ(core_dims(3.0, motes), (std::vector<std::size_t>{54, 4}));
  EXPECT_EQ(core_dims(0.0, motes), (std::vector<std::size_t>{1, 1}));
  EXPECT_THROW(core_dims(-0.1, motes), UsageError);
}

TEST(OrthonormalInit, SquareAndRectangular) {
  const Matrix sq = orthonormal_init(5, 5, 3);
  EXPECT_LE(max_abs_diff(matmul(sq, transpose(sq)), Matrix::identity(5)), 1e-10);
  const Matrix u = orthonormal_init(3, 7, 4);
  EXPECT_EQ(u.rows(), 3u);
  EXPECT_EQ(u.cols(), 7u);
  EXPECT_LT(orthonormality_residual(u), 1e-10);
  EXPECT_EQ(orthonormal_init(3, 7, 4), u);
  EXPECT_THROW(orthonormal_init(8, 7, 4), UsageError);
}

TEST(Reduce, IdentityFactorsLeaveTensorUnchanged) {
  std::mt19937_64 rng(1);
  const DenseTensor h = random_tensor({3, 4, 2}, rng);
  const FactorSet f = identity_factors({3, 4});
  EXPECT_EQ(reduce(h, f), h);
  EXPECT_EQ(reconstruct(h, f), h);
}

TEST(Reduce, FullRankOrthonormalRoundTrip) {
  std::mt19937_64 rng(2);
  const DenseTensor h = random_tensor({3, 4, 2}, rng);
  FactorSet f;
  f.factors = {orthonormal_init(3, 3, 5), orthonormal_init(4, 4, 6)};
  EXPECT_LE(max_abs_diff(reconstruct(reduce(h, f), f), h), 1e-8);
}

TEST(Reduce, TensorInFactorSpanRoundTrips) {
  std::mt19937_64 rng(3);
  FactorSet f;
  f.factors = {orthonormal_init(2, 5, 7), orthonormal_init(1, 3, 8)};
  const DenseTensor z = random_tensor({2, 1, 3}, rng);
  const DenseTensor h = reconstruct(z, f);
  EXPECT_EQ(h.shape(), (Shape{5, 3, 3}));
  EXPECT_LE(max_abs_diff(reduce(h, f), z), 1e-12);
  EXPECT_LE(max_abs_diff(reconstruct(reduce(h, f), f), h), 1e-12);
}

TEST(Reduce, ZeroMapsToZero) {
  FactorSet f;
  f.factors = {orthonormal_init(2, 4, 1)};
  const DenseTensor r = reconstruct(DenseTensor({2, 3}), f);
  EXPECT_EQ(r, DenseTensor({4, 3}));
}

TEST(Tll, IdentityWeightsAndBias) {
  std::mt19937_64 rng(4);
  const DenseTensor x = random_tensor({2, 3, 2}, rng);
  const std::vector<Matrix> ids{Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)};
  EXPECT_EQ(tll_forward(x, ids, Matrix(1, 2)), x);
  const Matrix b = Matrix::from_rows({{0.5, -1.0}});
  const DenseTensor y = tll_forward(x, ids, b);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(y[2 * i], x[2 * i] + 0.5);
    EXPECT_EQ(y[2 * i + 1], x[2 * i + 1] - 1.0);
  }
}

TEST(Tll, EqualsNestedModeProducts) {
  std::mt19937_64 rng(5);
  const DenseTensor x = random_tensor({2, 2, 3}, rng);
  const std::vector<Matrix> w{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(3, 4, rng)};
  const Matrix b = random_matrix(1, 4, rng);
  using net3::test::naive_mode_product;
  DenseTensor expect = naive_mode_product(naive_mode_product(naive_mode_product(x, w[0], 0), w[1], 1), w[2], 2);
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += b(0, i % 4);
  EXPECT_LE(max_abs_diff(tll_forward(x, w, b), expect), 1e-12);
}

TEST(Tlstm, ZeroWeightsGiveQuarter) {
  std::mt19937_64 rng(6);
  const std::array<std::size_t, 2> cores{2, 3};
  TlstmParams p = init_tlstm(cores, 2, 3, rng);
  for (auto& g : p.gates) {
    for (auto& m : g.input) m = Matrix(m.rows(), m.cols());
    for (auto& m : g.state) m = Matrix(m.rows(), m.cols());
    g.bias = Matrix(g.bias.rows(), g.bias.cols());
  }
  const TlstmState s = tlstm_step(random_tensor({2, 3, 2}, rng), TlstmState::zeros({2, 3, 3}), p);
  for (double v : s.c.data()) EXPECT_EQ(v, 0.0);
  for (double v : s.y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Tlstm, SaturatedGatesPassMemoryThrough) {
  std::mt19937_64 rng(7);
  const std::array<std::size_t, 1> cores{3};
  TlstmParams p = init_tlstm(cores, 2, 2, rng);
  p.gates[kForget].bias = Matrix(1, 2, 40.0);
  p.gates[kInput].bias = Matrix(1, 2, -40.0);
  TlstmState prev{random_tensor({3, 2}, rng, 0.1), random_tensor({3, 2}, rng)};
  const TlstmState s = tlstm_step(random_tensor({3, 2}, rng, 0.1), prev, p);
  EXPECT_LE(max_abs_diff(s.c, prev.c), 1e-6);
}

TEST(Tlstm, MatchesScalarRecomputation) {
  std::mt19937_64 rng(8);
  const std::array<std::size_t, 2> cores{2, 2};
  TlstmParams p = init_tlstm(cores, 3, 2, rng);
  for (auto& g : p.gates) g.bias = random_matrix(1, 2, rng);
  const DenseTensor z = random_tensor({2, 2, 3}, rng);
  const TlstmState prev{random_tensor({2, 2, 2}, rng), random_tensor({2, 2, 2}, rng)};
  std::array<DenseTensor, 4> pre;
  for (std::size_t g = 0; g < 4; ++g)
    pre[g] = tll_forward(z, p.gates[g].input, Matrix(1, 2)) + tll_forward(prev.y, p.gates[g].state, p.gates[g].bias);
  const TlstmState s = tlstm_step(z, prev, p);
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    const double f = sig(pre[kForget][i]), in = sig(pre[kInput][i]), o = sig(pre[kOutput][i]);
    const double cand = std::tanh(pre[kCandidate][i]);
    const double c = f * prev.c[i] + in * cand;
    EXPECT_NEAR(s.c[i], c, 1e-12);
    EXPECT_NEAR(s.y[i], o * sig(c), 1e-12);
  }
  p.cell_output = CellOutput::tanh;
  const TlstmState t = tlstm_step(z, prev, p);
  for (std::size_t i = 0; i < t.c.size(); ++i) EXPECT_NEAR(t.y[i], sig(pre[kOutput][i]) * std::tanh(t.c[i]), 1e-12);
}

TEST(Tlstm, InitShapesAndForgetBias) {
  std::mt19937_64 rng(9);
  const std::array<std::size_t, 2> cores{4, 2};
  const TlstmParams p = init_tlstm(cores, 3, 5, rng);
  for (std::size_t g = 0; g < 4; ++g) {
    ASSERT_EQ(p.gates[g].input.size(), 3u);
    EXPECT_EQ(p.gates[g].input[0].rows(), 4u);
    EXPECT_EQ(p.gates[g].input[0].cols(), 4u);
    EXPECT_EQ(p.gates[g].input[1].rows(), 2u);
    EXPECT_EQ(p.gates[g].input[2].rows(), 3u);
    EXPECT_EQ(p.gates[g].input[2].cols(), 5u);
    EXPECT_EQ(p.gates[g].state[2].rows(), 5u);
    for (double b : p.gates[g].bias.data()) EXPECT_EQ(b, g == kForget ? 1.0 : 0.0);
  }
  // 4 d'(d + d' + 1) + 8 Σ N'²
  EXPECT_EQ(p.parameter_count(), 4u * 5u * 9u + 8u * (16u + 4u));
}

TEST(NodeLstm, IdenticalRowsMatchSharedLstm) {
  std::mt19937_64 rng(10);
  const SharedLstmParams shared = init_shared_lstm(2, 3, rng);
  NodeLstmParams node = init_node_lstm(4, 2, 3, rng);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < 3; ++j) node.gates[g].input(i, k * 3 + j) = shared.gates[g].input(k, j);
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 3; ++j) node.gates[g].state(i, k * 3 + j) = shared.gates[g].state(k, j);
      for (std::size_t j = 0; j < 3; ++j) node.gates[g].bias(i, j) = shared.gates[g].bias(0, j);
    }
  const Matrix x = random_matrix(4, 2, rng);
  const TlstmState prev{random_tensor({4, 3}, rng), random_tensor({4, 3}, rng)};
  const TlstmState a = node_lstm_step(x, prev, node);
  const TlstmState b = shared_lstm_step(x, prev, shared);
  EXPECT_LE(max_abs_diff(a.y, b.y), 1e-12);
  EXPECT_LE(max_abs_diff(a.c, b.c), 1e-12);
  EXPECT_EQ(node.parameter_count(), 4u * 3u * (2u + 3u + 1u) * 4u);
}

TEST(ParamCounts, PublishedTable) {
  const std::array<std::size_t, 2> motes{54, 4}, revenue{410, 3}, traffic{1000, 2};
  EXPECT_EQ(count_params_tlstm(motes, 0.8, 8, 8), 18552u);
  EXPECT_EQ(count_params_mlstm(motes, 8, 8), 117504u);
  EXPECT_EQ(count_params_tlstm(revenue, 0.2, 8, 8), 87967u);
  EXPECT_EQ(count_params_mlstm(revenue, 8, 8), 669120u);
  EXPECT_EQ(count_params_tlstm(traffic, 0.1, 8, 8), 180554u);
  EXPECT_EQ(count_params_mlstm(traffic, 8, 8), 1088000u);
}

TEST(ParamCounts, MatchesInstantiatedModules) {
  std::mt19937_64 rng(11);
  const std::array<std::size_t, 2> dims{6, 4};
  const auto cores = core_dims(0.5, dims);
  const TlstmParams cell = init_tlstm(cores, 3, 2, rng);
  const FactorSet f = init_factors(dims, cores, 1);
  EXPECT_EQ(cell.parameter_count() + f.parameter_count(), count_params_tlstm(dims, 0.5, 3, 2));
  EXPECT_EQ(init_node_lstm(24, 3, 2, rng).parameter_count(), count_params_mlstm(dims, 3, 2));
}

TEST(RhoBound, PublishedValues) {
  const std::array<std::size_t, 2> motes{54, 4}, revenue{410, 3}, traffic{1000, 2};
  EXPECT_NEAR(rho_upper_bound(motes, 8, 8), 2.17, 0.005);
  EXPECT_NEAR(rho_upper_bound(traffic, 8, 8), 0.31, 0.005);
  // The formula gives 0.64534; the published 0.64 is a truncation.
  EXPECT_NEAR(rho_upper_bound(revenue, 8, 8), 0.64534, 1e-5);
}

TEST(RhoBound, CountsCrossAtTheBound) {
  // At ρ = ρ_max with exact (unrounded) core sizes the two counts agree.
  const std::array<std::size_t, 3> dims{30, 20, 6};
  const double r = rho_upper_bound(dims, 4, 5);
  double sum_sq = 0.0, sum_lin = 0.0, prod = 1.0;
  for (std::size_t n : dims) {
    sum_sq += static_cast<double>(n * n);
    prod *= static_cast<double>(n);
  }
  sum_lin = sum_sq;
  const double lstm = 4.0 * 5.0 * 10.0;
  const double tlstm = lstm + 8.0 * r * r * sum_sq + r * sum_lin;
  EXPECT_NEAR(tlstm, lstm * prod, 1e-6 * lstm * prod);
}
