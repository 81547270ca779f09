#include <gtest/gtest.h>

#include "net3/error.hpp"
#include "net3/training.hpp"
#include "model_fixtures.hpp"

using namespace net3;

TEST(Windows, CountFormulaAndBoundaries) {
  EXPECT_EQ(make_windows(10, 5, 1, 1).size(), 5u);
  EXPECT_EQ(make_windows(6, 5, 1, 1).size(), 1u);
  EXPECT_EQ(make_windows(10, 5, 1, 10).size(), 1u);
  EXPECT_EQ(make_windows(20, 3, 2, 4).size(), 4u);
  const auto w = make_windows(10, 5, 1, 2);
  EXPECT_EQ(w.back().start, 4u);
  EXPECT_EQ(w.back().first_target(), 9u);
  EXPECT_THROW(make_windows(5, 5, 1, 1), UsageError);
  EXPECT_THROW(make_windows(10, 0, 1, 1), UsageError);
}

TEST(Rmse, Basics) {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 3}, c{3, 4, 5};
  EXPECT_EQ(rmse(a, b), 0.0);
  EXPECT_DOUBLE_EQ(rmse(a, c), 2.0);
  const std::vector<std::uint8_t> m{1, 0, 1};
  const std::vector<double> d{1, 100, 3};
  EXPECT_EQ(rmse(d, b, m), 0.0);
  const std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_THROW(rmse(a, b, none), ValidationError);
}

TEST(BatchSize, AutomaticRule) {
  EXPECT_EQ(effective_batch_size(0, 400), 400u);
  EXPECT_EQ(effective_batch_size(0, 1000), 1000u);
  EXPECT_EQ(effective_batch_size(0, 1001), 32u);
  EXPECT_EQ(effective_batch_size(64, 10), 10u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto inst = net3::test::make_instance(Variant::net3, {2, 2}, 1, 1);
  Net3Params p = inst.params;
  AdamState s = AdamState::for_params(p);
  adam_step(p, zeros_like(p), s, AdamConfig{});
  std::vector<Matrix> a, b;
  for_each_block(p, [&a](const std::string&, const Matrix& m) { a.push_back(m); });
  for_each_block(inst.params, [&b](const std::string&, const Matrix& m) { b.push_back(m); });
  EXPECT_EQ(a, b);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto inst = net3::test::make_instance(Variant::net3, {2, 2}, 1, 2);
  Net3Params p = inst.params;
  Net3Params g = zeros_like(p);
  std::size_t k = 0;
  for_each_block(g, [&k](const std::string&, Matrix& m) {
    for (double& v : m.data()) v = (k++ % 2 == 0) ? 0.3 : -2.0;
  });
  AdamState s = AdamState::for_params(p);
  AdamConfig c;
  c.lr = 0.05;
  adam_step(p, g, s, c);
  std::vector<Matrix> before, after, grads;
  for_each_block(inst.params, [&before](const std::string&, const Matrix& m) { before.push_back(m); });
  for_each_block(p, [&after](const std::string&, const Matrix& m) { after.push_back(m); });
  for_each_block(g, [&grads](const std::string&, const Matrix& m) { grads.push_back(m); });
  for (std::size_t b = 0; b < before.size(); ++b)
    for (std::size_t i = 0; i < before[b].size(); ++i) {
      const double sign = grads[b].data()[i] > 0 ? 1.0 : -1.0;
      EXPECT_NEAR(after[b].data()[i] - before[b].data()[i], -c.lr * sign, 1e-8);
    }
}

TEST(Adam, ClipScalesGradient) {
  auto inst = net3::test::make_instance(Variant::net3, {2, 2}, 1, 3);
  Net3Params a = inst.params, b = inst.params;
  Net3Params g = zeros_like(a);
  for_each_block(g, [](const std::string&, Matrix& m) {
    for (double& v : m.data()) v = 5.0;
  });
  AdamState sa = AdamState::for_params(a), sb = AdamState::for_params(b);
  AdamConfig clipped;
  clipped.clip = 1e-3;
  adam_step(a, g, sa, AdamConfig{});
  adam_step(b, g, sb, clipped);
  // Adam is scale-invariant on the first step, so only the moments differ.
  EXPECT_NEAR(sa.m[0].data()[0], 0.5, 1e-12);
  EXPECT_LT(sb.m[0].data()[0], 1e-3);
}

TEST(Fit, DeterministicAndDecreasing) {
  std::vector<WindowSample> samples;
  auto base = net3::test::make_instance(Variant::net3, {3, 2}, 3, 4, 0.7);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 12; ++i) {
    WindowSample s = base.sample;
    for (auto& x : s.inputs) x = net3::test::random_tensor({3, 2}, rng, 0.5);
    s.target = 0.8 * s.inputs.back();
    samples.push_back(s);
  }
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 4;
  cfg.seed = 9;
  Net3Params p1 = base.params, p2 = base.params;
  const auto h1 = fit(samples, base.ctx, p1, cfg);
  const auto h2 = fit(samples, base.ctx, p2, cfg);
  ASSERT_EQ(h1.size(), 40u);
  EXPECT_LT(h1.back().train_loss, 0.5 * h1.front().train_loss);
  for (std::size_t i = 0; i < h1.size(); ++i) EXPECT_EQ(h1[i].train_loss, h2[i].train_loss);
  std::vector<Matrix> a, b;
  for_each_block(p1, [&a](const std::string&, const Matrix& m) { a.push_back(m); });
  for_each_block(p2, [&b](const std::string&, const Matrix& m) { b.push_back(m); });
  EXPECT_EQ(a, b);
}

TEST(Fit, LinearTeacherBeatsPersistence) {
  // S_{t+1} = α S_t on a random walk-free decaying sequence.
  auto base = net3::test::make_instance(Variant::net3, {2, 2}, 2, 6, 1.0, 4, 4);
  std::mt19937_64 rng(7);
  const double alpha = 0.5;
  std::vector<WindowSample> samples;
  double persistence = 0.0;
  for (int i = 0; i < 30; ++i) {
    WindowSample s = base.sample;
    s.inputs[0] = net3::test::random_tensor({2, 2}, rng);
    s.inputs[1] = alpha * s.inputs[0];
    s.target = alpha * s.inputs[1];
    for (std::size_t k = 0; k < 4; ++k) persistence += std::pow(s.inputs[1][k] - s.target[k], 2);
    samples.push_back(s);
  }
  persistence /= 30.0;
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 1;
  Net3Params p = base.params;
  const auto h = fit(samples, base.ctx, p, cfg);
  EXPECT_LT(h.back().train_loss, persistence);
}

TEST(Fit, ValidatorAndCallbackRunEveryEpoch) {
  auto base = net3::test::make_instance(Variant::lstm, {2, 2}, 2, 8);
  std::vector<WindowSample> samples{base.sample};
  TrainConfig cfg;
  cfg.epochs = 3;
  std::size_t calls = 0;
  Net3Params p = base.params;
  const auto h = fit(
      samples, base.ctx, p, cfg, [](const Net3Params&) { return std::optional<double>(1.5); },
      [&calls](const EpochRecord&) { ++calls; });
  EXPECT_EQ(calls, 3u);
  EXPECT_EQ(h[2].val_rmse.value(), 1.5);
  std::vector<WindowSample> empty;
  EXPECT_THROW(fit(empty, base.ctx, p, cfg), UsageError);
}
