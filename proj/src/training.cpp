#include "net3/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "net3/error.hpp"

namespace net3 {

std::vector<Window> make_windows(std::size_t t, std::size_t omega, std::size_t tau, std::size_t stride) {
  if (omega == 0 || tau == 0) throw UsageError("make_windows: omega and tau must be at least 1");
  if (stride == 0) throw UsageError("make_windows: stride must be at least 1");
  if (t < omega + tau) {
    throw UsageError("make_windows: " + std::to_string(t) + " time steps cannot hold a window of " +
                     std::to_string(omega) + " + " + std::to_string(tau));
  }
  const std::size_t count = (t - omega - tau) / stride + 1;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(Window{i * stride, omega, tau});
  return out;
}

AdamState AdamState::for_params(const Net3Params& params) {
  AdamState s;
  for_each_block(params, [&s](const std::string&, const Matrix& m) {
    s.m.emplace_back(m.rows(), m.cols());
    s.v.emplace_back(m.rows(), m.cols());
  });
  return s;
}

void adam_step(Net3Params& params, const Net3Params& grads, AdamState& state, const AdamConfig& config) {
  std::vector<const Matrix*> g;
  for_each_block(grads, [&g](const std::string&, const Matrix& m) { g.push_back(&m); });
  if (g.size() != state.m.size()) throw ShapeError("adam_step: optimizer state does not match parameters");

  double scale = 1.0;
  if (config.clip > 0.0) {
    double sq = 0.0;
    for (const Matrix* m : g)
      for (double x : m->data()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > config.clip) scale = config.clip / norm;
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  std::size_t k = 0;
  for_each_block(params, [&](const std::string& name, Matrix& p) {
    const Matrix& gk = *g[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    ++k;
    if (gk.size() != p.size() || m.size() != p.size()) throw ShapeError("adam_step: block " + name + " shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = scale * gk.data()[i];
      m.data()[i] = config.beta1 * m.data()[i] + (1.0 - config.beta1) * gi;
      v.data()[i] = config.beta2 * v.data()[i] + (1.0 - config.beta2) * gi * gi;
      const double mhat = m.data()[i] / c1;
      const double vhat = v.data()[i] / c2;
      p.data()[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  });
}

double rmse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> mask) {
  if (pred.size() != truth.size() || mask.size() != pred.size()) throw ShapeError("rmse: length mismatch");
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0) continue;
    const double e = pred[i] - truth[i];
    sq += e * e;
    ++n;
  }
  if (n == 0) throw ValidationError("rmse: no entries selected by the mask");
  return std::sqrt(sq / static_cast<double>(n));
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  const std::vector<std::uint8_t> all(pred.size(), 1);
  return rmse(pred, truth, all);
}

std::size_t effective_batch_size(std::size_t requested, std::size_t windows) {
  if (requested > 0) return std::min(requested, windows);
  return windows <= 1000 ? windows : 32;
}

std::vector<EpochRecord> fit(std::span<const WindowSample> samples, const GraphContext& ctx, Net3Params& params,
                             const TrainConfig& config, const Validator& validate, const EpochCallback& on_epoch) {
  if (samples.empty()) throw UsageError("fit: no training windows");
  const std::size_t batch = effective_batch_size(config.batch_size, samples.size());
  std::mt19937_64 rng(config.seed);
  AdamState adam = AdamState::for_params(params);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochRecord> history;
  history.reserve(config.epochs);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(begin + batch, order.size());
      Net3Params grads = zeros_like(params);
      for (std::size_t i = begin; i < end; ++i) {
        total += loss_and_gradient(samples[order[i]], ctx, params, config.mu1, config.mu2, grads).total;
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for_each_block(grads, [inv](const std::string&, Matrix& g) {
        for (double& x : g.data()) x *= inv;
      });
      adam_step(params, grads, adam, config.adam);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = total / static_cast<double>(samples.size());
    if (validate) record.val_rmse = validate(params);
    if (on_epoch) on_epoch(record);
    history.push_back(record);
  }
  return history;
}

}  // namespace net3
