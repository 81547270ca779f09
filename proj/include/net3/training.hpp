#pragma once

// Windowing, Adam, the epoch loop and the masked RMSE metric.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "net3/model.hpp"

namespace net3 {

/// History steps [start, start + omega) and targets [start + omega, start + omega + tau).
struct Window {
  std::size_t start = 0;
  std::size_t omega = 0;
  std::size_t tau = 0;

  std::size_t first_target() const { return start + omega; }
};

std::vector<Window> make_windows(std::size_t t, std::size_t omega, std::size_t tau, std::size_t stride);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double clip = 0.0;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  static AdamState for_params(const Net3Params& params);
};

void adam_step(Net3Params& params, const Net3Params& grads, AdamState& state, const AdamConfig& config);

/// sqrt(mean (pred − truth)² over entries with mask != 0).
double rmse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> mask);
double rmse(std::span<const double> pred, std::span<const double> truth);

struct TrainConfig {
  std::size_t epochs = 200;
  /// 0 selects full-batch up to 1,000 windows and 32 above.
  std::size_t batch_size = 0;
  double mu1 = 1e-3;
  double mu2 = 1e-3;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

std::size_t effective_batch_size(std::size_t requested, std::size_t windows);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_rmse;
};

using Validator = std::function<std::optional<double>(const Net3Params&)>;
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam over the samples, reshuffled every epoch with the seed.
/// train_loss is the mean window objective seen during the epoch.
std::vector<EpochRecord> fit(std::span<const WindowSample> samples, const GraphContext& ctx, Net3Params& params,
                             const TrainConfig& config, const Validator& validate = {},
                             const EpochCallback& on_epoch = {});

}  // namespace net3
