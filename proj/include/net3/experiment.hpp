#pragma once

// Task-level pipeline shared by the CLI, the Python module and the
// acceptance runs: split, normalize, build windows, train, evaluate.
//
// Future prediction holds out the last steps; evaluation is the one-step
// forecast of each test step from the true preceding window, against the
// persistence forecast Ŝ_{t+1} = S_t.
//
// Recovery holds out random observed entries; every step t is predicted from
// the ω steps before it with unobserved and held-out inputs set to zero (and
// zero snapshots before t = 0), against per-series mean imputation.

#include <cstdint>
#include <string>
#include <vector>

#include "net3/checkpoint.hpp"
#include "net3/dataset.hpp"
#include "net3/model.hpp"
#include "net3/training.hpp"

namespace net3 {

enum class Task { future, recovery };

Task parse_task(const std::string& name);
std::string to_string(Task t);

struct RunConfig {
  Task task = Task::future;
  Variant variant = Variant::net3;
  std::size_t hidden = 8;
  std::size_t state = 8;
  double rho = 0.8;
  Activation activation = Activation::relu;
  CellOutput cell_output = CellOutput::sigmoid;
  std::size_t omega = 5;
  std::size_t tau = 1;
  std::size_t stride = 1;
  std::size_t epochs = 200;
  std::size_t batch_size = 0;
  double lr = 0.01;
  double mu1 = 1e-3;
  double mu2 = 1e-3;
  double clip = 0.0;
  /// Test share: last steps for the future task, held-out entries for recovery.
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  /// Compute test RMSE after every epoch.
  bool validate_every_epoch = false;

  ModelConfig model(const Shape& dims) const;
  TrainConfig training() const;

  /// Ordered key=value echo (stored in checkpoints).
  std::vector<std::pair<std::string, std::string>> to_meta() const;
  static RunConfig from_meta(const Checkpoint& ckpt);
};

/// Everything derived from a dataset and a config before training.
struct PreparedTask {
  Task task = Task::future;
  NetTensorTimeSeries data;
  NormStats stats;
  /// Normalized values, zero wherever the model may not see the entry.
  DenseTensor inputs;
  /// Normalized values everywhere (NaN where never observed).
  DenseTensor truth;
  /// Entries usable as training targets.
  Mask train_mask;
  /// Entries scored at evaluation.
  Mask test_mask;
  /// First test step (future task); T for recovery.
  std::size_t boundary = 0;
};

PreparedTask prepare_task(const NetTensorTimeSeries& ds, const RunConfig& config);
PreparedTask prepare_task(const NetTensorTimeSeries& ds, const RunConfig& config, const NormStats& stats);

/// Inputs/targets for the ω steps before `t`, zero-padded before the first step.
WindowSample window_before(const PreparedTask& prep, std::size_t t, std::size_t omega, const Mask& target_mask);

std::vector<WindowSample> training_samples(const PreparedTask& prep, const RunConfig& config);

struct EntryPrediction {
  std::size_t series;
  std::size_t t;
  double truth;
  double prediction;
};

struct Evaluation {
  double rmse = 0.0;
  double rmse_raw = 0.0;
  double baseline_rmse = 0.0;
  double baseline_rmse_raw = 0.0;
  std::string baseline;
  std::size_t count = 0;
  std::vector<EntryPrediction> entries;
};

Evaluation evaluate(const PreparedTask& prep, const GraphContext& ctx, const Net3Params& params,
                    const RunConfig& config, bool keep_entries = false);

struct TrainOutcome {
  Net3Params params;
  std::vector<EpochRecord> history;
  Evaluation evaluation;
};

TrainOutcome train_task(const PreparedTask& prep, const RunConfig& config, const EpochCallback& on_epoch = {});

Checkpoint make_checkpoint(const TrainOutcome& outcome, const PreparedTask& prep, const RunConfig& config);

/// Rebuilds parameters for `ds` from a checkpoint; dimensions must agree.
Net3Params params_from_checkpoint(const Checkpoint& ckpt, const NetTensorTimeSeries& ds, const RunConfig& config);

/// Feeds the ω steps before the boundary and rolls forward `horizon` steps.
/// Returns normalized predictions.
std::vector<DenseTensor> rollout(const PreparedTask& prep, const GraphContext& ctx, const Net3Params& params,
                                 const RunConfig& config, std::size_t horizon);

}  // namespace net3
