#include "net3/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "net3/error.hpp"

namespace net3 {

Task parse_task(const std::string& name) {
  if (name == "future") return Task::future;
  if (name == "recovery") return Task::recovery;
  throw UsageError("unknown task '" + name + "' (expected future or recovery)");
}

std::string to_string(Task t) { return t == Task::future ? "future" : "recovery"; }

ModelConfig RunConfig::model(const Shape& dims) const {
  ModelConfig m;
  m.variant = variant;
  m.dims = dims;
  m.hidden = hidden;
  m.state = state;
  m.rho = rho;
  m.activation = activation;
  m.cell_output = cell_output;
  return m;
}

TrainConfig RunConfig::training() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.mu1 = mu1;
  t.mu2 = mu2;
  t.seed = seed + 1;
  t.adam.lr = lr;
  t.adam.clip = clip;
  return t;
}

namespace {

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("checkpoint entry " + key + " is not a number: '" + s + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("checkpoint entry " + key + " is not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::to_meta() const {
  return {
      {"task", to_string(task)},
      {"variant", to_string(variant)},
      {"hidden", std::to_string(hidden)},
      {"state", std::to_string(state)},
      {"rho", exact(rho)},
      {"activation", to_string(activation)},
      {"cell_output", to_string(cell_output)},
      {"omega", std::to_string(omega)},
      {"tau", std::to_string(tau)},
      {"stride", std::to_string(stride)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"lr", exact(lr)},
      {"mu1", exact(mu1)},
      {"mu2", exact(mu2)},
      {"clip", exact(clip)},
      {"test_fraction", exact(test_fraction)},
      {"seed", std::to_string(seed)},
  };
}

RunConfig RunConfig::from_meta(const Checkpoint& ckpt) {
  RunConfig c;
  auto u = [&](const char* key) { return parse_uint(key, ckpt.get(key)); };
  auto d = [&](const char* key) { return parse_double(key, ckpt.get(key)); };
  c.task = parse_task(ckpt.get("task"));
  c.variant = parse_variant(ckpt.get("variant"));
  c.hidden = u("hidden");
  c.state = u("state");
  c.rho = d("rho");
  c.activation = parse_activation(ckpt.get("activation"));
  c.cell_output = parse_cell_output(ckpt.get("cell_output"));
  c.omega = u("omega");
  c.tau = u("tau");
  c.stride = u("stride");
  c.epochs = u("epochs");
  c.batch_size = u("batch_size");
  c.lr = d("lr");
  c.mu1 = d("mu1");
  c.mu2 = d("mu2");
  c.clip = d("clip");
  c.test_fraction = d("test_fraction");
  c.seed = u("seed");
  return c;
}

namespace {

PreparedTask prepare_split(const NetTensorTimeSeries& ds, const RunConfig& config) {
  ds.validate();
  if (config.omega == 0) throw UsageError("omega must be at least 1");
  PreparedTask prep;
  prep.task = config.task;
  prep.data = ds;
  const std::size_t steps = ds.steps();
  prep.train_mask = Mask::filled(ds.values.shape(), false);
  prep.test_mask = Mask::filled(ds.values.shape(), false);
  if (config.task == Task::future) {
    prep.boundary = split_future(steps, config.test_fraction);
    if (prep.boundary == steps) throw UsageError("future split leaves no test steps");
    if (prep.boundary < config.omega + 1) {
      throw UsageError("future split leaves " + std::to_string(prep.boundary) + " training steps, fewer than omega + 1");
    }
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
      if (ds.mask.data[i] == 0) continue;
      (i % steps < prep.boundary ? prep.train_mask : prep.test_mask).data[i] = 1;
    }
  } else {
    prep.boundary = steps;
    prep.test_mask = split_recovery(ds, config.test_fraction, config.seed);
    for (std::size_t i = 0; i < ds.values.size(); ++i)
      prep.train_mask.data[i] = ds.mask.data[i] != 0 && prep.test_mask.data[i] == 0 ? 1 : 0;
  }
  if (prep.test_mask.count() == 0) throw UsageError("the split leaves no test entries");
  return prep;
}

void finish(PreparedTask& prep) {
  const auto& ds = prep.data;
  prep.truth = normalize(ds.values, prep.stats);
  prep.inputs = prep.truth;
  const Mask& visible = prep.task == Task::future ? ds.mask : prep.train_mask;
  for (std::size_t i = 0; i < prep.inputs.size(); ++i) {
    if (ds.mask.data[i] == 0) prep.truth[i] = std::numeric_limits<double>::quiet_NaN();
    if (visible.data[i] == 0) prep.inputs[i] = 0.0;
  }
}

DenseTensor slice(const DenseTensor& values, const Shape& dims, std::size_t t, bool zero_nan) {
  const std::size_t steps = values.shape().back();
  DenseTensor s(dims);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double v = values[p * steps + t];
    s[p] = zero_nan && !std::isfinite(v) ? 0.0 : v;
  }
  return s;
}

}  // namespace

PreparedTask prepare_task(const NetTensorTimeSeries& ds, const RunConfig& config) {
  PreparedTask prep = prepare_split(ds, config);
  prep.stats = compute_norm_stats(ds.values, prep.train_mask, prep.boundary);
  finish(prep);
  return prep;
}

PreparedTask prepare_task(const NetTensorTimeSeries& ds, const RunConfig& config, const NormStats& stats) {
  PreparedTask prep = prepare_split(ds, config);
  prep.stats = stats;
  finish(prep);
  return prep;
}

WindowSample window_before(const PreparedTask& prep, std::size_t t, std::size_t omega, const Mask& target_mask) {
  const Shape dims = prep.data.node_dims();
  const std::size_t steps = prep.data.steps();
  if (t >= steps) throw UsageError("window_before: step out of range");
  WindowSample w;
  for (std::size_t k = 0; k < omega; ++k) {
    const std::size_t back = omega - k;
    w.inputs.push_back(t >= back ? slice(prep.inputs, dims, t - back, true) : DenseTensor(dims));
  }
  w.target = slice(prep.truth, dims, t, true);
  w.weights = DenseTensor(dims);
  for (std::size_t p = 0; p < w.weights.size(); ++p) w.weights[p] = target_mask.data[p * steps + t] != 0 ? 1.0 : 0.0;
  return w;
}

std::vector<WindowSample> training_samples(const PreparedTask& prep, const RunConfig& config) {
  if (config.tau != 1) throw UsageError("training supports tau = 1 only; longer horizons are rolled out");
  std::vector<WindowSample> out;
  auto add = [&](std::size_t t) {
    WindowSample w = window_before(prep, t, config.omega, prep.train_mask);
    double any = 0.0;
    for (double v : w.weights.data()) any += v;
    if (any > 0.0) out.push_back(std::move(w));
  };
  if (prep.task == Task::future) {
    for (const Window& w : make_windows(prep.boundary, config.omega, config.tau, config.stride)) add(w.first_target());
  } else {
    if (config.stride == 0) throw UsageError("stride must be at least 1");
    for (std::size_t t = 0; t < prep.data.steps(); t += config.stride) add(t);
  }
  if (out.empty()) throw UsageError("no training windows with observed targets");
  return out;
}

Evaluation evaluate(const PreparedTask& prep, const GraphContext& ctx, const Net3Params& params,
                    const RunConfig& config, bool keep_entries) {
  const std::size_t steps = prep.data.steps();
  const std::size_t series = prep.data.series();
  Evaluation ev;
  ev.baseline = prep.task == Task::future ? "persistence" : "mean";

  std::vector<double> series_mean(series, 0.0);
  if (prep.task == Task::recovery) {
    for (std::size_t p = 0; p < series; ++p) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < steps; ++t) {
        if (prep.train_mask.data[p * steps + t] == 0) continue;
        sum += prep.truth[p * steps + t];
        ++n;
      }
      series_mean[p] = n > 0 ? sum / static_cast<double>(n) : 0.0;
    }
  }

  double sq = 0.0, sq_raw = 0.0, base = 0.0, base_raw = 0.0;
  const std::size_t first = prep.task == Task::future ? prep.boundary : 0;
  for (std::size_t t = first; t < steps; ++t) {
    bool any = false;
    for (std::size_t p = 0; p < series && !any; ++p) any = prep.test_mask.data[p * steps + t] != 0;
    if (!any) continue;
    const WindowSample w = window_before(prep, t, config.omega, prep.test_mask);
    const DenseTensor pred = forward(w.inputs, ctx, params).last_prediction();
    for (std::size_t p = 0; p < series; ++p) {
      const std::size_t i = p * steps + t;
      if (prep.test_mask.data[i] == 0) continue;
      const double truth = prep.truth[i];
      const double b = prep.task == Task::future ? (t > 0 ? prep.inputs[i - 1] : 0.0) : series_mean[p];
      const double sd = prep.stats.stddev[p];
      sq += (pred[p] - truth) * (pred[p] - truth);
      base += (b - truth) * (b - truth);
      sq_raw += (pred[p] - truth) * (pred[p] - truth) * sd * sd;
      base_raw += (b - truth) * (b - truth) * sd * sd;
      ++ev.count;
      if (keep_entries) {
        ev.entries.push_back({p, t, truth * sd + prep.stats.mean[p], pred[p] * sd + prep.stats.mean[p]});
      }
    }
  }
  if (ev.count == 0) throw ValidationError("evaluation: no test entries");
  const double n = static_cast<double>(ev.count);
  ev.rmse = std::sqrt(sq / n);
  ev.rmse_raw = std::sqrt(sq_raw / n);
  ev.baseline_rmse = std::sqrt(base / n);
  ev.baseline_rmse_raw = std::sqrt(base_raw / n);
  return ev;
}

TrainOutcome train_task(const PreparedTask& prep, const RunConfig& config, const EpochCallback& on_epoch) {
  const GraphContext ctx = make_context(prep.data.networks, config.variant);
  TrainOutcome out;
  out.params = init_params(config.model(prep.data.node_dims()), ctx.nets, config.seed);
  const auto samples = training_samples(prep, config);
  Validator validate;
  if (config.validate_every_epoch) {
    validate = [&](const Net3Params& p) -> std::optional<double> { return evaluate(prep, ctx, p, config).rmse; };
  }
  out.history = fit(samples, ctx, out.params, config.training(), validate, on_epoch);
  out.evaluation = evaluate(prep, ctx, out.params, config);
  return out;
}

Checkpoint make_checkpoint(const TrainOutcome& outcome, const PreparedTask& prep, const RunConfig& config) {
  Checkpoint ckpt;
  ckpt.meta = config.to_meta();
  ckpt.meta.emplace_back("dims", shape_string(prep.data.node_dims()));
  ckpt.stats = prep.stats;
  ckpt.blocks = collect_blocks(outcome.params);
  return ckpt;
}

Net3Params params_from_checkpoint(const Checkpoint& ckpt, const NetTensorTimeSeries& ds, const RunConfig& config) {
  const Shape dims = ds.node_dims();
  if (ckpt.get("dims") != shape_string(dims)) {
    throw ValidationError("checkpoint was trained on " + ckpt.get("dims") + " nodes, dataset has " +
                          shape_string(dims));
  }
  if (ckpt.stats.mean.size() != ds.series()) throw ValidationError("checkpoint normalization does not fit dataset");
  Net3Params params = init_params(config.model(dims), ds.networks, 0);
  assign_blocks(params, ckpt.blocks);
  return params;
}

std::vector<DenseTensor> rollout(const PreparedTask& prep, const GraphContext& ctx, const Net3Params& params,
                                 const RunConfig& config, std::size_t horizon) {
  if (horizon == 0) throw UsageError("horizon must be at least 1");
  const Shape dims = prep.data.node_dims();
  std::vector<DenseTensor> history;
  for (std::size_t k = 0; k < config.omega; ++k) {
    const std::size_t back = config.omega - k;
    history.push_back(prep.boundary >= back ? slice(prep.inputs, dims, prep.boundary - back, true)
                                            : DenseTensor(dims));
  }
  return predict_multi_step(history, ctx, params, horizon);
}

}  // namespace net3
