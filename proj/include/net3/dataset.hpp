#pragma once

// Networked tensor time series on disk and in memory: directory format,
// per-series normalization, train/test splits and a synthetic teacher.
//
// Directory layout:
//   manifest.json   shape (time last), mode names, network files, payload info
//   values.bin      float64 little-endian, row-major, time fastest
//   mask.bin        optional, one byte per entry (1 = observed)
//   net_<m>.csv     optional adjacency for mode m; absent means identity

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "net3/graph.hpp"
#include "net3/tensor.hpp"

namespace net3 {

/// Boolean tensor stored as bytes; same layout as DenseTensor.
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> data;

  static Mask filled(Shape shape, bool value);
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

struct NetTensorTimeSeries {
  /// N_1 × … × N_M × T
  DenseTensor values;
  std::vector<ModeNetwork> networks;
  Mask mask;
  std::vector<std::string> mode_names;

  Shape node_dims() const;
  std::size_t steps() const { return values.shape().back(); }
  std::size_t series() const { return values.size() / steps(); }
  /// Values at time t, shape N_1 × … × N_M.
  DenseTensor snapshot(std::size_t t) const;

  /// Throws ValidationError on any inconsistency between fields.
  void validate() const;
};

NetTensorTimeSeries load_dataset(const std::filesystem::path& dir);
void save_dataset(const NetTensorTimeSeries& ds, const std::filesystem::path& dir);

/// Per-series statistics; index = row-major node index.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint8_t> constant;
};

/// Mean and standard deviation of each series over entries with t < time_end
/// that are set in `observed`. A series with zero spread (or no entries) gets
/// std 1 and is flagged constant.
NormStats compute_norm_stats(const DenseTensor& values, const Mask& observed, std::size_t time_end);

DenseTensor normalize(const DenseTensor& values, const NormStats& stats);
DenseTensor denormalize(const DenseTensor& values, const NormStats& stats);

/// Holds out round(fraction · observed) observed entries uniformly at random.
/// Returned mask is 1 on held-out entries.
Mask split_recovery(const NetTensorTimeSeries& ds, double fraction, std::uint64_t seed);

/// First test step: T − round(fraction · T).
std::size_t split_future(std::size_t steps, double fraction);

struct SynthConfig {
  Shape dims;
  Shape core;
  std::size_t steps = 400;
  /// Standard deviation of the observation noise.
  double noise = 0.05;
  /// Standard deviation of the latent innovations.
  double process_noise = 0.3;
  /// Spectral radius of the latent transition; must be below 1.
  double spectral_radius = 0.95;
  /// Modes that receive a Pearson network; empty means all modes.
  std::vector<std::size_t> network_modes;
};

/// Latent linear teacher: z_{t+1} = A z_t + e_t on the core, S_t = z_t ∏×_m U_m + noise.
NetTensorTimeSeries synthesize(const SynthConfig& config, std::uint64_t seed);

}  // namespace net3
