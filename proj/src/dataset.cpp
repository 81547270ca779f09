#include "net3/dataset.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "net3/error.hpp"
#include "net3/trnn.hpp"

namespace net3 {

namespace fs = std::filesystem;
using nlohmann::json;

Mask Mask::filled(Shape shape, bool value) {
  Mask m;
  m.data.assign(shape_size(shape), value ? 1 : 0);
  m.shape = std::move(shape);
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t b) { return b != 0; }));
}

Shape NetTensorTimeSeries::node_dims() const { return Shape(values.shape().begin(), values.shape().end() - 1); }

DenseTensor NetTensorTimeSeries::snapshot(std::size_t t) const {
  const std::size_t steps_ = steps();
  if (t >= steps_) throw UsageError("snapshot: time step " + std::to_string(t) + " out of range");
  DenseTensor s(node_dims());
  for (std::size_t p = 0; p < s.size(); ++p) s[p] = values[p * steps_ + t];
  return s;
}

void NetTensorTimeSeries::validate() const {
  if (values.order() < 2) throw ValidationError("dataset needs at least one node mode and a time mode");
  const Shape dims = node_dims();
  if (networks.size() != dims.size()) {
    throw ValidationError("dataset has " + std::to_string(dims.size()) + " node modes but " +
                          std::to_string(networks.size()) + " networks");
  }
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (networks[m].size() != dims[m]) {
      throw ValidationError("network of mode " + std::to_string(m) + " has " + std::to_string(networks[m].size()) +
                            " nodes, mode has " + std::to_string(dims[m]));
    }
  }
  if (mask.shape != values.shape() || mask.data.size() != values.size()) {
    throw ValidationError("mask shape " + shape_string(mask.shape) + " differs from values " +
                          shape_string(values.shape()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask.data[i] != 0 && !std::isfinite(values[i])) {
      throw ValidationError("non-finite value at observed entry " + std::to_string(i));
    }
  }
  if (!mode_names.empty() && mode_names.size() != values.order()) {
    throw ValidationError("expected " + std::to_string(values.order()) + " mode names");
  }
}

namespace {

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xFFU) << (8 * (7 - i));
    return y;
  }
  return x;
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::string net_file(std::size_t m) { return "net_" + std::to_string(m) + ".csv"; }

}  // namespace

NetTensorTimeSeries load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("no manifest.json in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ValidationError("manifest.json: " + std::string(e.what()));
  }

  Shape shape;
  try {
    shape = manifest.at("shape").get<Shape>();
  } catch (const json::exception&) {
    throw ValidationError("manifest.json: missing or malformed \"shape\"");
  }
  if (shape.size() < 2) throw ValidationError("manifest.json: shape needs node modes and a time mode");
  if (std::find(shape.begin(), shape.end(), 0U) != shape.end()) throw ValidationError("manifest.json: zero dimension");

  const json payload = manifest.value("payload", json::object());
  const std::string values_file = payload.value("file", "values.bin");
  if (payload.value("dtype", "float64") != "float64") throw ValidationError("manifest.json: dtype must be float64");
  if (payload.value("endianness", "little") != "little") {
    throw ValidationError("manifest.json: endianness must be little");
  }

  NetTensorTimeSeries ds;
  const std::size_t total = shape_size(shape);
  const auto raw = read_file(dir / values_file);
  if (raw.size() != total * 8) {
    throw ValidationError(values_file + " holds " + std::to_string(raw.size()) + " bytes, shape " +
                          shape_string(shape) + " needs " + std::to_string(total * 8));
  }
  std::vector<double> data(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, raw.data() + i * 8, 8);
    data[i] = std::bit_cast<double>(to_little(bits));
  }
  ds.values = DenseTensor(shape, std::move(data));

  const json mask_entry = manifest.value("mask", json());
  std::optional<std::string> mask_file;
  if (mask_entry.is_string()) {
    mask_file = mask_entry.get<std::string>();
  } else if (!manifest.contains("mask") && fs::exists(dir / "mask.bin")) {
    mask_file = "mask.bin";
  }
  if (mask_file) {
    const auto bytes = read_file(dir / *mask_file);
    if (bytes.size() != total) {
      throw ValidationError(*mask_file + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                            std::to_string(total));
    }
    ds.mask.shape = shape;
    ds.mask.data.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
      const auto b = static_cast<std::uint8_t>(bytes[i]);
      if (b > 1) throw ValidationError(*mask_file + ": byte " + std::to_string(i) + " is neither 0 nor 1");
      ds.mask.data[i] = b;
    }
  } else {
    ds.mask = Mask::filled(shape, true);
  }

  const std::size_t modes = shape.size() - 1;
  std::vector<std::optional<std::string>> net_files(modes);
  if (manifest.contains("networks")) {
    const json& nets = manifest.at("networks");
    if (!nets.is_array() || nets.size() != modes) {
      throw ValidationError("manifest.json: \"networks\" must list one entry (file or null) per node mode");
    }
    for (std::size_t m = 0; m < modes; ++m)
      if (nets[m].is_string()) net_files[m] = nets[m].get<std::string>();
  } else {
    for (std::size_t m = 0; m < modes; ++m)
      if (fs::exists(dir / net_file(m))) net_files[m] = net_file(m);
  }
  for (std::size_t m = 0; m < modes; ++m) {
    if (net_files[m]) {
      ds.networks.push_back(ModeNetwork::from_adjacency(read_adjacency_csv(dir / *net_files[m])));
    } else {
      ds.networks.push_back(ModeNetwork::identity(shape[m]));
    }
  }

  if (manifest.contains("mode_names")) ds.mode_names = manifest.at("mode_names").get<std::vector<std::string>>();
  ds.validate();
  return ds;
}

void save_dataset(const NetTensorTimeSeries& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  const std::size_t total = ds.values.size();
  std::vector<char> bytes(total * 8);
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(ds.values[i]));
    std::memcpy(bytes.data() + i * 8, &bits, 8);
  }
  write_file(dir / "values.bin", bytes.data(), bytes.size());

  json manifest;
  manifest["format"] = "net3-dataset";
  manifest["version"] = 1;
  manifest["shape"] = ds.values.shape();
  manifest["mode_names"] = ds.mode_names;
  manifest["payload"] = {{"file", "values.bin"}, {"dtype", "float64"}, {"endianness", "little"}};

  const bool all_observed = ds.mask.count() == total;
  if (all_observed) {
    manifest["mask"] = nullptr;
    fs::remove(dir / "mask.bin");
  } else {
    write_file(dir / "mask.bin", reinterpret_cast<const char*>(ds.mask.data.data()), total);
    manifest["mask"] = "mask.bin";
  }

  json nets = json::array();
  for (std::size_t m = 0; m < ds.networks.size(); ++m) {
    if (ds.networks[m].is_identity) {
      nets.push_back(nullptr);
      fs::remove(dir / net_file(m));
    } else {
      write_adjacency_csv(dir / net_file(m), ds.networks[m].raw);
      nets.push_back(net_file(m));
    }
  }
  manifest["networks"] = nets;

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

NormStats compute_norm_stats(const DenseTensor& values, const Mask& observed, std::size_t time_end) {
  if (observed.shape != values.shape()) throw ShapeError("compute_norm_stats: mask shape mismatch");
  const std::size_t steps = values.shape().back();
  const std::size_t series = values.size() / steps;
  time_end = std::min(time_end, steps);
  NormStats stats;
  stats.mean.assign(series, 0.0);
  stats.stddev.assign(series, 1.0);
  stats.constant.assign(series, 0);
  for (std::size_t p = 0; p < series; ++p) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < time_end; ++t) {
      const std::size_t i = p * steps + t;
      if (observed.data[i] == 0) continue;
      sum += values[i];
      ++n;
    }
    if (n == 0) {
      stats.constant[p] = 1;
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t t = 0; t < time_end; ++t) {
      const std::size_t i = p * steps + t;
      if (observed.data[i] == 0) continue;
      sq += (values[i] - mean) * (values[i] - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    stats.mean[p] = mean;
    if (sd > 0.0) {
      stats.stddev[p] = sd;
    } else {
      stats.constant[p] = 1;
    }
  }
  return stats;
}

namespace {

void check_stats(const DenseTensor& values, const NormStats& stats) {
  const std::size_t series = values.size() / values.shape().back();
  if (stats.mean.size() != series || stats.stddev.size() != series) {
    throw ShapeError("normalization statistics cover " + std::to_string(stats.mean.size()) + " series, data has " +
                     std::to_string(series));
  }
}

}  // namespace

DenseTensor normalize(const DenseTensor& values, const NormStats& stats) {
  check_stats(values, stats);
  const std::size_t steps = values.shape().back();
  DenseTensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t p = i / steps;
    out[i] = (out[i] - stats.mean[p]) / stats.stddev[p];
  }
  return out;
}

DenseTensor denormalize(const DenseTensor& values, const NormStats& stats) {
  check_stats(values, stats);
  const std::size_t steps = values.shape().back();
  DenseTensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t p = i / steps;
    out[i] = out[i] * stats.stddev[p] + stats.mean[p];
  }
  return out;
}

Mask split_recovery(const NetTensorTimeSeries& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split_recovery: fraction must lie in (0, 1)");
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < ds.mask.data.size(); ++i)
    if (ds.mask.data[i] != 0) observed.push_back(i);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(observed.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(observed.begin(), observed.end(), rng);
  Mask held = Mask::filled(ds.values.shape(), false);
  for (std::size_t k = 0; k < count; ++k) held.data[observed[k]] = 1;

  const std::size_t steps = ds.steps();
  std::size_t empty = 0;
  for (std::size_t p = 0; p < ds.series(); ++p) {
    bool any = false;
    for (std::size_t t = 0; t < steps && !any; ++t) {
      const std::size_t i = p * steps + t;
      any = ds.mask.data[i] != 0 && held.data[i] == 0;
    }
    if (!any) ++empty;
  }
  if (empty > 0) spdlog::warn("split_recovery: {} series have no observed training entries left", empty);
  return held;
}

std::size_t split_future(std::size_t steps, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split_future: fraction must lie in (0, 1)");
  const auto test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(steps)));
  return steps - test;
}

namespace {

// Q · blockdiag(r R(θ_k)) · Qᵀ: every eigenvalue has modulus r and the
// rotations keep the trajectory from being a slow drift.
Eigen::MatrixXd latent_transition(std::size_t n, double radius, std::mt19937_64& rng) {
  const auto size = static_cast<Eigen::Index>(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(std::numbers::pi / 8.0, std::numbers::pi / 2.0);
  Eigen::MatrixXd g(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) g(i, j) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(size, size);
  Eigen::Index k = 0;
  for (; k + 1 < size; k += 2) {
    const double th = angle(rng);
    block(k, k) = radius * std::cos(th);
    block(k, k + 1) = -radius * std::sin(th);
    block(k + 1, k) = radius * std::sin(th);
    block(k + 1, k + 1) = radius * std::cos(th);
  }
  if (k < size) block(k, k) = radius;
  return q * block * q.transpose();
}

}  // namespace

NetTensorTimeSeries synthesize(const SynthConfig& config, std::uint64_t seed) {
  if (config.dims.empty() || config.dims.size() != config.core.size()) {
    throw UsageError("synthesize: dims and core must be non-empty and of equal length");
  }
  for (std::size_t m = 0; m < config.dims.size(); ++m) {
    if (config.core[m] == 0 || config.core[m] > config.dims[m]) {
      throw UsageError("synthesize: core dimension of mode " + std::to_string(m) + " must lie in [1, N]");
    }
  }
  if (config.steps < 2) throw UsageError("synthesize: need at least two time steps");
  if (!(config.spectral_radius >= 0.0 && config.spectral_radius < 1.0)) {
    throw UsageError("synthesize: transition spectral radius must be in [0, 1), got " +
                     std::to_string(config.spectral_radius));
  }
  if (config.noise < 0.0 || config.process_noise < 0.0) throw UsageError("synthesize: noise levels must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FactorSet factors = init_factors(config.dims, config.core, rng());
  const std::size_t latent = shape_size(config.core);
  const Eigen::MatrixXd a = latent_transition(latent, config.spectral_radius, rng);

  const Eigen::Index n = static_cast<Eigen::Index>(latent);
  const double stationary = 1.0 / std::sqrt(std::max(1e-12, 1.0 - config.spectral_radius * config.spectral_radius));
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng) * std::max(config.process_noise, 1e-3) * stationary;

  const Shape& dims = config.dims;
  const std::size_t steps = config.steps;
  const std::size_t series = shape_size(dims);
  Shape full = dims;
  full.push_back(steps);
  DenseTensor values(full);
  Shape core_shape = config.core;
  core_shape.push_back(1);
  for (std::size_t t = 0; t < steps; ++t) {
    DenseTensor zt(core_shape, std::vector<double>(z.data(), z.data() + n));
    const DenseTensor s = reconstruct(zt, factors);
    for (std::size_t p = 0; p < series; ++p) values[p * steps + t] = s[p] + config.noise * normal(rng);
    Eigen::VectorXd next = a * z;
    for (Eigen::Index i = 0; i < n; ++i) next(i) += config.process_noise * normal(rng);
    z = next;
  }

  NetTensorTimeSeries ds;
  ds.values = std::move(values);
  ds.mask = Mask::filled(ds.values.shape(), true);
  std::vector<std::uint8_t> networked(dims.size(), config.network_modes.empty() ? 1 : 0);
  for (std::size_t m : config.network_modes) {
    if (m >= dims.size()) throw UsageError("synthesize: network mode " + std::to_string(m) + " out of range");
    networked[m] = 1;
  }
  for (std::size_t m = 0; m < dims.size(); ++m) {
    ds.networks.push_back(networked[m] != 0 ? ModeNetwork::from_adjacency(pearson_adjacency(unfold(ds.values, m)))
                                            : ModeNetwork::identity(dims[m]));
    ds.mode_names.push_back("mode" + std::to_string(m));
  }
  ds.mode_names.push_back("time");
  return ds;
}

}  // namespace net3
