#include "net3/tgcn.hpp"

#include <cmath>

#include "net3/error.hpp"

namespace net3 {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw UsageError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

DenseTensor activate(Activation a, DenseTensor x) {
  if (a == Activation::identity) return x;
  for (double& v : x.data()) v = activate(a, v);
  return x;
}

IndicatorVector IndicatorVector::from_index(std::size_t index, std::size_t k) {
  if (k < sizeof(std::size_t) * 8 && index >> k) throw UsageError("indicator index out of range");
  IndicatorVector p;
  p.bits.resize(k);
  for (std::size_t i = 0; i < k; ++i) p.bits[i] = static_cast<std::uint8_t>((index >> i) & 1U);
  return p;
}

std::size_t IndicatorVector::index() const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw UsageError("indicator bits must be 0 or 1");
    idx |= static_cast<std::size_t>(bits[i]) << i;
  }
  return idx;
}

bool IndicatorVector::none() const {
  for (auto b : bits)
    if (b) return false;
  return true;
}

std::vector<std::size_t> networked_modes(std::span<const ModeNetwork> nets) {
  std::vector<std::size_t> modes;
  for (std::size_t m = 0; m < nets.size(); ++m)
    if (!nets[m].is_identity) modes.push_back(m);
  return modes;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void check_input(const DenseTensor& x, std::span<const ModeNetwork> nets, std::size_t channels,
                 const char* who) {
  if (x.order() != nets.size() + 1) {
    throw ShapeError(std::string(who) + ": input " + shape_string(x.shape()) + " needs " +
                     std::to_string(nets.size()) + " node modes plus a feature mode");
  }
  for (std::size_t m = 0; m < nets.size(); ++m) {
    if (nets[m].size() != x.dim(m)) {
      throw ShapeError(std::string(who) + ": network for mode " + std::to_string(m) + " has size " +
                       std::to_string(nets[m].size()) + ", tensor has " + std::to_string(x.dim(m)));
    }
  }
  if (x.shape().back() != channels) {
    throw ShapeError(std::string(who) + ": input has " + std::to_string(x.shape().back()) +
                     " channels, parameters expect " + std::to_string(channels));
  }
}

}  // namespace

std::size_t TgclParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : thetas) n += t.size();
  return n;
}

TgclParams init_tgcl(std::span<const ModeNetwork> nets, std::size_t d_in, std::size_t d_out,
                     Activation activation, std::mt19937_64& rng) {
  TgclParams p;
  p.modes = networked_modes(nets);
  p.activation = activation;
  const std::size_t terms = std::size_t{1} << p.modes.size();
  const double limit = glorot_limit(d_in, d_out);
  for (std::size_t i = 0; i < terms; ++i) p.thetas.push_back(uniform_matrix(d_in, d_out, limit, rng));
  return p;
}

std::vector<DenseTensor> graph_filtered_inputs(const DenseTensor& x, std::span<const ModeNetwork> nets,
                                               std::span<const std::size_t> modes) {
  const std::size_t terms = std::size_t{1} << modes.size();
  std::vector<DenseTensor> filtered(terms);
  filtered[0] = x;
  for (std::size_t idx = 1; idx < terms; ++idx) {
    // Highest set bit is applied last; lower bits were applied in increasing order.
    std::size_t high = 0;
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (idx >> k & 1U) high = k;
    const std::size_t rest = idx & ~(std::size_t{1} << high);
    filtered[idx] = mode_product(filtered[rest], nets[modes[high]].normalized, modes[high]);
  }
  return filtered;
}

DenseTensor tgcl_forward(const DenseTensor& x, std::span<const ModeNetwork> nets, const TgclParams& params) {
  if (params.modes != networked_modes(nets)) {
    throw ShapeError("tgcl_forward: parameters were built for a different set of networked modes");
  }
  if (params.thetas.size() != (std::size_t{1} << params.modes.size())) {
    throw ShapeError("tgcl_forward: expected 2^K parameter matrices");
  }
  check_input(x, nets, params.in_channels(), "tgcl_forward");
  const std::size_t feature = nets.size();
  const auto filtered = graph_filtered_inputs(x, nets, params.modes);

  Shape out_shape = x.shape();
  out_shape.back() = params.out_channels();
  DenseTensor acc(out_shape);
  for (std::size_t idx = 1; idx < filtered.size(); ++idx)
    acc = acc + mode_product(filtered[idx], params.thetas[idx], feature);
  acc = acc + mode_product(x, params.thetas[0], feature);
  return activate(params.activation, std::move(acc));
}

std::size_t ItgcnParams::parameter_count() const {
  std::size_t n = theta0.size();
  for (const auto& t : mode_thetas) n += t.size();
  return n;
}

ItgcnParams init_itgcn(std::size_t modes, std::size_t d_in, std::size_t d_out, Activation activation,
                       std::mt19937_64& rng) {
  ItgcnParams p;
  p.activation = activation;
  const double limit = glorot_limit(d_in, d_out);
  for (std::size_t m = 0; m < modes; ++m) p.mode_thetas.push_back(uniform_matrix(d_in, d_out, limit, rng));
  p.theta0 = uniform_matrix(d_in, d_out, limit, rng);
  return p;
}

DenseTensor itgcn_forward(const DenseTensor& x, std::span<const ModeNetwork> nets, const ItgcnParams& params) {
  if (params.mode_thetas.size() != nets.size()) {
    throw ShapeError("itgcn_forward: expected one parameter matrix per mode plus Θ₀");
  }
  check_input(x, nets, params.theta0.rows(), "itgcn_forward");
  const std::size_t feature = nets.size();
  Shape out_shape = x.shape();
  out_shape.back() = params.theta0.cols();
  DenseTensor acc(out_shape);
  for (std::size_t m = 0; m < nets.size(); ++m)
    acc = acc + mode_product(mode_product(x, nets[m].normalized, m), params.mode_thetas[m], feature);
  acc = acc + mode_product(x, params.theta0, feature);
  return activate(params.activation, std::move(acc));
}

FlatGcnParams init_flat_gcn(std::size_t d_in, std::size_t d_out, Activation activation, std::mt19937_64& rng) {
  const double limit = glorot_limit(d_in, d_out);
  FlatGcnParams p;
  p.theta0 = uniform_matrix(d_in, d_out, limit, rng);
  p.theta1 = uniform_matrix(d_in, d_out, limit, rng);
  p.activation = activation;
  return p;
}

Matrix gcn_flat_forward(const Matrix& x, const Matrix& a_flat, const FlatGcnParams& params) {
  if (a_flat.rows() != a_flat.cols() || a_flat.rows() != x.rows()) {
    throw ShapeError("gcn_flat_forward: adjacency is " + std::to_string(a_flat.rows()) + "x" +
                     std::to_string(a_flat.cols()) + " but signal has " + std::to_string(x.rows()) + " nodes");
  }
  if (params.theta0.rows() != x.cols() || params.theta1.rows() != x.cols() ||
      params.theta0.cols() != params.theta1.cols()) {
    throw ShapeError("gcn_flat_forward: channel mismatch");
  }
  const DenseTensor xt = DenseTensor::from_matrix(x);
  // Ã X computed as X ×_0 Ãᵀ so the summation order matches the tensor layer.
  const DenseTensor propagated = mode_product(xt, transpose(a_flat), 0);
  DenseTensor acc({x.rows(), params.theta1.cols()});
  acc = acc + mode_product(propagated, params.theta1, 1);
  acc = acc + mode_product(xt, params.theta0, 1);
  return to_matrix(activate(params.activation, std::move(acc)));
}

std::vector<std::size_t> flat_node_gather(const Shape& node_dims, std::size_t channels) {
  Shape full = node_dims;
  full.push_back(channels);
  const std::size_t nodes = shape_size(node_dims);
  // Row-major node offsets visited in vectorize() order.
  std::vector<std::size_t> order(nodes);
  {
    DenseTensor probe(node_dims);
    for (std::size_t i = 0; i < nodes; ++i) probe[i] = static_cast<double>(i);
    const auto v = vectorize(probe);
    for (std::size_t i = 0; i < nodes; ++i) order[i] = static_cast<std::size_t>(v[i]);
  }
  std::vector<std::size_t> gather(nodes * channels);
  for (std::size_t r = 0; r < nodes; ++r)
    for (std::size_t c = 0; c < channels; ++c) gather[r * channels + c] = order[r] * channels + c;
  return gather;
}

Matrix flatten_nodes(const DenseTensor& x) {
  const Shape node_dims(x.shape().begin(), x.shape().end() - 1);
  const std::size_t channels = x.shape().back();
  const auto gather = flat_node_gather(node_dims, channels);
  Matrix out(shape_size(node_dims), channels);
  for (std::size_t i = 0; i < gather.size(); ++i) out.data()[i] = x[gather[i]];
  return out;
}

DenseTensor unflatten_nodes(const Matrix& x, const Shape& node_dims) {
  if (x.rows() != shape_size(node_dims)) throw ShapeError("unflatten_nodes: node count mismatch");
  Shape full = node_dims;
  full.push_back(x.cols());
  const auto gather = flat_node_gather(node_dims, x.cols());
  DenseTensor out(full);
  for (std::size_t i = 0; i < gather.size(); ++i) out[gather[i]] = x.data()[i];
  return out;
}

double tgcl_flops(std::span<const std::size_t> dims, std::size_t k) {
  if (k > dims.size()) throw UsageError("tgcl_flops: more networks than modes");
  if (k == 0) throw UsageError("tgcl_flops: needs at least one network");
  double nodes = 1.0;
  for (std::size_t n : dims) nodes *= static_cast<double>(n);
  double neighbours = 0.0;
  for (std::size_t i = 0; i < k; ++i) neighbours += static_cast<double>(dims[i]);
  return std::ldexp(1.0, static_cast<int>(k) - 1) * nodes * (2.0 + neighbours);
}

}  // namespace net3
