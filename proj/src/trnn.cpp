#include "net3/trnn.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "net3/error.hpp"

namespace net3 {

std::vector<std::size_t> core_dims(double rho, std::span<const std::size_t> dims) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw UsageError("interaction degree rho must be finite and >= 0");
  std::vector<std::size_t> out;
  out.reserve(dims.size());
  for (std::size_t n : dims) {
    // Tolerance keeps exact products such as 0.1 · 1000 from rounding up.
    const double scaled = std::ceil(rho * static_cast<double>(n) - 1e-9);
    out.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(scaled, 1.0)), 1, n));
  }
  return out;
}

std::size_t FactorSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& u : factors) n += u.size();
  return n;
}

Matrix orthonormal_init(std::size_t n_prime, std::size_t n, std::uint64_t seed) {
  if (n_prime == 0 || n_prime > n) {
    throw UsageError("orthonormal_init: need 1 <= n_prime <= n, got " + std::to_string(n_prime) + " and " +
                     std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(n_prime);
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd& r = qr.matrixQR();
  Matrix u(n_prime, n);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double sign = r(j, j) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index i = 0; i < rows; ++i)
      u(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = sign * q(i, j);
  }
  return u;
}

FactorSet init_factors(std::span<const std::size_t> dims, std::span<const std::size_t> cores, std::uint64_t seed) {
  if (dims.size() != cores.size()) throw ShapeError("init_factors: dims and core dims differ in length");
  FactorSet f;
  for (std::size_t m = 0; m < dims.size(); ++m) f.factors.push_back(orthonormal_init(cores[m], dims[m], seed + m));
  return f;
}

double orthonormality_residual(const Matrix& u) {
  return frobenius_norm(matmul(u, transpose(u)) - Matrix::identity(u.rows()));
}

DenseTensor reduce(const DenseTensor& h, const FactorSet& f) {
  if (h.order() != f.factors.size() + 1) {
    throw ShapeError("reduce: tensor " + shape_string(h.shape()) + " needs " + std::to_string(f.factors.size()) +
                     " node modes plus a feature mode");
  }
  DenseTensor z = h;
  for (std::size_t m = 0; m < f.factors.size(); ++m) z = mode_product(z, transpose(f.factors[m]), m);
  return z;
}

DenseTensor reconstruct(const DenseTensor& y, const FactorSet& f) {
  if (y.order() != f.factors.size() + 1) {
    throw ShapeError("reconstruct: tensor " + shape_string(y.shape()) + " needs " +
                     std::to_string(f.factors.size()) + " core modes plus a feature mode");
  }
  DenseTensor r = y;
  for (std::size_t m = 0; m < f.factors.size(); ++m) r = mode_product(r, f.factors[m], m);
  return r;
}

namespace {

DenseTensor tll_linear(const DenseTensor& x, std::span<const Matrix> weights) {
  if (weights.size() != x.order()) {
    throw ShapeError("tensor linear layer: " + std::to_string(weights.size()) + " weights for tensor " +
                     shape_string(x.shape()));
  }
  DenseTensor y = x;
  for (std::size_t m = 0; m < weights.size(); ++m) y = mode_product(y, weights[m], m);
  return y;
}

void add_bias(DenseTensor& y, const Matrix& bias) {
  const std::size_t d = y.shape().back();
  if (bias.size() != d) {
    throw ShapeError("bias of length " + std::to_string(bias.size()) + " for " + std::to_string(d) + " features");
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias.data()[i % d];
}

DenseTensor sigmoid(DenseTensor x) {
  for (double& v : x.data()) v = logistic(v);
  return x;
}

DenseTensor tanh(DenseTensor x) {
  for (double& v : x.data()) v = std::tanh(v);
  return x;
}

TlstmState combine(const std::array<DenseTensor, 4>& pre, const DenseTensor& c_prev, CellOutput out) {
  const DenseTensor f = sigmoid(pre[kForget]);
  const DenseTensor i = sigmoid(pre[kInput]);
  const DenseTensor o = sigmoid(pre[kOutput]);
  const DenseTensor cand = tanh(pre[kCandidate]);
  TlstmState next;
  next.c = hadamard(f, c_prev) + hadamard(i, cand);
  next.y = hadamard(o, out == CellOutput::sigmoid ? sigmoid(next.c) : tanh(next.c));
  return next;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Matrix gate_bias(std::size_t rows, std::size_t cols, Gate g) {
  return Matrix(rows, cols, g == kForget ? 1.0 : 0.0);
}

}  // namespace

DenseTensor tll_forward(const DenseTensor& x, std::span<const Matrix> weights, const Matrix& bias) {
  DenseTensor y = tll_linear(x, weights);
  add_bias(y, bias);
  return y;
}

CellOutput parse_cell_output(const std::string& name) {
  if (name == "sigmoid" || name == "logistic") return CellOutput::sigmoid;
  if (name == "tanh") return CellOutput::tanh;
  throw UsageError("unknown cell output '" + name + "'");
}

std::string to_string(CellOutput c) { return c == CellOutput::sigmoid ? "sigmoid" : "tanh"; }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t TlstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : gates) {
    for (const auto& w : g.input) n += w.size();
    for (const auto& w : g.state) n += w.size();
    n += g.bias.size();
  }
  return n;
}

TlstmParams init_tlstm(std::span<const std::size_t> cores, std::size_t d, std::size_t d_out, std::mt19937_64& rng) {
  TlstmParams p;
  for (std::size_t g = 0; g < 4; ++g) {
    GateParams& gate = p.gates[g];
    for (std::size_t n : cores) gate.input.push_back(uniform_matrix(n, n, glorot_limit(n, n), rng));
    gate.input.push_back(uniform_matrix(d, d_out, glorot_limit(d, d_out), rng));
    for (std::size_t n : cores) gate.state.push_back(orthonormal_init(n, n, rng()));
    gate.state.push_back(0.1 * orthonormal_init(d_out, d_out, rng()));
    gate.bias = gate_bias(1, d_out, static_cast<Gate>(g));
  }
  return p;
}

TlstmState TlstmState::zeros(const Shape& shape) { return TlstmState{DenseTensor(shape), DenseTensor(shape)}; }

TlstmState tlstm_step(const DenseTensor& z, const TlstmState& prev, const TlstmParams& params) {
  if (prev.y.shape() != prev.c.shape()) throw ShapeError("tlstm_step: hidden and cell state shapes differ");
  std::array<DenseTensor, 4> pre;
  for (std::size_t g = 0; g < 4; ++g) {
    const GateParams& gate = params.gates[g];
    pre[g] = tll_forward(z, gate.input, gate.bias) + tll_linear(prev.y, gate.state);
  }
  if (pre[0].shape() != prev.c.shape()) {
    throw ShapeError("tlstm_step: gate shape " + shape_string(pre[0].shape()) + " differs from state " +
                     shape_string(prev.c.shape()));
  }
  return combine(pre, prev.c, params.cell_output);
}

std::size_t NodeLstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : gates) n += g.input.size() + g.state.size() + g.bias.size();
  return n;
}

NodeLstmParams init_node_lstm(std::size_t series, std::size_t d, std::size_t d_out, std::mt19937_64& rng) {
  NodeLstmParams p;
  for (std::size_t g = 0; g < 4; ++g) {
    p.gates[g].input = uniform_matrix(series, d * d_out, glorot_limit(d, d_out), rng);
    p.gates[g].state = uniform_matrix(series, d_out * d_out, 0.1 * glorot_limit(d_out, d_out), rng);
    p.gates[g].bias = gate_bias(series, d_out, static_cast<Gate>(g));
  }
  return p;
}

TlstmState node_lstm_step(const Matrix& x, const TlstmState& prev, const NodeLstmParams& params) {
  const std::size_t series = x.rows();
  const std::size_t d = x.cols();
  const std::size_t d_out = params.gates[0].bias.cols();
  if (params.gates[0].input.rows() != series || params.gates[0].input.cols() != d * d_out ||
      prev.y.shape() != Shape{series, d_out} || prev.c.shape() != Shape{series, d_out}) {
    throw ShapeError("node_lstm_step: shape mismatch");
  }
  std::array<DenseTensor, 4> pre;
  for (std::size_t g = 0; g < 4; ++g) {
    const NodeLstmGate& gate = params.gates[g];
    DenseTensor out({series, d_out});
    for (std::size_t i = 0; i < series; ++i)
      for (std::size_t j = 0; j < d_out; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += x(i, k) * gate.input(i, k * d_out + j);
        for (std::size_t k = 0; k < d_out; ++k) s += prev.y[i * d_out + k] * gate.state(i, k * d_out + j);
        out[i * d_out + j] = s + gate.bias(i, j);
      }
    pre[g] = std::move(out);
  }
  return combine(pre, prev.c, params.cell_output);
}

std::size_t SharedLstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : gates) n += g.input.size() + g.state.size() + g.bias.size();
  return n;
}

SharedLstmParams init_shared_lstm(std::size_t d, std::size_t d_out, std::mt19937_64& rng) {
  SharedLstmParams p;
  for (std::size_t g = 0; g < 4; ++g) {
    p.gates[g].input = uniform_matrix(d, d_out, glorot_limit(d, d_out), rng);
    p.gates[g].state = 0.1 * orthonormal_init(d_out, d_out, rng());
    p.gates[g].bias = gate_bias(1, d_out, static_cast<Gate>(g));
  }
  return p;
}

TlstmState shared_lstm_step(const Matrix& x, const TlstmState& prev, const SharedLstmParams& params) {
  const std::size_t d_out = params.gates[0].bias.cols();
  if (prev.y.shape() != Shape{x.rows(), d_out}) throw ShapeError("shared_lstm_step: state shape mismatch");
  std::array<DenseTensor, 4> pre;
  const Matrix y = to_matrix(prev.y);
  for (std::size_t g = 0; g < 4; ++g) {
    const SharedLstmGate& gate = params.gates[g];
    Matrix s = matmul(x, gate.input) + matmul(y, gate.state);
    for (std::size_t i = 0; i < s.rows(); ++i)
      for (std::size_t j = 0; j < d_out; ++j) s(i, j) += gate.bias(0, j);
    pre[g] = DenseTensor::from_matrix(s);
  }
  return combine(pre, prev.c, params.cell_output);
}

std::uint64_t count_params_tlstm(std::span<const std::size_t> dims, double rho, std::size_t d, std::size_t d_out) {
  const auto cores = core_dims(rho, dims);
  std::uint64_t n = 4ULL * d_out * (d + d_out + 1);
  for (std::size_t m = 0; m < dims.size(); ++m) {
    n += 8ULL * cores[m] * cores[m];
    n += static_cast<std::uint64_t>(cores[m]) * dims[m];
  }
  return n;
}

std::uint64_t count_params_mlstm(std::span<const std::size_t> dims, std::size_t d, std::size_t d_out) {
  std::uint64_t series = 1;
  for (std::size_t n : dims) series *= n;
  return 4ULL * d_out * (d + d_out + 1) * series;
}

double rho_upper_bound(std::span<const std::size_t> dims, std::size_t d, std::size_t d_out) {
  if (dims.empty()) throw UsageError("rho_upper_bound: no dimensions");
  double series = 1.0;
  double squares = 0.0;
  for (std::size_t n : dims) {
    series *= static_cast<double>(n);
    squares += static_cast<double>(n) * static_cast<double>(n);
  }
  const double cell = static_cast<double>(d_out) * static_cast<double>(d + d_out + 1);
  return std::sqrt((series - 1.0) * cell / (2.0 * squares) + 1.0 / 256.0) - 1.0 / 16.0;
}

}  // namespace net3
