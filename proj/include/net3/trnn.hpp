#pragma once

// Tensor recurrent machinery: Tucker reduction/reconstruction of node
// embeddings, the tensor linear layer, the tensor LSTM cell, per-series LSTM
// baselines, and parameter-count arithmetic.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "net3/tensor.hpp"

namespace net3 {

/// N'_m = ceil(rho · N_m) clamped to [1, N_m].
std::vector<std::size_t> core_dims(double rho, std::span<const std::size_t> dims);

/// U_m of size N'_m × N_m. Reduction applies U_mᵀ, reconstruction U_m.
struct FactorSet {
  std::vector<Matrix> factors;

  std::size_t parameter_count() const;
};

/// Rows orthonormal: QR of a seeded Gaussian n × n_prime matrix, transposed.
Matrix orthonormal_init(std::size_t n_prime, std::size_t n, std::uint64_t seed);

FactorSet init_factors(std::span<const std::size_t> dims, std::span<const std::size_t> cores, std::uint64_t seed);

/// ‖U Uᵀ − I‖_F
double orthonormality_residual(const Matrix& u);

/// Z = H ∏_m ×_m U_mᵀ; the trailing feature mode is left alone.
DenseTensor reduce(const DenseTensor& h, const FactorSet& f);

/// R = Y ∏_m ×_m U_m
DenseTensor reconstruct(const DenseTensor& y, const FactorSet& f);

/// x ∏_{m=1}^{M+1} ×_m W_m + b with b (1 × d') broadcast over all node positions.
DenseTensor tll_forward(const DenseTensor& x, std::span<const Matrix> weights, const Matrix& bias);

enum class CellOutput { sigmoid, tanh };

CellOutput parse_cell_output(const std::string& name);
std::string to_string(CellOutput c);

/// One gate's pair of tensor linear layers (input path and state path) and
/// the shared bias. Each path holds one matrix per node mode then the
/// feature-mode matrix.
struct GateParams {
  std::vector<Matrix> input;
  std::vector<Matrix> state;
  Matrix bias;
};

enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };

struct TlstmParams {
  std::array<GateParams, 4> gates;
  CellOutput cell_output = CellOutput::sigmoid;

  std::size_t parameter_count() const;
};

/// Mode maps are N'_m × N'_m on both paths; feature maps d × d' (input) and
/// d' × d' (state). Forget-gate bias starts at 1, other biases at 0.
TlstmParams init_tlstm(std::span<const std::size_t> cores, std::size_t d, std::size_t d_out, std::mt19937_64& rng);

struct TlstmState {
  DenseTensor y;
  DenseTensor c;

  static TlstmState zeros(const Shape& shape);
};

/// F, I, O = σ(TLL_z(Z) + TLL_y(Y)), C̃ = tanh(...), C = F⊙C_prev + I⊙C̃,
/// Y = O ⊙ σ(C) (or tanh(C) when configured).
TlstmState tlstm_step(const DenseTensor& z, const TlstmState& prev, const TlstmParams& params);

/// Independent LSTMs, one per series. Row i of each matrix holds series i's
/// weights: input (P × d·d'), state (P × d'·d'), bias (P × d').
struct NodeLstmGate {
  Matrix input;
  Matrix state;
  Matrix bias;
};

struct NodeLstmParams {
  std::array<NodeLstmGate, 4> gates;
  CellOutput cell_output = CellOutput::sigmoid;

  std::size_t parameter_count() const;
};

NodeLstmParams init_node_lstm(std::size_t series, std::size_t d, std::size_t d_out, std::mt19937_64& rng);

/// x: (P × d) inputs; state tensors are (P × d').
TlstmState node_lstm_step(const Matrix& x, const TlstmState& prev, const NodeLstmParams& params);

/// A single LSTM shared by every series.
struct SharedLstmGate {
  Matrix input;
  Matrix state;
  Matrix bias;
};

struct SharedLstmParams {
  std::array<SharedLstmGate, 4> gates;
  CellOutput cell_output = CellOutput::sigmoid;

  std::size_t parameter_count() const;
};

SharedLstmParams init_shared_lstm(std::size_t d, std::size_t d_out, std::mt19937_64& rng);
TlstmState shared_lstm_step(const Matrix& x, const TlstmState& prev, const SharedLstmParams& params);

double logistic(double x);

/// 4d'(d+d'+1) + 8 Σ N'_m² + Σ N'_m N_m with N'_m = core_dims(rho, dims).
std::uint64_t count_params_tlstm(std::span<const std::size_t> dims, double rho, std::size_t d, std::size_t d_out);

/// 4d'(d+d'+1) ∏ N_m
std::uint64_t count_params_mlstm(std::span<const std::size_t> dims, std::size_t d, std::size_t d_out);

/// sqrt((∏N_m − 1) d'(d+d'+1) / (2 Σ N_m²) + 1/256) − 1/16
double rho_upper_bound(std::span<const std::size_t> dims, std::size_t d, std::size_t d_out);

}  // namespace net3
