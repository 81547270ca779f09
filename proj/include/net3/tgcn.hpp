#pragma once

// Graph convolution on tensor graphs.
//
// A TGCL sums one term per subset of the networked modes: the input is
// filtered by Ã_m on every mode in the subset and then mapped to the output
// channels by that subset's own Θ. Subsets are keyed by an indicator vector
// over the K non-identity modes; the empty subset is the self term Θ₀.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "net3/graph.hpp"
#include "net3/tensor.hpp"

namespace net3 {

enum class Activation { relu, tanh, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
double activate(Activation a, double x);
DenseTensor activate(Activation a, DenseTensor x);

/// One bit per networked (non-identity) mode; bit k set means Ã of the k-th
/// networked mode is applied.
struct IndicatorVector {
  std::vector<std::uint8_t> bits;

  static IndicatorVector from_index(std::size_t index, std::size_t k);
  std::size_t index() const;
  bool none() const;
};

/// Modes whose network is not the identity, in increasing order.
std::vector<std::size_t> networked_modes(std::span<const ModeNetwork> nets);

struct TgclParams {
  /// Networked modes the indicator bits refer to.
  std::vector<std::size_t> modes;
  /// 2^K matrices (d × d'), position = IndicatorVector::index(); thetas[0] is Θ₀.
  std::vector<Matrix> thetas;
  Activation activation = Activation::relu;

  const Matrix& theta(const IndicatorVector& p) const { return thetas.at(p.index()); }
  std::size_t in_channels() const { return thetas.front().rows(); }
  std::size_t out_channels() const { return thetas.front().cols(); }
  std::size_t parameter_count() const;
};

/// Θ entries i.i.d. uniform on ±sqrt(6 / (d + d')).
TgclParams init_tgcl(std::span<const ModeNetwork> nets, std::size_t d_in, std::size_t d_out,
                     Activation activation, std::mt19937_64& rng);

/// σ( Σ_{p≠0} x ∏_{p_m=1} ×_m Ã_m ×_{M} Θ_p + x ×_{M} Θ₀ ) for x of shape N_1×…×N_M×d.
DenseTensor tgcl_forward(const DenseTensor& x, std::span<const ModeNetwork> nets, const TgclParams& params);

/// x ∏_{m ∈ subset} ×_m Ã_m for every subset, indexed like TgclParams::thetas.
std::vector<DenseTensor> graph_filtered_inputs(const DenseTensor& x, std::span<const ModeNetwork> nets,
                                               std::span<const std::size_t> modes);

/// Ablation without cross-mode terms: one Θ_m per mode plus Θ₀.
struct ItgcnParams {
  std::vector<Matrix> mode_thetas;
  Matrix theta0;
  Activation activation = Activation::relu;

  std::size_t parameter_count() const;
};

ItgcnParams init_itgcn(std::size_t modes, std::size_t d_in, std::size_t d_out, Activation activation,
                       std::mt19937_64& rng);

/// σ( Σ_m x ×_m Ã_m ×_{M} Θ_m + x ×_{M} Θ₀ )
DenseTensor itgcn_forward(const DenseTensor& x, std::span<const ModeNetwork> nets, const ItgcnParams& params);

/// Single-graph layer σ(Ã X Θ₁ + X Θ₀) on a flat adjacency.
struct FlatGcnParams {
  Matrix theta0;
  Matrix theta1;
  Activation activation = Activation::relu;

  std::size_t parameter_count() const { return theta0.size() + theta1.size(); }
};

FlatGcnParams init_flat_gcn(std::size_t d_in, std::size_t d_out, Activation activation, std::mt19937_64& rng);

/// x is the (nodes × d) signal, a_flat the normalized flat adjacency.
Matrix gcn_flat_forward(const Matrix& x, const Matrix& a_flat, const FlatGcnParams& params);

/// Node index permutation between a tensor N_1×…×N_M×d and the (∏N_m)×d
/// matrix whose rows follow vectorize() order (first mode fastest).
std::vector<std::size_t> flat_node_gather(const Shape& node_dims, std::size_t channels);
Matrix flatten_nodes(const DenseTensor& x);
DenseTensor unflatten_nodes(const Matrix& x, const Shape& node_dims);

/// Operation count 2^{K−1} ∏N_m (2 + Σ_{k≤K} N_k) of the tensor graph convolution.
double tgcl_flops(std::span<const std::size_t> dims, std::size_t k);

}  // namespace net3
