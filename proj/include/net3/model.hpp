#pragma once

// End-to-end model: graph layer → Tucker reduction → tensor LSTM →
// reconstruction → linear read-out of the next snapshot, plus the windowed
// training objective and its gradient.
//
// Baseline variants swap the graph layer (iTGCN, flat Kronecker GCN) or the
// recurrent part (separate LSTM per series, one shared LSTM).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "net3/graph.hpp"
#include "net3/tensor.hpp"
#include "net3/tgcn.hpp"
#include "net3/trnn.hpp"

namespace net3 {

enum class Variant { net3, itgcn, gcn_flat, mlstm, lstm };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::net3;
  /// Node dimensions N_1 … N_M of one snapshot.
  Shape dims;
  /// Graph-layer channels d.
  std::size_t hidden = 8;
  /// Recurrent channels d'.
  std::size_t state = 8;
  double rho = 0.8;
  Activation activation = Activation::relu;
  CellOutput cell_output = CellOutput::sigmoid;
};

/// Linear read-out from [H, R] (d + d' features) to one value per node.
struct Mlp {
  Matrix weight;
  Matrix bias;
};

struct TrnnParams {
  FactorSet factors;
  TlstmParams cell;
};

using GraphLayerParams = std::variant<TgclParams, ItgcnParams, FlatGcnParams>;
using TemporalParams = std::variant<TrnnParams, NodeLstmParams, SharedLstmParams>;

struct Net3Params {
  ModelConfig config;
  GraphLayerParams graph;
  TemporalParams temporal;
  Mlp mlp;

  std::size_t parameter_count() const;
};

Net3Params init_params(const ModelConfig& config, std::span<const ModeNetwork> nets, std::uint64_t seed);

using BlockVisitor = std::function<void(const std::string& name, Matrix& block)>;
using ConstBlockVisitor = std::function<void(const std::string& name, const Matrix& block)>;

/// Visits every trainable matrix in a fixed order with a stable name.
void for_each_block(Net3Params& params, const BlockVisitor& visit);
void for_each_block(const Net3Params& params, const ConstBlockVisitor& visit);

/// Same structure, all blocks zero.
Net3Params zeros_like(const Net3Params& params);

/// Networks plus anything derived from them once per dataset.
struct GraphContext {
  std::vector<ModeNetwork> nets;
  /// Normalized A_M ⊗ … ⊗ A_1; only populated for the flat-GCN variant.
  Matrix flat_normalized;
};

GraphContext make_context(std::vector<ModeNetwork> nets, Variant variant);

struct StepTrace {
  DenseTensor h;
  DenseTensor z;
  DenseTensor y;
  DenseTensor c;
  DenseTensor r;
  /// Predicted next snapshot, shape N_1 × … × N_M.
  DenseTensor prediction;
};

struct ForwardTrace {
  std::vector<StepTrace> steps;

  const DenseTensor& last_prediction() const { return steps.back().prediction; }
};

/// Runs the window from a zero recurrent state. Snapshots are N_1 × … × N_M.
ForwardTrace forward(std::span<const DenseTensor> window, const GraphContext& ctx, const Net3Params& params);

/// Rolls the one-step model forward `horizon` times, feeding each prediction
/// back as the newest input while keeping the window length fixed.
std::vector<DenseTensor> predict_multi_step(std::span<const DenseTensor> history, const GraphContext& ctx,
                                            const Net3Params& params, std::size_t horizon);

struct LossTerms {
  double prediction = 0.0;
  double tucker = 0.0;
  double orthonormality = 0.0;
  double total = 0.0;
};

/// ‖Ŝ − S‖² over weighted targets + μ₁ Σ_t ‖H_t − Z_t ∏×U_m‖² + μ₂ Σ_m ‖U_m U_mᵀ − I‖².
/// `weights` is 1 on observed target entries and 0 elsewhere.
LossTerms loss(const ForwardTrace& trace, const DenseTensor& target, const DenseTensor& weights,
               const Net3Params& params, double mu1, double mu2);

struct WindowSample {
  std::vector<DenseTensor> inputs;
  DenseTensor target;
  DenseTensor weights;
};

/// Records the window on a tape, back-propagates the objective, and adds the
/// parameter gradients into `grads` (same structure as `params`).
LossTerms loss_and_gradient(const WindowSample& sample, const GraphContext& ctx, const Net3Params& params,
                            double mu1, double mu2, Net3Params& grads);

}  // namespace net3
