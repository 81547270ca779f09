#include "net3/model.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <type_traits>
#include <unordered_map>
#include <utility>

#include "net3/autodiff.hpp"
#include "net3/error.hpp"

namespace net3 {

Variant parse_variant(const std::string& name) {
  if (name == "net3") return Variant::net3;
  if (name == "itgcn") return Variant::itgcn;
  if (name == "gcn_flat" || name == "gcn-flat") return Variant::gcn_flat;
  if (name == "mlstm") return Variant::mlstm;
  if (name == "lstm") return Variant::lstm;
  throw UsageError("unknown model variant '" + name + "' (expected net3, itgcn, gcn_flat, mlstm or lstm)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::net3: return "net3";
    case Variant::itgcn: return "itgcn";
    case Variant::gcn_flat: return "gcn_flat";
    case Variant::mlstm: return "mlstm";
    case Variant::lstm: return "lstm";
  }
  return "net3";
}

namespace {

const char* const kGateNames[4] = {"forget", "input", "output", "candidate"};

std::string two_digits(std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

template <class P, class F>
void visit_blocks(P& params, F&& visit) {
  std::visit(
      [&](auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, TgclParams>) {
          for (std::size_t i = 0; i < g.thetas.size(); ++i) visit("tgcl.theta." + two_digits(i), g.thetas[i]);
        } else if constexpr (std::is_same_v<G, ItgcnParams>) {
          for (std::size_t m = 0; m < g.mode_thetas.size(); ++m)
            visit("itgcn.theta." + std::to_string(m), g.mode_thetas[m]);
          visit("itgcn.theta0", g.theta0);
        } else {
          visit("gcn.theta0", g.theta0);
          visit("gcn.theta1", g.theta1);
        }
      },
      params.graph);
  std::visit(
      [&](auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TrnnParams>) {
          for (std::size_t m = 0; m < t.factors.factors.size(); ++m)
            visit("factors.U" + std::to_string(m), t.factors.factors[m]);
          for (std::size_t g = 0; g < 4; ++g) {
            auto& gate = t.cell.gates[g];
            const std::string base = std::string("tlstm.") + kGateNames[g];
            for (std::size_t m = 0; m < gate.input.size(); ++m) visit(base + ".input." + std::to_string(m), gate.input[m]);
            for (std::size_t m = 0; m < gate.state.size(); ++m) visit(base + ".state." + std::to_string(m), gate.state[m]);
            visit(base + ".bias", gate.bias);
          }
        } else {
          const std::string prefix = std::is_same_v<T, NodeLstmParams> ? "mlstm." : "lstm.";
          for (std::size_t g = 0; g < 4; ++g) {
            auto& gate = t.gates[g];
            const std::string base = prefix + kGateNames[g];
            visit(base + ".input", gate.input);
            visit(base + ".state", gate.state);
            visit(base + ".bias", gate.bias);
          }
        }
      },
      params.temporal);
  visit("mlp.weight", params.mlp.weight);
  visit("mlp.bias", params.mlp.bias);
}

bool uses_trnn(Variant v) { return v == Variant::net3 || v == Variant::itgcn || v == Variant::gcn_flat; }

}  // namespace

void for_each_block(Net3Params& params, const BlockVisitor& visit) { visit_blocks(params, visit); }

void for_each_block(const Net3Params& params, const ConstBlockVisitor& visit) { visit_blocks(params, visit); }

std::size_t Net3Params::parameter_count() const {
  std::size_t n = 0;
  for_each_block(*this, [&n](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

Net3Params zeros_like(const Net3Params& params) {
  Net3Params z = params;
  for_each_block(z, [](const std::string&, Matrix& m) { m = Matrix(m.rows(), m.cols()); });
  return z;
}

Net3Params init_params(const ModelConfig& config, std::span<const ModeNetwork> nets, std::uint64_t seed) {
  if (config.dims.empty()) throw UsageError("init_params: no node dimensions");
  if (nets.size() != config.dims.size()) throw ShapeError("init_params: one network per mode is required");
  for (std::size_t m = 0; m < nets.size(); ++m) {
    if (nets[m].size() != config.dims[m]) {
      throw ShapeError("init_params: network of mode " + std::to_string(m) + " has " +
                       std::to_string(nets[m].size()) + " nodes, expected " + std::to_string(config.dims[m]));
    }
  }
  if (config.hidden == 0 || config.state == 0) throw UsageError("init_params: channel counts must be positive");

  std::mt19937_64 rng(seed);
  Net3Params p;
  p.config = config;
  const std::size_t d = config.hidden;
  const std::size_t d_out = config.state;

  switch (config.variant) {
    case Variant::itgcn: p.graph = init_itgcn(nets.size(), 1, d, config.activation, rng); break;
    case Variant::gcn_flat: p.graph = init_flat_gcn(1, d, config.activation, rng); break;
    default: p.graph = init_tgcl(nets, 1, d, config.activation, rng); break;
  }

  if (uses_trnn(config.variant)) {
    const auto cores = core_dims(config.rho, config.dims);
    TrnnParams t;
    t.factors = init_factors(config.dims, cores, rng());
    t.cell = init_tlstm(cores, d, d_out, rng);
    t.cell.cell_output = config.cell_output;
    p.temporal = std::move(t);
  } else if (config.variant == Variant::mlstm) {
    NodeLstmParams t = init_node_lstm(shape_size(config.dims), d, d_out, rng);
    t.cell_output = config.cell_output;
    p.temporal = std::move(t);
  } else {
    SharedLstmParams t = init_shared_lstm(d, d_out, rng);
    t.cell_output = config.cell_output;
    p.temporal = std::move(t);
  }

  const std::size_t features = d + d_out;
  std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / static_cast<double>(features + 1)),
                                              std::sqrt(6.0 / static_cast<double>(features + 1)));
  p.mlp.weight = Matrix(features, 1);
  for (double& v : p.mlp.weight.data()) v = dist(rng);
  p.mlp.bias = Matrix(1, 1);
  return p;
}

GraphContext make_context(std::vector<ModeNetwork> nets, Variant variant) {
  GraphContext ctx;
  if (variant == Variant::gcn_flat) ctx.flat_normalized = symmetric_normalize(flatten_kronecker(nets));
  ctx.nets = std::move(nets);
  return ctx;
}

namespace {

void check_snapshot(const DenseTensor& s, const ModelConfig& config) {
  if (s.shape() != config.dims) {
    throw ShapeError("snapshot has shape " + shape_string(s.shape()) + ", model expects " +
                     shape_string(config.dims));
  }
}

DenseTensor with_feature_mode(const DenseTensor& s) {
  Shape shape = s.shape();
  shape.push_back(1);
  return s.reshaped(std::move(shape));
}

Shape state_shape(const Net3Params& params) {
  const ModelConfig& c = params.config;
  if (uses_trnn(c.variant)) {
    Shape s = core_dims(c.rho, c.dims);
    s.push_back(c.state);
    return s;
  }
  return Shape{shape_size(c.dims), c.state};
}

DenseTensor graph_layer(const DenseTensor& x, const GraphContext& ctx, const Net3Params& params) {
  return std::visit(
      [&](const auto& g) -> DenseTensor {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, TgclParams>) {
          return tgcl_forward(x, ctx.nets, g);
        } else if constexpr (std::is_same_v<G, ItgcnParams>) {
          return itgcn_forward(x, ctx.nets, g);
        } else {
          return unflatten_nodes(gcn_flat_forward(flatten_nodes(x), ctx.flat_normalized, g), params.config.dims);
        }
      },
      params.graph);
}

DenseTensor read_out(const DenseTensor& h, const DenseTensor& r, const Net3Params& params) {
  const std::size_t feature = params.config.dims.size();
  DenseTensor out = mode_product(concat_last(h, r), params.mlp.weight, feature);
  for (double& v : out.data()) v += params.mlp.bias(0, 0);
  return out.reshaped(params.config.dims);
}

}  // namespace

ForwardTrace forward(std::span<const DenseTensor> window, const GraphContext& ctx, const Net3Params& params) {
  if (window.empty()) throw UsageError("forward: empty input window");
  const ModelConfig& config = params.config;
  const std::size_t series = shape_size(config.dims);
  ForwardTrace trace;
  TlstmState state = TlstmState::zeros(state_shape(params));
  for (const DenseTensor& snapshot : window) {
    check_snapshot(snapshot, config);
    StepTrace step;
    step.h = graph_layer(with_feature_mode(snapshot), ctx, params);
    Shape feature_shape = config.dims;
    feature_shape.push_back(config.state);
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, TrnnParams>) {
            step.z = reduce(step.h, t.factors);
            state = tlstm_step(step.z, state, t.cell);
            step.r = reconstruct(state.y, t.factors);
          } else {
            step.z = step.h;
            const Matrix x = to_matrix(step.h.reshaped({series, config.hidden}));
            if constexpr (std::is_same_v<T, NodeLstmParams>) {
              state = node_lstm_step(x, state, t);
            } else {
              state = shared_lstm_step(x, state, t);
            }
            step.r = state.y.reshaped(feature_shape);
          }
        },
        params.temporal);
    step.y = state.y;
    step.c = state.c;
    step.prediction = read_out(step.h, step.r, params);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

std::vector<DenseTensor> predict_multi_step(std::span<const DenseTensor> history, const GraphContext& ctx,
                                            const Net3Params& params, std::size_t horizon) {
  std::vector<DenseTensor> window(history.begin(), history.end());
  std::vector<DenseTensor> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    DenseTensor next = forward(window, ctx, params).last_prediction();
    window.erase(window.begin());
    window.push_back(next);
    out.push_back(std::move(next));
  }
  return out;
}

LossTerms loss(const ForwardTrace& trace, const DenseTensor& target, const DenseTensor& weights,
               const Net3Params& params, double mu1, double mu2) {
  if (trace.steps.empty()) throw UsageError("loss: empty trace");
  const DenseTensor& pred = trace.last_prediction();
  if (target.shape() != pred.shape() || weights.shape() != pred.shape()) {
    throw ShapeError("loss: target " + shape_string(target.shape()) + " does not match prediction " +
                     shape_string(pred.shape()));
  }
  LossTerms terms;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    terms.prediction += weights[i] * e * e;
  }
  if (const auto* t = std::get_if<TrnnParams>(&params.temporal)) {
    for (const StepTrace& step : trace.steps) {
      const double r = frobenius_norm(step.h - reconstruct(step.z, t->factors));
      terms.tucker += r * r;
    }
    for (const Matrix& u : t->factors.factors) {
      const double r = orthonormality_residual(u);
      terms.orthonormality += r * r;
    }
  }
  terms.total = terms.prediction + mu1 * terms.tucker + mu2 * terms.orthonormality;
  return terms;
}

namespace {

using ad::Tape;
using ad::Var;

class TapedModel {
 public:
  TapedModel(Tape& tape, const GraphContext& ctx, const Net3Params& params) : t_(tape), ctx_(ctx), p_(params) {
    for_each_block(params, [this](const std::string&, const Matrix& m) {
      const Var v = t_.variable(m);
      leaves_.push_back(v);
      index_.emplace(&m, v);
    });
  }

  const std::vector<Var>& leaves() const { return leaves_; }

  Var leaf(const Matrix& m) const { return index_.at(&m); }

  Var graph_layer(Var x) {
    const std::size_t feature = p_.config.dims.size();
    return std::visit(
        [&](const auto& g) -> Var {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, TgclParams>) {
            const std::size_t terms = g.thetas.size();
            std::vector<Var> filtered(terms);
            filtered[0] = x;
            for (std::size_t idx = 1; idx < terms; ++idx) {
              std::size_t high = 0;
              for (std::size_t k = 0; k < g.modes.size(); ++k)
                if (idx >> k & 1U) high = k;
              const std::size_t rest = idx & ~(std::size_t{1} << high);
              filtered[idx] = ad::mode_product(t_, filtered[rest], network(g.modes[high]), g.modes[high]);
            }
            std::optional<Var> acc;
            for (std::size_t idx = 1; idx < terms; ++idx) {
              const Var term = ad::mode_product(t_, filtered[idx], leaf(g.thetas[idx]), feature);
              acc = acc ? ad::add(t_, *acc, term) : term;
            }
            const Var self = ad::mode_product(t_, x, leaf(g.thetas[0]), feature);
            return ad::activation(t_, acc ? ad::add(t_, *acc, self) : self, g.activation);
          } else if constexpr (std::is_same_v<G, ItgcnParams>) {
            Var acc{};
            for (std::size_t m = 0; m < g.mode_thetas.size(); ++m) {
              const Var term =
                  ad::mode_product(t_, ad::mode_product(t_, x, network(m), m), leaf(g.mode_thetas[m]), feature);
              acc = m == 0 ? term : ad::add(t_, acc, term);
            }
            acc = ad::add(t_, acc, ad::mode_product(t_, x, leaf(g.theta0), feature));
            return ad::activation(t_, acc, g.activation);
          } else {
            const Shape& dims = p_.config.dims;
            const std::size_t nodes = shape_size(dims);
            const Var flat = ad::gather(t_, x, flat_node_gather(dims, 1), Shape{nodes, 1});
            if (!flat_adjacency_) flat_adjacency_ = t_.constant(transpose(ctx_.flat_normalized));
            const Var propagated = ad::mode_product(t_, flat, *flat_adjacency_, 0);
            Var acc = ad::mode_product(t_, propagated, leaf(g.theta1), 1);
            acc = ad::add(t_, acc, ad::mode_product(t_, flat, leaf(g.theta0), 1));
            acc = ad::activation(t_, acc, g.activation);
            const std::size_t d = g.theta0.cols();
            Shape full = dims;
            full.push_back(d);
            return ad::gather(t_, acc, inverse(flat_node_gather(dims, d)), full);
          }
        },
        p_.graph);
  }

  struct Step {
    Var h;
    Var z;
    Var prediction;
  };

  Step step(const DenseTensor& snapshot, Var& y, Var& c) {
    const ModelConfig& config = p_.config;
    const std::size_t feature = config.dims.size();
    const std::size_t series = shape_size(config.dims);
    Step s;
    s.h = graph_layer(t_.constant(with_feature_mode(snapshot)));
    Shape feature_shape = config.dims;
    feature_shape.push_back(config.state);
    Var r{};
    std::visit(
        [&](const auto& tp) {
          using T = std::decay_t<decltype(tp)>;
          if constexpr (std::is_same_v<T, TrnnParams>) {
            s.z = reduce(s.h, tp.factors);
            std::array<Var, 4> pre;
            for (std::size_t g = 0; g < 4; ++g) {
              const GateParams& gate = tp.cell.gates[g];
              Var a = s.z;
              for (std::size_t m = 0; m < gate.input.size(); ++m) a = ad::mode_product(t_, a, leaf(gate.input[m]), m);
              a = ad::add_feature_bias(t_, a, leaf(gate.bias));
              Var b = y;
              for (std::size_t m = 0; m < gate.state.size(); ++m) b = ad::mode_product(t_, b, leaf(gate.state[m]), m);
              pre[g] = ad::add(t_, a, b);
            }
            combine(pre, y, c, tp.cell.cell_output);
            r = reconstruct(y, tp.factors);
          } else {
            s.z = s.h;
            const Var x = ad::reshape(t_, s.h, Shape{series, config.hidden});
            std::array<Var, 4> pre;
            for (std::size_t g = 0; g < 4; ++g) {
              const auto& gate = tp.gates[g];
              if constexpr (std::is_same_v<T, NodeLstmParams>) {
                pre[g] = ad::add(t_, ad::add(t_, ad::nodewise_linear(t_, x, leaf(gate.input)),
                                             ad::nodewise_linear(t_, y, leaf(gate.state))),
                                 leaf(gate.bias));
              } else {
                pre[g] = ad::add_feature_bias(
                    t_, ad::add(t_, ad::matmul(t_, x, leaf(gate.input)), ad::matmul(t_, y, leaf(gate.state))),
                    leaf(gate.bias));
              }
            }
            combine(pre, y, c, tp.cell_output);
            r = ad::reshape(t_, y, feature_shape);
          }
        },
        p_.temporal);
    Var out = ad::mode_product(t_, ad::concat_last(t_, s.h, r), leaf(p_.mlp.weight), feature);
    out = ad::add_feature_bias(t_, out, leaf(p_.mlp.bias));
    s.prediction = ad::reshape(t_, out, config.dims);
    return s;
  }

  Var reconstruct(Var y, const FactorSet& f) {
    Var r = y;
    for (std::size_t m = 0; m < f.factors.size(); ++m) r = ad::mode_product(t_, r, leaf(f.factors[m]), m);
    return r;
  }

  Var reduce(Var h, const FactorSet& f) {
    Var z = h;
    for (std::size_t m = 0; m < f.factors.size(); ++m)
      z = ad::mode_product(t_, z, ad::transpose(t_, leaf(f.factors[m])), m);
    return z;
  }

 private:
  Var network(std::size_t mode) {
    auto it = networks_.find(mode);
    if (it != networks_.end()) return it->second;
    const Var v = t_.constant(ctx_.nets.at(mode).normalized);
    networks_.emplace(mode, v);
    return v;
  }

  static std::vector<std::size_t> inverse(const std::vector<std::size_t>& gather) {
    std::vector<std::size_t> inv(gather.size());
    for (std::size_t i = 0; i < gather.size(); ++i) inv[gather[i]] = i;
    return inv;
  }

  void combine(const std::array<Var, 4>& pre, Var& y, Var& c, CellOutput out) {
    const Var f = ad::sigmoid(t_, pre[kForget]);
    const Var i = ad::sigmoid(t_, pre[kInput]);
    const Var o = ad::sigmoid(t_, pre[kOutput]);
    const Var cand = ad::tanh(t_, pre[kCandidate]);
    c = ad::add(t_, ad::mul(t_, f, c), ad::mul(t_, i, cand));
    y = ad::mul(t_, o, out == CellOutput::sigmoid ? ad::sigmoid(t_, c) : ad::tanh(t_, c));
  }

  Tape& t_;
  const GraphContext& ctx_;
  const Net3Params& p_;
  std::vector<Var> leaves_;
  std::unordered_map<const Matrix*, Var> index_;
  std::unordered_map<std::size_t, Var> networks_;
  std::optional<Var> flat_adjacency_;
};

}  // namespace

LossTerms loss_and_gradient(const WindowSample& sample, const GraphContext& ctx, const Net3Params& params,
                            double mu1, double mu2, Net3Params& grads) {
  if (sample.inputs.empty()) throw UsageError("loss_and_gradient: empty input window");
  for (const auto& s : sample.inputs) check_snapshot(s, params.config);
  check_snapshot(sample.target, params.config);
  check_snapshot(sample.weights, params.config);

  Tape tape;
  TapedModel model(tape, ctx, params);
  const Shape shape = state_shape(params);
  Var y = tape.constant(DenseTensor(shape));
  Var c = tape.constant(DenseTensor(shape));

  const TrnnParams* trnn = std::get_if<TrnnParams>(&params.temporal);
  std::vector<Var> tucker_terms;
  Var prediction{};
  for (const DenseTensor& snapshot : sample.inputs) {
    const auto step = model.step(snapshot, y, c);
    prediction = step.prediction;
    if (trnn != nullptr) {
      tucker_terms.push_back(ad::sum_squares(tape, ad::sub(tape, step.h, model.reconstruct(step.z, trnn->factors))));
    }
  }

  const Var error = ad::sub(tape, prediction, tape.constant(sample.target));
  const Var pred_term = ad::weighted_sum_squares(tape, error, sample.weights);
  Var total = pred_term;
  LossTerms terms;
  terms.prediction = tape.value(pred_term)[0];
  if (trnn != nullptr) {
    Var tucker = tucker_terms.front();
    for (std::size_t i = 1; i < tucker_terms.size(); ++i) tucker = ad::add(tape, tucker, tucker_terms[i]);
    terms.tucker = tape.value(tucker)[0];
    Var orth{};
    for (std::size_t m = 0; m < trnn->factors.factors.size(); ++m) {
      const Matrix& u = trnn->factors.factors[m];
      const Var uv = model.leaf(u);
      const Var gram = ad::matmul(tape, uv, ad::transpose(tape, uv));
      const Var term = ad::sum_squares(tape, ad::sub(tape, gram, tape.constant(Matrix::identity(u.rows()))));
      orth = m == 0 ? term : ad::add(tape, orth, term);
    }
    terms.orthonormality = tape.value(orth)[0];
    total = ad::add(tape, total, ad::add(tape, ad::scale(tape, tucker, mu1), ad::scale(tape, orth, mu2)));
  }
  terms.total = tape.value(total)[0];
  tape.backward(total);

  std::size_t k = 0;
  const auto& leaves = model.leaves();
  for_each_block(grads, [&](const std::string& name, Matrix& g) {
    if (k >= leaves.size()) throw ShapeError("loss_and_gradient: gradient structure does not match parameters");
    const DenseTensor d = tape.grad(leaves[k++]);
    if (d.size() != g.size()) throw ShapeError("loss_and_gradient: gradient block " + name + " has the wrong size");
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += d[i];
  });
  return terms;
}

}  // namespace net3
