#include "net3/autodiff.hpp"

#include <cmath>

#include "net3/error.hpp"
#include "net3/trnn.hpp"

namespace net3::ad {

Var Tape::variable(DenseTensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, true, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(DenseTensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::record(DenseTensor value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, false, needs, needs ? std::move(backward) : Backward{}});
  return Var{nodes_.size() - 1};
}

DenseTensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.has_grad ? n.grad : DenseTensor(n.value.shape());
}

void Tape::accumulate(Var v, const DenseTensor& g) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape()) {
    throw ShapeError("gradient shape " + shape_string(g.shape()) + " does not match value " +
                     shape_string(n.value.shape()));
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }
}

void Tape::backward(Var root) {
  if (nodes_.at(root.id).value.size() != 1) throw ShapeError("backward: root must be a scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = DenseTensor();
  }
  accumulate(root, DenseTensor(nodes_[root.id].value.shape(), 1.0));
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Closures only touch earlier nodes, so n.grad stays put while in use.
    n.backward(*this, n.grad);
  }
}

namespace {

void same_shape(const Tape& t, Var a, Var b, const char* what) {
  if (t.value(a).shape() != t.value(b).shape()) {
    throw ShapeError(std::string(what) + ": " + shape_string(t.value(a).shape()) + " vs " +
                     shape_string(t.value(b).shape()));
  }
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  same_shape(t, a, b, "add");
  const Var parents[] = {a, b};
  return t.record(t.value(a) + t.value(b), parents, [a, b](Tape& tp, const DenseTensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  same_shape(t, a, b, "sub");
  const Var parents[] = {a, b};
  return t.record(t.value(a) - t.value(b), parents, [a, b](Tape& tp, const DenseTensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -1.0 * g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  same_shape(t, a, b, "mul");
  const Var parents[] = {a, b};
  return t.record(hadamard(t.value(a), t.value(b)), parents, [a, b](Tape& tp, const DenseTensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, hadamard(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, hadamard(g, tp.value(a)));
  });
}

Var scale(Tape& t, Var a, double s) {
  const Var parents[] = {a};
  return t.record(s * t.value(a), parents, [a, s](Tape& tp, const DenseTensor& g) { tp.accumulate(a, s * g); });
}

namespace {

template <class F, class DF>
Var unary(Tape& t, Var a, F f, DF df) {
  DenseTensor y = t.value(a);
  for (double& v : y.data()) v = f(v);
  const Var parents[] = {a};
  const std::size_t out = t.size();
  return t.record(std::move(y), parents, [a, out, df](Tape& tp, const DenseTensor& g) {
    const DenseTensor& x = tp.value(a);
    const DenseTensor& y = tp.value(Var{out});
    DenseTensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = g[i] * df(x[i], y[i]);
    tp.accumulate(a, dx);
  });
}

}  // namespace

Var sigmoid(Tape& t, Var a) {
  return unary(t, a, [](double x) { return logistic(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Tape& t, Var a) {
  return unary(t, a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var activation(Tape& t, Var a, Activation act) {
  switch (act) {
    case Activation::relu: return relu(t, a);
    case Activation::tanh: return tanh(t, a);
    case Activation::identity: return a;
  }
  return a;
}

Var mode_product(Tape& t, Var x, Var u, std::size_t mode) {
  const Matrix um = to_matrix(t.value(u));
  const Var parents[] = {x, u};
  return t.record(net3::mode_product(t.value(x), um, mode), parents,
                  [x, u, mode](Tape& tp, const DenseTensor& g) {
                    const Matrix um = to_matrix(tp.value(u));
                    if (tp.requires_grad(x)) tp.accumulate(x, net3::mode_product(g, net3::transpose(um), mode));
                    if (tp.requires_grad(u)) {
                      tp.accumulate(u, DenseTensor::from_matrix(mode_gram(tp.value(x), g, mode)));
                    }
                  });
}

Var transpose(Tape& t, Var a) {
  const Var parents[] = {a};
  return t.record(DenseTensor::from_matrix(net3::transpose(to_matrix(t.value(a)))), parents,
                  [a](Tape& tp, const DenseTensor& g) {
                    tp.accumulate(a, DenseTensor::from_matrix(net3::transpose(to_matrix(g))));
                  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Var parents[] = {a, b};
  return t.record(DenseTensor::from_matrix(net3::matmul(to_matrix(t.value(a)), to_matrix(t.value(b)))), parents,
                  [a, b](Tape& tp, const DenseTensor& g) {
                    const Matrix gm = to_matrix(g);
                    if (tp.requires_grad(a))
                      tp.accumulate(a, DenseTensor::from_matrix(net3::matmul(gm, net3::transpose(to_matrix(tp.value(b))))));
                    if (tp.requires_grad(b))
                      tp.accumulate(b, DenseTensor::from_matrix(net3::matmul(net3::transpose(to_matrix(tp.value(a))), gm)));
                  });
}

Var add_feature_bias(Tape& t, Var x, Var b) {
  const DenseTensor& xv = t.value(x);
  const DenseTensor& bv = t.value(b);
  const std::size_t d = xv.shape().back();
  if (bv.size() != d) throw ShapeError("add_feature_bias: bias length does not match feature mode");
  DenseTensor y = xv;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i % d];
  const Var parents[] = {x, b};
  return t.record(std::move(y), parents, [x, b, d](Tape& tp, const DenseTensor& g) {
    tp.accumulate(x, g);
    if (tp.requires_grad(b)) {
      DenseTensor db(tp.value(b).shape());
      for (std::size_t i = 0; i < g.size(); ++i) db[i % d] += g[i];
      tp.accumulate(b, db);
    }
  });
}

Var concat_last(Tape& t, Var a, Var b) {
  const Var parents[] = {a, b};
  return t.record(net3::concat_last(t.value(a), t.value(b)), parents, [a, b](Tape& tp, const DenseTensor& g) {
    const std::size_t da = tp.value(a).shape().back();
    const std::size_t db = tp.value(b).shape().back();
    DenseTensor ga(tp.value(a).shape());
    DenseTensor gb(tp.value(b).shape());
    const std::size_t rows = ga.size() / da;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < da; ++k) ga[r * da + k] = g[r * (da + db) + k];
      for (std::size_t k = 0; k < db; ++k) gb[r * db + k] = g[r * (da + db) + da + k];
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

Var reshape(Tape& t, Var a, Shape shape) {
  const Var parents[] = {a};
  return t.record(t.value(a).reshaped(std::move(shape)), parents, [a](Tape& tp, const DenseTensor& g) {
    tp.accumulate(a, g.reshaped(tp.value(a).shape()));
  });
}

Var gather(Tape& t, Var a, std::vector<std::size_t> index, Shape shape) {
  const DenseTensor& av = t.value(a);
  DenseTensor y(std::move(shape));
  if (y.size() != index.size()) throw ShapeError("gather: index length does not match output shape");
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.size()) throw ShapeError("gather: index out of range");
    y[i] = av[index[i]];
  }
  const Var parents[] = {a};
  return t.record(std::move(y), parents, [a, index = std::move(index)](Tape& tp, const DenseTensor& g) {
    DenseTensor ga(tp.value(a).shape());
    for (std::size_t i = 0; i < index.size(); ++i) ga[index[i]] += g[i];
    tp.accumulate(a, ga);
  });
}

Var weighted_sum_squares(Tape& t, Var a, const DenseTensor& weights) {
  const DenseTensor& av = t.value(a);
  if (weights.shape() != av.shape()) throw ShapeError("weighted_sum_squares: weight shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += weights[i] * av[i] * av[i];
  const Var parents[] = {a};
  return t.record(DenseTensor({1}, {s}), parents, [a, weights](Tape& tp, const DenseTensor& g) {
    const DenseTensor& av = tp.value(a);
    DenseTensor ga(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) ga[i] = 2.0 * weights[i] * av[i] * g[0];
    tp.accumulate(a, ga);
  });
}

Var sum_squares(Tape& t, Var a) {
  const DenseTensor& av = t.value(a);
  double s = 0.0;
  for (double v : av.data()) s += v * v;
  const Var parents[] = {a};
  return t.record(DenseTensor({1}, {s}), parents, [a](Tape& tp, const DenseTensor& g) {
    tp.accumulate(a, (2.0 * g[0]) * tp.value(a));
  });
}

Var nodewise_linear(Tape& t, Var x, Var w) {
  const DenseTensor& xv = t.value(x);
  const DenseTensor& wv = t.value(w);
  if (xv.order() != 2 || wv.order() != 2 || wv.dim(0) != xv.dim(0) || wv.dim(1) % xv.dim(1) != 0) {
    throw ShapeError("nodewise_linear: expected x (P × d) and w (P × d·d')");
  }
  const std::size_t rows = xv.dim(0);
  const std::size_t d = xv.dim(1);
  const std::size_t d_out = wv.dim(1) / d;
  DenseTensor y({rows, d_out});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d_out; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += xv[i * d + k] * wv[i * d * d_out + k * d_out + j];
      y[i * d_out + j] = s;
    }
  const Var parents[] = {x, w};
  return t.record(std::move(y), parents, [x, w, rows, d, d_out](Tape& tp, const DenseTensor& g) {
    const DenseTensor& xv = tp.value(x);
    const DenseTensor& wv = tp.value(w);
    if (tp.requires_grad(x)) {
      DenseTensor gx(xv.shape());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < d_out; ++j) s += g[i * d_out + j] * wv[i * d * d_out + k * d_out + j];
          gx[i * d + k] = s;
        }
      tp.accumulate(x, gx);
    }
    if (tp.requires_grad(w)) {
      DenseTensor gw(wv.shape());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < d; ++k)
          for (std::size_t j = 0; j < d_out; ++j) gw[i * d * d_out + k * d_out + j] = xv[i * d + k] * g[i * d_out + j];
      tp.accumulate(w, gw);
    }
  });
}

}  // namespace net3::ad
