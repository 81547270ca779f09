#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "net3/graph.hpp"
#include "net3/tensor.hpp"

namespace net3::test {

inline DenseTensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  DenseTensor t(shape);
  for (double& v : t.data()) v = n(rng);
  return t;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

/// Symmetric, nonnegative, zero diagonal, roughly half the edges present.
inline Matrix random_adjacency(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = u(rng) < 0.5 ? 0.0 : u(rng) + 0.1;
      a(i, j) = w;
      a(j, i) = w;
    }
  return a;
}

/// Index tuple of a row-major flat offset.
inline std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t m = shape.size(); m-- > 0;) {
    idx[m] = flat % shape[m];
    flat /= shape[m];
  }
  return idx;
}

/// Direct summation (x ×_mode u)[..j..] = Σ_i x[..i..] u(i, j).
inline DenseTensor naive_mode_product(const DenseTensor& x, const Matrix& u, std::size_t mode) {
  Shape out_shape = x.shape();
  out_shape[mode] = u.cols();
  DenseTensor out(out_shape);
  for (std::size_t f = 0; f < out.size(); ++f) {
    auto idx = unravel(f, out_shape);
    const std::size_t j = idx[mode];
    double s = 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i) {
      idx[mode] = i;
      s += x.at(idx) * u(i, j);
    }
    out[f] = s;
  }
  return out;
}

inline Matrix naive_kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return k;
}

/// Column-major vectorization: first index fastest.
inline std::vector<double> naive_vec(const DenseTensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    const auto idx = unravel(f, x.shape());
    std::size_t pos = 0;
    for (std::size_t m = x.order(); m-- > 0;) pos = pos * x.shape()[m] + idx[m];
    v[pos] = x[f];
  }
  return v;
}

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& v) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * v[j];
  return out;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace net3::test
