#include "net3/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "net3/error.hpp"

namespace net3 {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": matrix shapes differ");
  }
}

void require_same(const DenseTensor& a, const DenseTensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same(a, b, "matrix add");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same(a, b, "matrix sub");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// DenseTensor

DenseTensor::DenseTensor() : shape_{1}, data_(1, 0.0) {}

DenseTensor::DenseTensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ShapeError("tensor order must be at least 1");
  for (std::size_t n : shape_)
    if (n == 0) throw ShapeError("tensor mode dimension must be positive: " + shape_string(shape_));
  data_.assign(shape_size(shape_), fill);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data) : DenseTensor(std::move(shape)) {
  if (data.size() != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match " +
                     shape_string(shape_));
  }
  data_ = std::move(data);
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  return DenseTensor({m.rows(), m.cols()}, m.values());
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("index order mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k]) throw ShapeError("index out of range on mode " + std::to_string(k));
    flat = flat * shape_[k] + index[k];
  }
  return flat;
}

double& DenseTensor::at(std::span<const std::size_t> index) { return data_[flat_index(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const { return data_[flat_index(index)]; }

DenseTensor DenseTensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return DenseTensor(std::move(shape), data_);
}

Matrix to_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw ShapeError("to_matrix needs an order-2 tensor, got " + shape_string(t.shape()));
  return Matrix(t.dim(0), t.dim(1), t.values());
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  require_same(a, b, "tensor add");
  DenseTensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  require_same(a, b, "tensor sub");
  DenseTensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

DenseTensor operator*(double s, const DenseTensor& a) {
  DenseTensor c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
  require_same(a, b, "hadamard");
  DenseTensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double frobenius_norm(const DenseTensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Matricization and mode products

namespace {

struct ModeSplit {
  std::size_t outer;
  std::size_t dim;
  std::size_t inner;
};

ModeSplit split_at(const Shape& shape, std::size_t mode) {
  if (mode >= shape.size()) {
    throw UsageError("mode " + std::to_string(mode) + " out of range for tensor " + shape_string(shape));
  }
  ModeSplit s{1, shape[mode], 1};
  for (std::size_t k = 0; k < mode; ++k) s.outer *= shape[k];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) s.inner *= shape[k];
  return s;
}

}  // namespace

Matrix unfold(const DenseTensor& x, std::size_t mode) {
  const ModeSplit s = split_at(x.shape(), mode);
  Matrix m(s.dim, s.outer * s.inner);
  const auto src = x.data();
  auto dst = m.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t n = 0; n < s.dim; ++n)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((o * s.dim + n) * s.inner), s.inner,
                  dst.begin() + static_cast<std::ptrdiff_t>(n * m.cols() + o * s.inner));
  return m;
}

DenseTensor fold(const Matrix& m, const Shape& shape, std::size_t mode) {
  const ModeSplit s = split_at(shape, mode);
  if (m.rows() != s.dim || m.cols() != s.outer * s.inner) {
    throw ShapeError("fold: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " matrix is inconsistent with shape " + shape_string(shape) + " at mode " +
                     std::to_string(mode));
  }
  DenseTensor x(shape);
  const auto src = m.data();
  auto dst = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t n = 0; n < s.dim; ++n)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(n * m.cols() + o * s.inner), s.inner,
                  dst.begin() + static_cast<std::ptrdiff_t>((o * s.dim + n) * s.inner));
  return x;
}

DenseTensor mode_product(const DenseTensor& x, const Matrix& u, std::size_t mode) {
  if (mode >= x.order()) {
    throw UsageError("mode_product: mode " + std::to_string(mode) + " out of range for tensor " +
                     shape_string(x.shape()));
  }
  if (u.rows() != x.dim(mode)) {
    throw ShapeError("mode_product: mode " + std::to_string(mode) + " has size " +
                     std::to_string(x.dim(mode)) + " but matrix has " + std::to_string(u.rows()) +
                     " rows");
  }
  const ModeSplit s = split_at(x.shape(), mode);
  Shape out = x.shape();
  out[mode] = u.cols();
  DenseTensor y(out);
  const double* src = x.data().data();
  double* dst = y.data().data();
  const std::size_t n_out = u.cols();
  if (s.inner == 1) {
    // Last mode: rows of x times u, walked so both inner loops are contiguous.
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* yrow = dst + o * n_out;
      for (std::size_t i = 0; i < s.dim; ++i) {
        const double c = src[o * s.dim + i];
        const double* urow = u.data().data() + i * n_out;
        for (std::size_t j = 0; j < n_out; ++j) yrow[j] += c * urow[j];
      }
    }
    return y;
  }
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < n_out; ++j) {
      double* yrow = dst + (o * n_out + j) * s.inner;
      for (std::size_t i = 0; i < s.dim; ++i) {
        const double c = u(i, j);
        const double* xrow = src + (o * s.dim + i) * s.inner;
        for (std::size_t k = 0; k < s.inner; ++k) yrow[k] += c * xrow[k];
      }
    }
  }
  return y;
}

Matrix mode_gram(const DenseTensor& x, const DenseTensor& y, std::size_t mode) {
  const ModeSplit sx = split_at(x.shape(), mode);
  const ModeSplit sy = split_at(y.shape(), mode);
  if (sx.outer != sy.outer || sx.inner != sy.inner) {
    throw ShapeError("mode_gram: tensors " + shape_string(x.shape()) + " and " + shape_string(y.shape()) +
                     " differ outside mode " + std::to_string(mode));
  }
  Matrix g(sx.dim, sy.dim);
  const double* xs = x.data().data();
  const double* ys = y.data().data();
  if (sx.inner == 1) {
    for (std::size_t o = 0; o < sx.outer; ++o)
      for (std::size_t i = 0; i < sx.dim; ++i) {
        const double c = xs[o * sx.dim + i];
        double* grow = g.data().data() + i * sy.dim;
        const double* yrow = ys + o * sy.dim;
        for (std::size_t j = 0; j < sy.dim; ++j) grow[j] += c * yrow[j];
      }
    return g;
  }
  for (std::size_t o = 0; o < sx.outer; ++o)
    for (std::size_t i = 0; i < sx.dim; ++i) {
      const double* xrow = xs + (o * sx.dim + i) * sx.inner;
      for (std::size_t j = 0; j < sy.dim; ++j) {
        const double* yrow = ys + (o * sy.dim + j) * sy.inner;
        double acc = 0.0;
        for (std::size_t k = 0; k < sx.inner; ++k) acc += xrow[k] * yrow[k];
        g(i, j) += acc;
      }
    }
  return g;
}

DenseTensor multi_mode_product(const DenseTensor& x, std::span<const ModeFactor> factors) {
  std::set<std::size_t> seen;
  for (const auto& f : factors) {
    if (!seen.insert(f.mode).second) {
      throw UsageError("multi_mode_product: mode " + std::to_string(f.mode) + " appears twice");
    }
  }
  DenseTensor y = x;
  for (const auto& f : factors) y = mode_product(y, f.matrix, f.mode);
  return y;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

namespace {

// Visit every multi-index of `shape` with the first mode fastest, passing the
// row-major flat offset and the running column-major position.
template <class F>
void for_each_first_fastest(const Shape& shape, F&& f) {
  const std::size_t order = shape.size();
  Shape strides(order, 1);
  for (std::size_t k = order - 1; k > 0; --k) strides[k - 1] = strides[k] * shape[k];
  Shape idx(order, 0);
  const std::size_t total = shape_size(shape);
  for (std::size_t pos = 0; pos < total; ++pos) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < order; ++k) flat += idx[k] * strides[k];
    f(flat, pos);
    for (std::size_t k = 0; k < order; ++k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
}

}  // namespace

std::vector<double> vectorize(const DenseTensor& x) {
  std::vector<double> v(x.size());
  for_each_first_fastest(x.shape(), [&](std::size_t flat, std::size_t pos) { v[pos] = x[flat]; });
  return v;
}

DenseTensor unvectorize(std::span<const double> v, const Shape& shape) {
  DenseTensor x(shape);
  if (v.size() != x.size()) throw ShapeError("unvectorize: length mismatch for " + shape_string(shape));
  for_each_first_fastest(shape, [&](std::size_t flat, std::size_t pos) { x[flat] = v[pos]; });
  return x;
}

DenseTensor concat_last(const DenseTensor& a, const DenseTensor& b) {
  if (a.order() != b.order() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw ShapeError("concat_last: " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                     " differ outside the last mode");
  }
  const std::size_t da = a.shape().back();
  const std::size_t db = b.shape().back();
  Shape out = a.shape();
  out.back() = da + db;
  DenseTensor c(out);
  const std::size_t rows = a.size() / da;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r * da), da,
                c.data().begin() + static_cast<std::ptrdiff_t>(r * (da + db)));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(r * db), db,
                c.data().begin() + static_cast<std::ptrdiff_t>(r * (da + db) + da));
  }
  return c;
}

// ---------------------------------------------------------------------------
// HOSVD

DenseTensor HosvdResult::reconstruct() const {
  DenseTensor x = core;
  for (std::size_t m = 0; m < factors.size(); ++m) x = mode_product(x, transpose(factors[m]), m);
  return x;
}

HosvdResult hosvd(const DenseTensor& x, std::span<const std::size_t> ranks) {
  if (ranks.size() != x.order()) {
    throw UsageError("hosvd: expected " + std::to_string(x.order()) + " ranks, got " +
                     std::to_string(ranks.size()));
  }
  HosvdResult out;
  for (std::size_t m = 0; m < x.order(); ++m) {
    if (ranks[m] < 1 || ranks[m] > x.dim(m)) {
      throw UsageError("hosvd: rank " + std::to_string(ranks[m]) + " invalid for mode " +
                       std::to_string(m) + " of size " + std::to_string(x.dim(m)));
    }
    const Matrix unf = unfold(x, m);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> em(
        unf.data().data(), static_cast<Eigen::Index>(unf.rows()), static_cast<Eigen::Index>(unf.cols()));
    // Full U: an unfolding with fewer columns than rows still yields N_m vectors.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(em, Eigen::ComputeFullU);
    const Eigen::MatrixXd& u = svd.matrixU();
    Matrix f(x.dim(m), ranks[m]);
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t j = 0; j < f.cols(); ++j)
        f(i, j) = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    out.factors.push_back(std::move(f));
  }
  out.core = x;
  for (std::size_t m = 0; m < x.order(); ++m) out.core = mode_product(out.core, out.factors[m], m);
  return out;
}

}  // namespace net3
