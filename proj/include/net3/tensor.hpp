#pragma once

// Dense row-major tensors and matrices of doubles, plus the multilinear
// kernels (mode-m product, matricization, Kronecker product, HOSVD) that the
// graph and recurrent layers are built from.
//
// Mode indices are zero-based throughout: mode 0 is the first mode.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace net3 {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool is_symmetric(const Matrix& a, double tol);

/// Multi-mode array; last index varies fastest in memory.
class DenseTensor {
 public:
  /// A single zero, shape {1}.
  DenseTensor();
  explicit DenseTensor(Shape shape, double fill = 0.0);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor from_matrix(const Matrix& m);

  std::size_t order() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  /// Same data, new shape with equal element count.
  DenseTensor reshaped(Shape shape) const;

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Matrix to_matrix(const DenseTensor& t);

// Elementwise helpers. Shapes must match exactly.
DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& a);
DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);
double frobenius_norm(const DenseTensor& x);

/// Matricization along `mode`: rows index the mode, columns run over the
/// remaining modes in row-major order.
Matrix unfold(const DenseTensor& x, std::size_t mode);
DenseTensor fold(const Matrix& m, const Shape& shape, std::size_t mode);

/// (x ×_mode u)[.., j, ..] = Σ_i x[.., i, ..] · u(i, j). u is N_mode × N'.
DenseTensor mode_product(const DenseTensor& x, const Matrix& u, std::size_t mode);

/// unfold(x, mode) · unfold(y, mode)ᵀ without materializing either unfolding.
Matrix mode_gram(const DenseTensor& x, const DenseTensor& y, std::size_t mode);

struct ModeFactor {
  std::size_t mode;
  Matrix matrix;
};

/// Sequential mode products over distinct modes, applied in list order.
DenseTensor multi_mode_product(const DenseTensor& x, std::span<const ModeFactor> factors);

Matrix kronecker(const Matrix& a, const Matrix& b);

/// Column vector with the first mode varying fastest. Under this ordering
/// vectorize(x ∏ ×_m A_m) = (A_Mᵀ ⊗ … ⊗ A_1ᵀ) · vectorize(x).
std::vector<double> vectorize(const DenseTensor& x);
DenseTensor unvectorize(std::span<const double> v, const Shape& shape);

/// Concatenate along the last mode; all other modes must agree.
DenseTensor concat_last(const DenseTensor& a, const DenseTensor& b);

struct HosvdResult {
  DenseTensor core;
  /// N_m × r_m, orthonormal columns.
  std::vector<Matrix> factors;

  /// core ∏ ×_m U_mᵀ
  DenseTensor reconstruct() const;
};

/// Truncated higher-order SVD: U_m are the leading left singular vectors of
/// the mode-m unfolding, core = x ∏ ×_m U_m.
HosvdResult hosvd(const DenseTensor& x, std::span<const std::size_t> ranks);

}  // namespace net3
