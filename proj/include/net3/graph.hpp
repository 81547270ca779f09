#pragma once

// Per-mode networks of a tensor graph: normalization, Laplacians, Pearson
// adjacencies, the Kronecker "flat graph", and an eigendecomposition oracle
// for Chebyshev matrix polynomials.

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "net3/tensor.hpp"

namespace net3 {

/// Adjacency of one tensor mode together with its normalized form
/// D^{-1/2} A D^{-1/2}. Modes without a network carry the identity.
struct ModeNetwork {
  Matrix raw;
  Matrix normalized;
  bool is_identity = false;

  /// Validates symmetry and nonnegativity, then normalizes.
  static ModeNetwork from_adjacency(Matrix adjacency);
  static ModeNetwork identity(std::size_t n);

  std::size_t size() const { return raw.rows(); }
};

/// Throws ValidationError unless `a` is square, symmetric within 1e-12 and nonnegative.
void validate_adjacency(const Matrix& a);

/// D^{-1/2} A D^{-1/2}; an isolated node (zero degree) gets a zero row and column.
Matrix symmetric_normalize(const Matrix& a);

/// L = I − D^{-1/2} A D^{-1/2}
Matrix laplacian(const Matrix& a);

/// 2L/λ_max − I
Matrix rescaled_laplacian(const Matrix& a, double lambda_max);

/// A[i,j] = (r_ij + 1) / 2 for the rows of `series` (n sequences × T samples).
/// A zero-variance row correlates as r = 0 with every other row. Diagonal is 1.
Matrix pearson_adjacency(const Matrix& series);

/// A_M ⊗ … ⊗ A_1 over the raw adjacencies (mode 0 is A_1).
Matrix flatten_kronecker(std::span<const ModeNetwork> nets);

/// T_p(L̃) via T_0 = I, T_1 = L̃, T_p = 2 L̃ T_{p-1} − T_{p-2}.
Matrix chebyshev_matrix_poly(const Matrix& l_tilde, int p);

/// Scalar Chebyshev polynomial T_p(x).
double chebyshev(int p, double x);

/// Eigendecomposition L = Φ Λ Φᵀ of a symmetric matrix.
struct SpectralOracle {
  Matrix eigvecs;
  std::vector<double> eigvals;
  double lambda_max = 0.0;

  static SpectralOracle of(const Matrix& symmetric);

  /// Φ diag(f(λ_i)) Φᵀ
  Matrix apply(const std::function<double(double)>& f) const;
};

Matrix read_adjacency_csv(const std::filesystem::path& path);
void write_adjacency_csv(const std::filesystem::path& path, const Matrix& a);

}  // namespace net3
