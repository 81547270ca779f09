#include "net3/graph.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "net3/error.hpp"

namespace net3 {

void validate_adjacency(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ValidationError("adjacency must be square and nonempty, got " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()));
  }
  for (double v : a.data()) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("adjacency entries must be finite and nonnegative");
  }
  if (!is_symmetric(a, 1e-12)) throw ValidationError("adjacency must be symmetric");
}

Matrix symmetric_normalize(const Matrix& a) {
  validate_adjacency(a);
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  // Filled from the upper triangle so the result is exactly symmetric.
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      out(i, j) = a(i, j) * (inv_sqrt[i] * inv_sqrt[j]);
      out(j, i) = out(i, j);
    }
  return out;
}

Matrix laplacian(const Matrix& a) { return Matrix::identity(a.rows()) - symmetric_normalize(a); }

Matrix rescaled_laplacian(const Matrix& a, double lambda_max) {
  if (!(lambda_max > 0.0)) throw UsageError("rescaled_laplacian: lambda_max must be positive");
  return (2.0 / lambda_max) * laplacian(a) - Matrix::identity(a.rows());
}

ModeNetwork ModeNetwork::from_adjacency(Matrix adjacency) {
  ModeNetwork net;
  net.normalized = symmetric_normalize(adjacency);
  net.is_identity = adjacency == Matrix::identity(adjacency.rows());
  net.raw = std::move(adjacency);
  return net;
}

ModeNetwork ModeNetwork::identity(std::size_t n) {
  return ModeNetwork{Matrix::identity(n), Matrix::identity(n), true};
}

Matrix pearson_adjacency(const Matrix& series) {
  const std::size_t n = series.rows();
  const std::size_t t = series.cols();
  if (t < 2) throw UsageError("pearson_adjacency needs at least 2 samples per sequence");
  std::vector<std::vector<double>> centered(n, std::vector<double>(t));
  std::vector<double> norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < t; ++k) mean += series(i, k);
    mean /= static_cast<double>(t);
    for (std::size_t k = 0; k < t; ++k) {
      centered[i][k] = series(i, k) - mean;
      norm[i] += centered[i][k] * centered[i][k];
    }
    norm[i] = std::sqrt(norm[i]);
    if (norm[i] == 0.0) spdlog::warn("pearson_adjacency: sequence {} has zero variance; using r = 0", i);
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = 0.0;
      if (norm[i] > 0.0 && norm[j] > 0.0) {
        double dot = 0.0;
        for (std::size_t k = 0; k < t; ++k) dot += centered[i][k] * centered[j][k];
        r = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
      }
      a(i, j) = a(j, i) = 0.5 * (r + 1.0);
    }
  }
  return a;
}

Matrix flatten_kronecker(std::span<const ModeNetwork> nets) {
  if (nets.empty()) throw UsageError("flatten_kronecker: no networks");
  Matrix flat = nets.back().raw;
  for (std::size_t m = nets.size() - 1; m-- > 0;) flat = kronecker(flat, nets[m].raw);
  return flat;
}

Matrix chebyshev_matrix_poly(const Matrix& l_tilde, int p) {
  if (l_tilde.rows() != l_tilde.cols()) throw ShapeError("chebyshev_matrix_poly: matrix must be square");
  if (p < 0) throw UsageError("chebyshev_matrix_poly: order must be nonnegative");
  Matrix prev = Matrix::identity(l_tilde.rows());
  if (p == 0) return prev;
  Matrix cur = l_tilde;
  for (int k = 2; k <= p; ++k) {
    Matrix next = 2.0 * matmul(l_tilde, cur) - prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

double chebyshev(int p, double x) {
  if (p < 0) throw UsageError("chebyshev: order must be nonnegative");
  double prev = 1.0;
  if (p == 0) return prev;
  double cur = x;
  for (int k = 2; k <= p; ++k) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

SpectralOracle SpectralOracle::of(const Matrix& symmetric) {
  if (!is_symmetric(symmetric, 1e-10)) throw ValidationError("SpectralOracle needs a symmetric matrix");
  const auto n = static_cast<Eigen::Index>(symmetric.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = symmetric(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  SpectralOracle o;
  o.eigvecs = Matrix(symmetric.rows(), symmetric.rows());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      o.eigvecs(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = es.eigenvectors()(i, j);
  o.eigvals.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  o.lambda_max = o.eigvals.empty() ? 0.0 : o.eigvals.back();
  return o;
}

Matrix SpectralOracle::apply(const std::function<double(double)>& f) const {
  const std::size_t n = eigvecs.rows();
  Matrix scaled = eigvecs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= f(eigvals[j]);
  return matmul(scaled, transpose(eigvecs));
}

Matrix read_adjacency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open adjacency file " + path.string());
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        data.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ": bad number '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++c;
    }
    if (rows == 0) cols = c;
    if (c != cols) throw ValidationError(path.string() + ": ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows != cols) {
    throw ValidationError(path.string() + ": adjacency is " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Matrix(rows, cols, std::move(data));
}

void write_adjacency_csv(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j) out << ',';
      out << a(i, j);
    }
    out << '\n';
  }
}

}  // namespace net3
