#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dynhaz/error.hpp"

namespace dynhaz {

// Dense row-major matrix for the small (p <= 4) parameter-space systems
// used by the fitters and sandwich estimates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator*=(double c) {
    for (double& v : data_) v *= c;
    return *this;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double trace() const {
    double s = 0;
    for (std::size_t i = 0; i < rows_ && i < cols_; ++i) s += (*this)(i, i);
    return s;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws Error on (numerical) singularity, carrying a condition estimate.
std::vector<double> solve(Matrix a, std::vector<double> b);

Matrix inverse(const Matrix& a);

// Eigenvalues of a symmetric matrix via cyclic Jacobi (small p only).
std::vector<double> symmetric_eigenvalues(Matrix a);

}  // namespace dynhaz
