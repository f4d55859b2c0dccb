#pragma once

#include <cstddef>
#include <vector>

#include "tkgode/errors.hpp"

namespace tkg {

/// Dense row-major f64 matrix. All model state and gradients use this type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw DimError("Matrix: negative dimension");
  }

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols, 0.0); }
  static Matrix ones(int rows, int cols) { return Matrix(rows, cols, 1.0); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double alpha);

/// y += alpha * x
void axpy(double alpha, const Matrix& x, Matrix& y);

/// a @ b, or a @ b^T when trans_b is set.
Matrix matmul(const Matrix& a, const Matrix& b, bool trans_b = false);

bool all_finite(const Matrix& a);
double max_abs(const Matrix& a);

}  // namespace tkg
