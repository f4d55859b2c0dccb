#include "tkgode/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace tkg {

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimError("matrix add: shape mismatch");
  Matrix out = a;
  const double* pb = b.data();
  double* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] += pb[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimError("matrix sub: shape mismatch");
  Matrix out = a;
  const double* pb = b.data();
  double* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] -= pb[i];
  return out;
}

Matrix scaled(const Matrix& a, double alpha) {
  Matrix out = a;
  double* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] *= alpha;
  return out;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) throw DimError("axpy: shape mismatch");
  const double* px = x.data();
  double* py = y.data();
  for (size_t i = 0; i < y.size(); ++i) py[i] += alpha * px[i];
}

Matrix matmul(const Matrix& a, const Matrix& b, bool trans_b) {
  const int m = a.rows();
  const int k = a.cols();
  const int n = trans_b ? b.rows() : b.cols();
  const int bk = trans_b ? b.cols() : b.rows();
  if (k != bk) throw DimError("matmul: inner dimensions disagree");

  Matrix out(m, n, 0.0);
  if (!trans_b) {
    for (int i = 0; i < m; ++i) {
      const double* arow = a.row(i);
      double* orow = out.row(i);
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = b.row(p);
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const double* arow = a.row(i);
      double* orow = out.row(i);
      for (int j = 0; j < n; ++j) {
        const double* brow = b.row(j);
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        orow[j] = acc;
      }
    }
  }
  return out;
}

bool all_finite(const Matrix& a) {
  const double* p = a.data();
  for (size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  const double* p = a.data();
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(p[i]));
  return m;
}

}  // namespace tkg
