#include "hhr/dense.hpp"

#include <cmath>
#include <cstdlib>

#include "hhr/errors.hpp"

namespace hhr {

bool all_finite(const DenseMatrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void matmul_accumulate(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
    throw ValidationError("matmul: dimension mismatch");
  }
  // ikj order keeps both inner streams contiguous. No zero-skip fast path:
  // epoch cost must not depend on activation sparsity.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.cols);
  matmul_accumulate(a, b, c);
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols) {
    throw ValidationError("matmul_nt: dimension mismatch");
  }
  DenseMatrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) {
        acc += arow[k] * brow[k];
      }
      crow[j] = acc;
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows) {
    throw ValidationError("matmul_tn: dimension mismatch");
  }
  DenseMatrix c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      double* crow = c.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw ValidationError("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  }
  return worst;
}

}  // namespace hhr
