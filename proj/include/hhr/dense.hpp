#pragma once

#include <cstddef>
#include <vector>

namespace hhr {

// Row-major dense matrix of doubles. The carrier of every differentiable
// value in the network; 64-bit precision is required for the gradient
// checks to resolve at 1e-6.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool operator==(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols && data == other.data;
  }
};

bool all_finite(const DenseMatrix& m);

// c += a * b, c = a * b and the transposed variants used by the adjoints.
void matmul_accumulate(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace hhr
