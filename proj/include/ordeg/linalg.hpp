#pragma once

// Dense row-major matrices sized for the toy encoder. The three multiply
// variants below cover forward, input-gradient and weight-gradient passes;
// each keeps a contiguous inner loop so the compiler can vectorize.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ordeg/errors.hpp"

namespace ordeg {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// C = A * B^T  (A: M x K, B: N x K) -> M x N
inline void matmul_nt(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.cols) throw shape_mismatch_error("matmul_nt inner dims");
  C = Mat(A.rows, B.rows);
  for (int m = 0; m < A.rows; ++m) {
    const double* ar = A.row(m);
    for (int n = 0; n < B.rows; ++n) {
      const double* br = B.row(n);
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += ar[k] * br[k];
      C.at(m, n) = s;
    }
  }
}

// C = A * B  (A: M x K, B: K x N) -> M x N. Zero entries of A are skipped;
// gradient matrices flowing through inactive heads are mostly zero.
inline void matmul_nn(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.rows) throw shape_mismatch_error("matmul_nn inner dims");
  C = Mat(A.rows, B.cols);
  for (int m = 0; m < A.rows; ++m) {
    const double* ar = A.row(m);
    double* cr = C.row(m);
    for (int k = 0; k < A.cols; ++k) {
      const double v = ar[k];
      if (v == 0.0) continue;
      const double* br = B.row(k);
      for (int n = 0; n < B.cols; ++n) cr[n] += v * br[n];
    }
  }
}

// C += A^T * B  (A: M x K, B: M x N) -> K x N, accumulated in place
inline void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.rows != B.rows) throw shape_mismatch_error("matmul_tn outer dims");
  if (C.rows != A.cols || C.cols != B.cols) throw shape_mismatch_error("matmul_tn output dims");
  for (int m = 0; m < A.rows; ++m) {
    const double* ar = A.row(m);
    const double* br = B.row(m);
    for (int k = 0; k < A.cols; ++k) {
      const double v = ar[k];
      if (v == 0.0) continue;
      double* cr = C.row(k);
      for (int n = 0; n < B.cols; ++n) cr[n] += v * br[n];
    }
  }
}

}  // namespace ordeg
