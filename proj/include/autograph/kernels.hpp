#pragma once

// Data-parallel inner loops. Every kernel partitions work by output row and
// sums each output element in a fixed order, so the OpenMP versions are
// bitwise identical to the serial references regardless of thread count.

#include <cstdint>
#include <span>

#include "autograph/matrix.hpp"

namespace autograph::kernels {

/// Non-owning view of a CSR matrix with explicit per-entry weights.
struct CsrView {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::span<const std::int64_t> row_ptr;
  std::span<const std::int32_t> col_idx;
  std::span<const double> weight;
};

/// C = A * B, register-tiled over blocks of output rows and packed column panels.
Matrix gemm(const Matrix& a, const Matrix& b);
/// C += A^T * B
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// C += A * B^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// Y = M * H
Matrix spmm(const CsrView& m, const Matrix& h);
/// Y += M * H
void spmm_acc(const CsrView& m, const Matrix& h, Matrix& y);

int max_threads();
void set_threads(int n);

namespace serial {
Matrix gemm(const Matrix& a, const Matrix& b);
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
Matrix spmm(const CsrView& m, const Matrix& h);
void spmm_acc(const CsrView& m, const Matrix& h, Matrix& y);
}  // namespace serial

}  // namespace autograph::kernels
