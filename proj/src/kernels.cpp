#include "autograph/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "autograph/error.hpp"

namespace autograph::kernels {
namespace {

using Index = std::ptrdiff_t;

constexpr std::size_t kTileRows = 8;
constexpr std::size_t kPanel = 16;

using Vec8 = double __attribute__((vector_size(64)));

// B (K x n) copied into zero-padded column panels of width kPanel, each K x kPanel.
std::vector<double> pack_panels(const double* b, std::size_t K, std::size_t n) {
  const std::size_t panels = (n + kPanel - 1) / kPanel;
  std::vector<double> out(panels * K * kPanel, 0.0);
  for (std::size_t p = 0; p < panels; ++p) {
    const std::size_t j0 = p * kPanel, w = std::min(kPanel, n - j0);
    double* dst = out.data() + p * K * kPanel;
    for (std::size_t k = 0; k < K; ++k) std::copy_n(b + k * n + j0, w, dst + k * kPanel);
  }
  return out;
}

// C[i0 .. i0+R, j0 .. j0+w) += A[i0 .. i0+R, :) * panel, A row-major with K columns.
// Each output element sums its K products in ascending k.
template <std::size_t R>
void tile(const double* __restrict a, const double* __restrict panel, std::size_t K, double* c,
          std::size_t n, std::size_t i0, std::size_t j0, std::size_t w) {
  Vec8 acc[R][2] = {};
  for (std::size_t k = 0; k < K; ++k) {
    Vec8 b0, b1;
    std::memcpy(&b0, panel + k * kPanel, sizeof b0);
    std::memcpy(&b1, panel + k * kPanel + 8, sizeof b1);
    for (std::size_t r = 0; r < R; ++r) {
      const double av = a[(i0 + r) * K + k];
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    double* crow = c + (i0 + r) * n + j0;
    for (std::size_t j = 0; j < w; ++j) crow[j] += j < 8 ? acc[r][0][j] : acc[r][1][j - 8];
  }
}

// C (rows x n) += A * B with A row-major rows x K, partitioned by tiles of output rows.
template <bool Parallel>
void gemm_acc_rows(const double* a, const double* b, std::size_t n, std::size_t K, double* c,
                   std::size_t rows) {
  if (rows == 0 || n == 0) return;
  const std::vector<double> packed = pack_panels(b, K, n);
  const std::size_t panels = (n + kPanel - 1) / kPanel;
  const Index full = static_cast<Index>(rows / kTileRows);
  const Index tiles = full + static_cast<Index>(rows % kTileRows);
#pragma omp parallel if (Parallel)
  for (std::size_t p = 0; p < panels; ++p) {
    const double* panel = packed.data() + p * K * kPanel;
    const std::size_t j0 = p * kPanel, w = std::min(kPanel, n - j0);
#pragma omp for schedule(static)
    for (Index t = 0; t < tiles; ++t) {
      if (t < full)
        tile<kTileRows>(a, panel, K, c, n, static_cast<std::size_t>(t) * kTileRows, j0, w);
      else
        tile<1>(a, panel, K, c, n,
                static_cast<std::size_t>(full) * kTileRows + static_cast<std::size_t>(t - full), j0, w);
    }
  }
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t.data[j * m.rows + i] = m.data[i * m.cols + j];
  return t;
}

template <bool Parallel>
Matrix gemm_impl(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "gemm: inner dimensions disagree");
  Matrix c(a.rows, b.cols);
  gemm_acc_rows<Parallel>(a.data.data(), b.data.data(), b.cols, a.cols, c.data.data(), a.rows);
  return c;
}

template <bool Parallel>
void gemm_tn_acc_impl(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_tn: shape mismatch");
  const Matrix at = transpose(a);
  gemm_acc_rows<Parallel>(at.data.data(), b.data.data(), b.cols, a.rows, c.data.data(), a.cols);
}

template <bool Parallel>
void gemm_nt_acc_impl(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_nt: shape mismatch");
  const Matrix bt = transpose(b);
  gemm_acc_rows<Parallel>(a.data.data(), bt.data.data(), b.rows, a.cols, c.data.data(), a.rows);
}

template <bool Parallel>
void spmm_acc_impl(const CsrView& m, const Matrix& h, Matrix& y) {
  require(m.n_cols == h.rows, "spmm: graph size does not match feature rows");
  require(y.rows == m.n_rows && y.cols == h.cols, "spmm: output shape mismatch");
  const Index rows = static_cast<Index>(m.n_rows);
  const std::size_t d = h.cols;
#pragma omp parallel for schedule(dynamic, 64) if (Parallel)
  for (Index i = 0; i < rows; ++i) {
    double* __restrict yrow = y.data.data() + i * d;
    for (auto e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) {
      const double w = m.weight[e];
      const double* __restrict hrow = h.data.data() + static_cast<std::size_t>(m.col_idx[e]) * d;
      for (std::size_t j = 0; j < d; ++j) yrow[j] += w * hrow[j];
    }
  }
}

}  // namespace

Matrix gemm(const Matrix& a, const Matrix& b) { return gemm_impl<true>(a, b); }
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) { gemm_tn_acc_impl<true>(a, b, c); }
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) { gemm_nt_acc_impl<true>(a, b, c); }
void spmm_acc(const CsrView& m, const Matrix& h, Matrix& y) { spmm_acc_impl<true>(m, h, y); }
Matrix spmm(const CsrView& m, const Matrix& h) {
  Matrix y(m.n_rows, h.cols);
  spmm_acc_impl<true>(m, h, y);
  return y;
}

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(n); }

namespace serial {
Matrix gemm(const Matrix& a, const Matrix& b) { return gemm_impl<false>(a, b); }
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) { gemm_tn_acc_impl<false>(a, b, c); }
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) { gemm_nt_acc_impl<false>(a, b, c); }
void spmm_acc(const CsrView& m, const Matrix& h, Matrix& y) { spmm_acc_impl<false>(m, h, y); }
Matrix spmm(const CsrView& m, const Matrix& h) {
  Matrix y(m.n_rows, h.cols);
  spmm_acc_impl<false>(m, h, y);
  return y;
}
}  // namespace serial

}  // namespace autograph::kernels
