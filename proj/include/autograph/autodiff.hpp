#pragma once

// Reverse-mode differentiation over dense double matrices. Each forward op
// allocates a node that remembers its inputs and a backward rule; the tape
// is implicit in those parent links and is rebuilt on every forward pass.

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "autograph/graph.hpp"
#include "autograph/matrix.hpp"

namespace autograph::ad {

struct Node {
  Matrix value;
  Matrix grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // reads this->grad, accumulates into parents
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);

  const Matrix& value() const { return node_->value; }
  Matrix& value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows; }
  std::size_t cols() const { return node_->value.cols; }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node> node_;
};

/// Sparse operator M with its transpose cached for the backward pass.
class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(SparseGraph m);

  const SparseGraph& matrix() const { return m_; }
  const SparseGraph& transposed() const { return mt_; }
  /// For each arc of the transpose, the index of the same arc in `matrix()`.
  std::span<const std::int64_t> transpose_arc() const { return t_arc_; }
  std::size_t n_nodes() const { return m_.n_nodes(); }
  std::size_t n_arcs() const { return m_.n_arcs(); }

 private:
  SparseGraph m_;
  SparseGraph mt_;
  std::vector<std::int64_t> t_arc_;
};

/// Constant rectangular CSR matrix with a transposed copy for the backward pass.
class SparseConstant {
 public:
  /// Stores the nonzero entries of `x`.
  static SparseConstant from_dense(const Matrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }
  double density() const;
  kernels::CsrView view() const;
  kernels::CsrView transposed_view() const;
  Matrix to_dense() const;
  /// Inverted dropout over the stored entries in row-major order; matches
  /// dense dropout of the same constant input on the same engine state.
  SparseConstant dropout(double p, std::mt19937_64& rng) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0}, t_row_ptr_{0};
  std::vector<std::int32_t> col_idx_, t_col_idx_;
  std::vector<double> val_, t_val_;
  std::vector<std::int64_t> t_pos_;  // entry of the transpose -> entry of the matrix
};

/// Nodes reachable from `root` through requires_grad parents, inputs first.
std::vector<Node*> topological_order(const Tensor& root);

/// Populates grads of every requires_grad leaf reachable from `loss`.
/// Leaf grads accumulate across calls; interior grads are reset per call.
void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
/// x * w for a constant sparse x.
Tensor sparse_matmul(std::shared_ptr<const SparseConstant> x, const Tensor& w);
Tensor add(const Tensor& a, const Tensor& b);
/// x (m x n) + bias (1 x n) broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// x scaled by a 1x1 tensor.
Tensor scale(const Tensor& x, const Tensor& s);
Tensor spmm(const SparseOperator& m, const Tensor& h);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor elu(const Tensor& x, double alpha);
/// Inverted dropout. Consumes one draw of `rng` per call; the mask is reused
/// by backward.
Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor sum(std::span<const Tensor> parts);
Tensor mean(std::span<const Tensor> parts);
/// Elementwise max; ties route the gradient to the first maximal input.
Tensor max(std::span<const Tensor> parts);

/// Per-arc score s_dst[i] + s_src[j] for arc i -> j of m (E x 1).
/// `dst_scores` may be empty, in which case only the source term is used.
Tensor edge_score(const SparseOperator& m, const Tensor& dst_scores, const Tensor& src_scores);
/// Softmax of per-arc scores within each row of m.
Tensor edge_softmax(const SparseOperator& m, const Tensor& scores);
/// out[i] = sum over arcs i -> j of coef[e] * v[j].
Tensor edge_aggregate(const SparseOperator& m, const Tensor& coef, const Tensor& v);

/// Mean over masked rows of -log softmax(logits)[label], row-max stabilized.
Tensor masked_softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                    std::span<const std::uint8_t> mask);

/// Row-wise softmax of a plain matrix.
Matrix softmax_rows(const Matrix& logits);

/// Central-difference check of d f / d params on a random subsample of
/// coordinates (at least 64, or all when fewer). Returns the max relative
/// error |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h,
                  std::uint64_t seed = 0, std::size_t min_coords = 64);

struct AdamState {
  std::size_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double l2 = 0.0;  // coupled penalty: l2 * param is added to the gradient
};

/// One Adam update with bias correction; decoupled weight decay is applied
/// to the parameter before the adaptive step. A nonzero `l2` adds the
/// gradient of (l2 / 2) * ||param||^2 before the moments are updated.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace autograph::ad
