#include "autograph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "autograph/error.hpp"
#include "autograph/kernels.hpp"

namespace autograph::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

/// Creates the output node; records parents and the backward rule only when
/// some input participates in differentiation.
Tensor make_result(Matrix value, std::vector<NodePtr> parents, std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (rg) {
    node->requires_grad = true;
    node->grad = Matrix(node->value.rows, node->value.cols);
    node->parents = std::move(parents);
    node->backward = std::move(rule);
  }
  return Tensor(std::move(node));
}

/// Keep/drop decisions for dropout: one draw from the caller's engine seeds a
/// splitmix64 stream whose 16-bit lanes are compared with the keep rate.
class MaskStream {
 public:
  MaskStream(std::mt19937_64& rng, double keep)
      : state_(rng()), threshold_(static_cast<std::uint32_t>(std::lround(keep * 65536.0))) {}
  bool keep() {
    if (lanes_ == 0) {
      std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      bits_ = z ^ (z >> 31);
      lanes_ = 4;
    }
    const auto lane = static_cast<std::uint32_t>(bits_ & 0xffffu);
    bits_ >>= 16;
    --lanes_;
    return lane < threshold_;
  }

 private:
  std::uint64_t state_;
  std::uint32_t threshold_;
  std::uint64_t bits_ = 0;
  int lanes_ = 0;
};

void accumulate(Node& target, const Matrix& delta) {
  for (std::size_t i = 0; i < delta.data.size(); ++i) target.grad.data[i] += delta.data[i];
}

template <typename F>
Tensor unary(const Tensor& x, F&& deriv_of_input, Matrix value) {
  auto xn = x.node();
  return make_result(std::move(value), {xn}, [xn, deriv_of_input](Node& self) {
    if (!xn->requires_grad) return;
    for (std::size_t i = 0; i < self.grad.data.size(); ++i)
      xn->grad.data[i] += self.grad.data[i] * deriv_of_input(xn->value.data[i], self.value.data[i]);
  });
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->grad = Matrix(value.rows, value.cols);
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.fill(0.0);
}

SparseOperator::SparseOperator(SparseGraph m) : m_(std::move(m)) {
  const std::size_t n = m_.n_nodes();
  auto rp = m_.row_ptr();
  auto col = m_.col_idx();
  std::vector<std::int64_t> trp(n + 1, 0);
  for (NodeId c : col) ++trp[static_cast<std::size_t>(c) + 1];
  for (std::size_t i = 0; i < n; ++i) trp[i + 1] += trp[i];
  std::vector<NodeId> tcol(col.size());
  std::vector<double> tw(col.size());
  t_arc_.assign(col.size(), 0);
  std::vector<std::int64_t> cursor(trp.begin(), trp.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto e = rp[i]; e < rp[i + 1]; ++e) {
      auto pos = cursor[static_cast<std::size_t>(col[e])]++;
      tcol[pos] = static_cast<NodeId>(i);
      tw[pos] = m_.edge_weight()[e];
      t_arc_[pos] = e;
    }
  }
  mt_ = SparseGraph::from_csr(n, std::move(trp), std::move(tcol), std::move(tw), true, true);
}

SparseConstant SparseConstant::from_dense(const Matrix& x) {
  SparseConstant s;
  s.rows_ = x.rows;
  s.cols_ = x.cols;
  s.row_ptr_.assign(x.rows + 1, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double v = x(i, j);
      if (v == 0.0) continue;
      s.col_idx_.push_back(static_cast<std::int32_t>(j));
      s.val_.push_back(v);
    }
    s.row_ptr_[i + 1] = static_cast<std::int64_t>(s.val_.size());
  }
  s.t_row_ptr_.assign(x.cols + 1, 0);
  for (auto c : s.col_idx_) ++s.t_row_ptr_[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < x.cols; ++j) s.t_row_ptr_[j + 1] += s.t_row_ptr_[j];
  s.t_col_idx_.resize(s.val_.size());
  s.t_val_.resize(s.val_.size());
  s.t_pos_.resize(s.val_.size());
  std::vector<std::int64_t> cursor(s.t_row_ptr_.begin(), s.t_row_ptr_.end() - 1);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (auto e = s.row_ptr_[i]; e < s.row_ptr_[i + 1]; ++e) {
      const auto pos = cursor[static_cast<std::size_t>(s.col_idx_[e])]++;
      s.t_col_idx_[pos] = static_cast<std::int32_t>(i);
      s.t_val_[pos] = s.val_[e];
      s.t_pos_[pos] = e;
    }
  return s;
}

double SparseConstant::density() const {
  const double cells = static_cast<double>(rows_) * static_cast<double>(cols_);
  return cells > 0 ? static_cast<double>(nnz()) / cells : 0.0;
}

kernels::CsrView SparseConstant::view() const {
  return {rows_, cols_, row_ptr_, col_idx_, val_};
}

kernels::CsrView SparseConstant::transposed_view() const {
  return {cols_, rows_, t_row_ptr_, t_col_idx_, t_val_};
}

Matrix SparseConstant::to_dense() const {
  Matrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) out(i, static_cast<std::size_t>(col_idx_[e])) = val_[e];
  return out;
}

SparseConstant SparseConstant::dropout(double p, std::mt19937_64& rng) const {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  SparseConstant out = *this;
  const double inv = 1.0 / (1.0 - p);
  MaskStream stream(rng, 1.0 - p);
  for (double& v : out.val_) v *= stream.keep() ? inv : 0.0;
  for (std::size_t k = 0; k < out.t_val_.size(); ++k) out.t_val_[k] = out.val_[out.t_pos_[k]];
  return out;
}

std::vector<Node*> topological_order(const Tensor& root) {
  std::vector<Node*> order;
  if (!root || !root.requires_grad()) return order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; a node is emitted after all of its parents.
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& loss) {
  require(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be a scalar tensor");
  auto order = topological_order(loss);
  if (order.empty()) return;
  for (Node* n : order)
    if (!n->parents.empty()) n->grad.fill(0.0);
  Node* root = order.back();
  if (root->parents.empty()) {
    root->grad.data[0] += 1.0;
    return;
  }
  root->grad.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
  auto an = a.node(), bn = b.node();
  return make_result(kernels::gemm(a.value(), b.value()), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) kernels::gemm_nt_acc(self.grad, bn->value, an->grad);
    if (bn->requires_grad) kernels::gemm_tn_acc(an->value, self.grad, bn->grad);
  });
}

Tensor sparse_matmul(std::shared_ptr<const SparseConstant> x, const Tensor& w) {
  require(x && x->cols() == w.rows(), "sparse_matmul: inner dimensions disagree");
  auto wn = w.node();
  return make_result(kernels::spmm(x->view(), w.value()), {wn}, [x, wn](Node& self) {
    if (wn->requires_grad) kernels::spmm_acc(x->transposed_view(), self.grad, wn->grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "add: shape mismatch");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
  auto an = a.node(), bn = b.node();
  return make_result(std::move(out), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, self.grad);
    if (bn->requires_grad) accumulate(*bn, self.grad);
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias: bias must be 1 x cols");
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += bias.value().data[j];
  auto xn = x.node(), bn = bias.node();
  return make_result(std::move(out), {xn, bn}, [xn, bn](Node& self) {
    if (xn->requires_grad) accumulate(*xn, self.grad);
    if (bn->requires_grad) {
      for (std::size_t i = 0; i < self.grad.rows; ++i)
        for (std::size_t j = 0; j < self.grad.cols; ++j) bn->grad.data[j] += self.grad(i, j);
    }
  });
}

Tensor scale(const Tensor& x, const Tensor& s) {
  require(s.rows() == 1 && s.cols() == 1, "scale: factor must be 1 x 1");
  const double f = s.value().data[0];
  Matrix out = x.value();
  for (double& v : out.data) v *= f;
  auto xn = x.node(), sn = s.node();
  return make_result(std::move(out), {xn, sn}, [xn, sn](Node& self) {
    const double f = sn->value.data[0];
    if (xn->requires_grad)
      for (std::size_t i = 0; i < self.grad.data.size(); ++i)
        xn->grad.data[i] += f * self.grad.data[i];
    if (sn->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.data.size(); ++i)
        acc += self.grad.data[i] * xn->value.data[i];
      sn->grad.data[0] += acc;
    }
  });
}

Tensor spmm(const SparseOperator& m, const Tensor& h) {
  require(m.n_nodes() == h.rows(), "spmm: graph size does not match feature rows");
  auto hn = h.node();
  const SparseOperator* op = &m;
  return make_result(kernels::spmm(m.matrix().view(), h.value()), {hn}, [hn, op](Node& self) {
    if (hn->requires_grad) kernels::spmm_acc(op->transposed().view(), self.grad, hn->grad);
  });
}

Tensor relu(const Tensor& x) {
  Matrix out = x.value();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return unary(x, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; }, std::move(out));
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Matrix out = x.value();
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  return unary(x, [slope](double in, double) { return in > 0.0 ? 1.0 : slope; }, std::move(out));
}

Tensor elu(const Tensor& x, double alpha) {
  Matrix out = x.value();
  for (double& v : out.data) v = v > 0.0 ? v : alpha * std::expm1(v);
  return unary(
      x, [alpha](double in, double out) { return in > 0.0 ? 1.0 : out + alpha; }, std::move(out));
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  if (!training || p == 0.0) return x;
  const double inv = 1.0 / (1.0 - p);
  MaskStream stream(rng, 1.0 - p);
  Matrix out = x.value();
  if (!x.requires_grad()) {
    // Zero entries of a constant input stay zero whatever the mask; skip their draws.
    for (double& v : out.data)
      if (v != 0.0) v *= stream.keep() ? inv : 0.0;
    return Tensor::constant(std::move(out));
  }
  auto mask = std::make_shared<std::vector<double>>(out.data.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    (*mask)[i] = stream.keep() ? inv : 0.0;
    out.data[i] *= (*mask)[i];
  }
  auto xn = x.node();
  return make_result(std::move(out), {xn}, [xn, mask](Node& self) {
    for (std::size_t i = 0; i < self.grad.data.size(); ++i)
      xn->grad.data[i] += self.grad.data[i] * (*mask)[i];
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> nodes;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
    offset += p.cols();
    nodes.push_back(p.node());
  }
  auto parents = nodes;
  return make_result(std::move(out), std::move(parents), [nodes](Node& self) {
    std::size_t offset = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        for (std::size_t i = 0; i < n->value.rows; ++i)
          for (std::size_t j = 0; j < n->value.cols; ++j) n->grad(i, j) += self.grad(i, offset + j);
      }
      offset += n->value.cols;
    }
  });
}

namespace {

Tensor weighted_sum(std::span<const Tensor> parts, double factor) {
  require(!parts.empty(), "sum: no inputs");
  Matrix out(parts[0].rows(), parts[0].cols());
  std::vector<NodePtr> nodes;
  for (const auto& p : parts) {
    require(p.value().same_shape(out), "sum: shape mismatch");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += p.value().data[i];
    nodes.push_back(p.node());
  }
  if (factor != 1.0)
    for (double& v : out.data) v *= factor;
  auto parents = nodes;
  return make_result(std::move(out), std::move(parents), [nodes, factor](Node& self) {
    for (const auto& n : nodes) {
      if (!n->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.data.size(); ++i)
        n->grad.data[i] += factor * self.grad.data[i];
    }
  });
}

}  // namespace

Tensor sum(std::span<const Tensor> parts) { return weighted_sum(parts, 1.0); }

Tensor mean(std::span<const Tensor> parts) {
  return weighted_sum(parts, 1.0 / static_cast<double>(parts.size()));
}

Tensor max(std::span<const Tensor> parts) {
  require(!parts.empty(), "max: no inputs");
  Matrix out = parts[0].value();
  auto winner = std::make_shared<std::vector<std::uint32_t>>(out.size(), 0);
  std::vector<NodePtr> nodes{parts[0].node()};
  for (std::size_t k = 1; k < parts.size(); ++k) {
    require(parts[k].value().same_shape(out), "max: shape mismatch");
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      if (parts[k].value().data[i] > out.data[i]) {
        out.data[i] = parts[k].value().data[i];
        (*winner)[i] = static_cast<std::uint32_t>(k);
      }
    }
    nodes.push_back(parts[k].node());
  }
  auto parents = nodes;
  return make_result(std::move(out), std::move(parents), [nodes, winner](Node& self) {
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      auto& n = nodes[(*winner)[i]];
      if (n->requires_grad) n->grad.data[i] += self.grad.data[i];
    }
  });
}

Tensor edge_score(const SparseOperator& m, const Tensor& dst_scores, const Tensor& src_scores) {
  const std::size_t n = m.n_nodes();
  require(src_scores.rows() == n && src_scores.cols() == 1, "edge_score: src scores must be N x 1");
  const bool has_dst = static_cast<bool>(dst_scores);
  if (has_dst)
    require(dst_scores.rows() == n && dst_scores.cols() == 1, "edge_score: dst scores must be N x 1");
  const auto& g = m.matrix();
  auto rp = g.row_ptr();
  auto col = g.col_idx();
  Matrix out(g.n_arcs(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double di = has_dst ? dst_scores.value().data[i] : 0.0;
    for (auto e = rp[i]; e < rp[i + 1]; ++e) out.data[e] = di + src_scores.value().data[col[e]];
  }
  auto sn = src_scores.node();
  NodePtr dn = has_dst ? dst_scores.node() : nullptr;
  std::vector<NodePtr> parents{sn};
  if (dn) parents.push_back(dn);
  const SparseOperator* op = &m;
  return make_result(std::move(out), std::move(parents), [sn, dn, op](Node& self) {
    const auto& g = op->matrix();
    auto rp = g.row_ptr();
    auto col = g.col_idx();
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      for (auto e = rp[i]; e < rp[i + 1]; ++e) {
        if (dn && dn->requires_grad) dn->grad.data[i] += self.grad.data[e];
        if (sn->requires_grad) sn->grad.data[col[e]] += self.grad.data[e];
      }
    }
  });
}

Tensor edge_softmax(const SparseOperator& m, const Tensor& scores) {
  const auto& g = m.matrix();
  require(scores.rows() == g.n_arcs() && scores.cols() == 1, "edge_softmax: scores must be E x 1");
  auto rp = g.row_ptr();
  Matrix out(g.n_arcs(), 1);
  const auto& s = scores.value().data;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    if (rp[i] == rp[i + 1]) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (auto e = rp[i]; e < rp[i + 1]; ++e) mx = std::max(mx, s[e]);
    double z = 0.0;
    for (auto e = rp[i]; e < rp[i + 1]; ++e) z += (out.data[e] = std::exp(s[e] - mx));
    for (auto e = rp[i]; e < rp[i + 1]; ++e) out.data[e] /= z;
  }
  auto xn = scores.node();
  const SparseOperator* op = &m;
  return make_result(std::move(out), {xn}, [xn, op](Node& self) {
    if (!xn->requires_grad) return;
    auto rp = op->matrix().row_ptr();
    for (std::size_t i = 0; i < op->n_nodes(); ++i) {
      double dot = 0.0;
      for (auto e = rp[i]; e < rp[i + 1]; ++e) dot += self.grad.data[e] * self.value.data[e];
      for (auto e = rp[i]; e < rp[i + 1]; ++e)
        xn->grad.data[e] += self.value.data[e] * (self.grad.data[e] - dot);
    }
  });
}

Tensor edge_aggregate(const SparseOperator& m, const Tensor& coef, const Tensor& v) {
  const auto& g = m.matrix();
  require(coef.rows() == g.n_arcs() && coef.cols() == 1, "edge_aggregate: coef must be E x 1");
  require(v.rows() == g.n_nodes(), "edge_aggregate: value rows must equal n_nodes");
  kernels::CsrView view{g.n_nodes(), g.n_nodes(), g.row_ptr(), g.col_idx(), coef.value().data};
  auto cn = coef.node(), vn = v.node();
  const SparseOperator* op = &m;
  return make_result(kernels::spmm(view, v.value()), {cn, vn}, [cn, vn, op](Node& self) {
    const auto& g = op->matrix();
    const std::size_t d = self.grad.cols;
    if (cn->requires_grad) {
      auto rp = g.row_ptr();
      auto col = g.col_idx();
      for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        for (auto e = rp[i]; e < rp[i + 1]; ++e) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += self.grad(i, j) * vn->value(col[e], j);
          cn->grad.data[e] += dot;
        }
      }
    }
    if (vn->requires_grad) {
      const auto& t = op->transposed();
      auto t_arc = op->transpose_arc();
      std::vector<double> w(t.n_arcs());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = cn->value.data[t_arc[k]];
      kernels::CsrView tv{t.n_nodes(), t.n_nodes(), t.row_ptr(), t.col_idx(), w};
      kernels::spmm_acc(tv, self.grad, vn->grad);
    }
  });
}

Tensor masked_softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                    std::span<const std::uint8_t> mask) {
  const std::size_t n = logits.rows(), c = logits.cols();
  require(labels.size() == n && mask.size() == n, "cross_entropy: label/mask length mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c,
            "cross_entropy: invalid label on masked row");
    ++count;
  }
  require(count > 0, "cross_entropy: empty mask");
  auto probs = std::make_shared<Matrix>(softmax_rows(logits.value()));
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    auto row = logits.value().row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    loss += std::log(z) - (row[labels[i]] - mx);
  }
  const double inv = 1.0 / static_cast<double>(count);
  Matrix out(1, 1, loss * inv);
  auto ln = logits.node();
  std::vector<int> lab(labels.begin(), labels.end());
  Mask msk(mask.begin(), mask.end());
  return make_result(std::move(out), {ln}, [ln, probs, lab = std::move(lab), msk = std::move(msk), inv](Node& self) {
    if (!ln->requires_grad) return;
    const double g = self.grad.data[0] * inv;
    for (std::size_t i = 0; i < probs->rows; ++i) {
      if (!msk[i]) continue;
      for (std::size_t j = 0; j < probs->cols; ++j) {
        const double target = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
        ln->grad(i, j) += g * ((*probs)(i, j) - target);
      }
    }
  });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto row = logits.row(i);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) z += (out(i, j) = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < row.size(); ++j) out(i, j) /= z;
  }
  return out;
}

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h,
                  std::uint64_t seed, std::size_t min_coords) {
  for (auto& p : params) p.zero_grad();
  backward(f());
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k].value().size(); ++i) coords.emplace_back(k, i);
  if (coords.size() > min_coords) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(min_coords);
  }
  double worst = 0.0;
  for (auto [k, i] : coords) {
    double& x = params[k].value().data[i];
    const double saved = x;
    x = saved + h;
    const double up = f().value().data[0];
    x = saved - h;
    const double down = f().value().data[0];
    x = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = params[k].grad().data[i];
    const double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace autograph::ad
