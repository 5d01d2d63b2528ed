#include <algorithm>
#include <vector>

#include "autograph/error.hpp"
#include "autograph/model.hpp"

namespace autograph {

using ad::Tensor;

std::shared_ptr<const GraphContext> GraphContext::build(const SparseGraph& g, bool with_two_hop) {
  auto ctx = std::make_shared<GraphContext>();
  ctx->graph = g;
  const std::size_t n = g.n_nodes();

  ctx->gcn_norm = ad::SparseOperator(normalize(to_undirected(g), NormMode::symmetric, true));

  // Messages travel along arcs, so aggregation reads the transpose's rows.
  const SparseGraph in = strip_self_loops(g.transpose());
  {
    std::vector<std::int64_t> rp(in.row_ptr().begin(), in.row_ptr().end());
    std::vector<NodeId> col(in.col_idx().begin(), in.col_idx().end());
    std::vector<double> w(col.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double inv = 1.0 / static_cast<double>(std::max<std::int64_t>(1, rp[i + 1] - rp[i]));
      for (auto e = rp[i]; e < rp[i + 1]; ++e) w[e] = inv;
    }
    ctx->mean_in = ad::SparseOperator(
        SparseGraph::from_csr(n, std::move(rp), std::move(col), std::move(w), true, true));
  }
  {
    std::vector<Edge> arcs;
    arcs.reserve(in.n_arcs() + n);
    for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
      arcs.push_back({i, i, 1.0});
      for (NodeId j : in.neighbors(i)) arcs.push_back({i, j, 1.0});
    }
    ctx->attend_in = ad::SparseOperator(SparseGraph::from_edges(n, std::move(arcs), true, false));
  }
  if (with_two_hop) {
    std::vector<std::int64_t> rp(n + 1, 0);
    std::vector<NodeId> col;
    for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
      auto hood = k_hop(g, i, 2);
      col.insert(col.end(), hood.begin(), hood.end());
      rp[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(col.size());
    }
    std::vector<double> w(col.size(), 1.0);
    ctx->two_hop = ad::SparseOperator(
        SparseGraph::from_csr(n, std::move(rp), std::move(col), std::move(w), true, false));
  }
  return ctx;
}

Tensor gcn_layer(const ad::SparseOperator& a_hat, const Tensor& h, const Tensor& w,
                 const Tensor& bias) {
  require(h.cols() == w.rows(), "gcn_layer: weight rows must equal feature width");
  Tensor out = ad::spmm(a_hat, ad::matmul(h, w));
  return bias ? ad::add_bias(out, bias) : out;
}

Tensor tagconv_layer(const ad::SparseOperator& a_hat, const Tensor& h, std::span<const Tensor> w,
                     const Tensor& bias) {
  require(!w.empty(), "tagconv_layer: needs K+1 weights");
  std::vector<Tensor> terms{ad::matmul(h, w[0])};
  Tensor power = h;
  for (std::size_t k = 1; k < w.size(); ++k) {
    power = ad::spmm(a_hat, power);
    terms.push_back(ad::matmul(power, w[k]));
  }
  Tensor out = terms.size() == 1 ? terms[0] : ad::sum(terms);
  return bias ? ad::add_bias(out, bias) : out;
}

Tensor sage_mean_layer(const ad::SparseOperator& mean_in, const Tensor& h, const Tensor& w_self,
                       const Tensor& w_neigh, const Tensor& bias) {
  Tensor out = ad::add(ad::matmul(h, w_self), ad::matmul(ad::spmm(mean_in, h), w_neigh));
  return bias ? ad::add_bias(out, bias) : out;
}

Tensor gat_layer(const ad::SparseOperator& attend_in, const Tensor& h,
                 std::span<const GatHead> heads, double leaky_slope, bool average_heads) {
  require(!heads.empty(), "gat_layer: needs at least one head");
  std::vector<Tensor> outs;
  for (const auto& head : heads) {
    Tensor wh = ad::matmul(h, head.w);
    Tensor scores = ad::leaky_relu(
        ad::edge_score(attend_in, ad::matmul(wh, head.a_dst), ad::matmul(wh, head.a_src)),
        leaky_slope);
    outs.push_back(ad::edge_aggregate(attend_in, ad::edge_softmax(attend_in, scores), wh));
  }
  if (outs.size() == 1) return outs[0];
  return average_heads ? ad::mean(outs) : ad::concat_cols(outs);
}

Tensor two_hop_linear_layer(const ad::SparseOperator& two_hop, const Tensor& h,
                            const Tensor& attention, const Tensor& w, const Tensor& bias,
                            const Tensor& alpha) {
  require(attention.rows() == h.cols() && attention.cols() == 1,
          "two_hop_linear_layer: attention must be d x 1");
  Tensor coef = ad::edge_softmax(two_hop, ad::edge_score(two_hop, Tensor{}, ad::matmul(h, attention)));
  Tensor hood = ad::edge_aggregate(two_hop, coef, h);
  Tensor self = ad::matmul(h, w);
  if (bias) self = ad::add_bias(self, bias);
  return ad::add(hood, ad::scale(self, alpha));
}

}  // namespace autograph
