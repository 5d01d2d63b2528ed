#include "autograph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "autograph/error.hpp"

namespace autograph {

namespace {

struct ArcKey {
  NodeId src, dst;
  auto operator<=>(const ArcKey&) const = default;
};

SparseGraph build_sorted(std::size_t n, std::vector<Edge>& arcs, bool directed, bool weighted) {
  std::sort(arcs.begin(), arcs.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  std::vector<std::int64_t> row_ptr(n + 1, 0);
  std::vector<NodeId> col;
  std::vector<double> w;
  col.reserve(arcs.size());
  w.reserve(arcs.size());
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    if (i > 0 && arcs[i].src == arcs[i - 1].src && arcs[i].dst == arcs[i - 1].dst) {
      if (weighted) w.back() += arcs[i].weight;
      continue;
    }
    col.push_back(arcs[i].dst);
    w.push_back(weighted ? arcs[i].weight : 1.0);
    ++row_ptr[static_cast<std::size_t>(arcs[i].src) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) row_ptr[i + 1] += row_ptr[i];
  return SparseGraph::from_csr(n, std::move(row_ptr), std::move(col), std::move(w), directed,
                               weighted);
}

}  // namespace

SparseGraph SparseGraph::from_edges(std::size_t n_nodes, std::vector<Edge> edges, bool directed,
                                    bool weighted) {
  for (const auto& e : edges) {
    require(e.src >= 0 && static_cast<std::size_t>(e.src) < n_nodes && e.dst >= 0 &&
                static_cast<std::size_t>(e.dst) < n_nodes,
            "from_edges: node id out of range");
  }
  if (directed) return build_sorted(n_nodes, edges, directed, weighted);

  // Merge per unordered pair first so (u,v) and (v,u) count as one edge.
  std::map<ArcKey, double> pairs;
  for (const auto& e : edges) {
    ArcKey key{std::min(e.src, e.dst), std::max(e.src, e.dst)};
    auto [it, inserted] = pairs.try_emplace(key, weighted ? e.weight : 1.0);
    if (!inserted && weighted) it->second += e.weight;
  }
  std::vector<Edge> arcs;
  arcs.reserve(2 * pairs.size());
  for (const auto& [key, w] : pairs) {
    arcs.push_back({key.src, key.dst, w});
    if (key.src != key.dst) arcs.push_back({key.dst, key.src, w});
  }
  return build_sorted(n_nodes, arcs, directed, weighted);
}

SparseGraph SparseGraph::from_csr(std::size_t n_nodes, std::vector<std::int64_t> row_ptr,
                                  std::vector<NodeId> col_idx, std::vector<double> edge_weight,
                                  bool directed, bool weighted) {
  require(row_ptr.size() == n_nodes + 1, "csr: row_ptr must have n_nodes+1 entries");
  require(row_ptr.front() == 0, "csr: row_ptr[0] must be 0");
  require(static_cast<std::size_t>(row_ptr.back()) == col_idx.size(),
          "csr: row_ptr[n] must equal the arc count");
  require(edge_weight.size() == col_idx.size(), "csr: weight/column length mismatch");
  for (std::size_t i = 0; i < n_nodes; ++i) {
    require(row_ptr[i] <= row_ptr[i + 1], "csr: row_ptr must be non-decreasing");
    for (auto e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      require(col_idx[e] >= 0 && static_cast<std::size_t>(col_idx[e]) < n_nodes,
              "csr: column out of range");
      require(e == row_ptr[i] || col_idx[e - 1] < col_idx[e],
              "csr: columns must be strictly increasing within a row");
      require(weighted || edge_weight[e] == 1.0, "csr: unweighted graph with weight != 1");
    }
  }
  SparseGraph g;
  g.row_ptr_ = std::move(row_ptr);
  g.col_idx_ = std::move(col_idx);
  g.edge_weight_ = std::move(edge_weight);
  g.directed_ = directed;
  g.weighted_ = weighted;
  if (!directed) {
    for (NodeId i = 0; static_cast<std::size_t>(i) < n_nodes; ++i) {
      auto nb = g.neighbors(i);
      auto ws = g.weights(i);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        require(g.weight(nb[k], i) == ws[k], "csr: undirected graph is not symmetric");
      }
    }
  }
  return g;
}

double SparseGraph::weight(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  return weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

SparseGraph SparseGraph::transpose() const {
  const std::size_t n = n_nodes();
  std::vector<std::int64_t> rp(n + 1, 0);
  for (NodeId c : col_idx_) ++rp[static_cast<std::size_t>(c) + 1];
  for (std::size_t i = 0; i < n; ++i) rp[i + 1] += rp[i];
  std::vector<NodeId> col(col_idx_.size());
  std::vector<double> w(col_idx_.size());
  std::vector<std::int64_t> cursor(rp.begin(), rp.end() - 1);
  // Rows are visited in ascending order, so each transposed row comes out sorted.
  for (std::size_t i = 0; i < n; ++i) {
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
      auto pos = cursor[static_cast<std::size_t>(col_idx_[e])]++;
      col[pos] = static_cast<NodeId>(i);
      w[pos] = edge_weight_[e];
    }
  }
  return from_csr(n, std::move(rp), std::move(col), std::move(w), directed_, weighted_);
}

Matrix SparseGraph::to_dense() const {
  const std::size_t n = n_nodes();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) m(i, col_idx_[e]) = edge_weight_[e];
  return m;
}

kernels::CsrView SparseGraph::view() const {
  return {n_nodes(), n_nodes(), row_ptr_, col_idx_, edge_weight_};
}

void DatasetBundle::validate() const {
  const std::size_t n = n_nodes();
  require(labels.size() == n, "bundle: labels length must equal n_nodes");
  require(train_mask.size() == n && test_mask.size() == n, "bundle: mask length mismatch");
  require(n_classes >= 1, "bundle: n_classes must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    require(!(train_mask[i] && test_mask[i]), "bundle: train and test masks overlap");
    if (train_mask[i]) {
      require(labels[i] >= 0 && labels[i] < n_classes, "bundle: training label out of range");
    }
  }
  if (features) require(features->rows == n, "bundle: features must have one row per node");
}

GraphStats compute_stats(const DatasetBundle& bundle) {
  GraphStats s;
  const auto& g = bundle.graph;
  s.n_nodes = g.n_nodes();
  s.directed = g.directed();
  s.weighted = g.weighted();
  s.n_classes = bundle.n_classes;
  s.n_features = bundle.features ? bundle.features->cols : 0;
  if (g.directed()) {
    s.n_edges = g.n_arcs();
  } else {
    std::size_t loops = 0;
    for (NodeId i = 0; static_cast<std::size_t>(i) < g.n_nodes(); ++i)
      if (g.weight(i, i) != 0.0) ++loops;
    s.n_edges = (g.n_arcs() - loops) / 2 + loops;
  }
  s.avg_degree = s.n_nodes ? static_cast<double>(s.n_edges) / static_cast<double>(s.n_nodes) : 0.0;

  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(bundle.n_classes, 0)), 0);
  for (std::size_t i = 0; i < bundle.labels.size(); ++i)
    if (bundle.train_mask[i]) ++counts[static_cast<std::size_t>(bundle.labels[i])];
  std::size_t largest = 0, smallest = 0;
  bool any = false;
  for (auto c : counts) {
    if (c == 0) continue;
    largest = any ? std::max(largest, c) : c;
    smallest = any ? std::min(smallest, c) : c;
    any = true;
  }
  s.skewness = any ? static_cast<double>(largest) / static_cast<double>(smallest) : 1.0;
  return s;
}

SparseGraph normalize(const SparseGraph& g, NormMode mode, bool add_self_loops) {
  if (mode == NormMode::symmetric)
    require(!g.directed(), "normalize: symmetric mode requires an undirected graph");
  const std::size_t n = g.n_nodes();
  std::vector<Edge> arcs;
  arcs.reserve(g.n_arcs() + n);
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    auto nb = g.neighbors(i);
    auto ws = g.weights(i);
    bool has_loop = false;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      double w = ws[k];
      if (nb[k] == i) {
        has_loop = true;
        if (add_self_loops) w += 1.0;
      }
      arcs.push_back({i, nb[k], w});
    }
    if (add_self_loops && !has_loop) arcs.push_back({i, i, 1.0});
  }
  std::vector<double> deg(n, 0.0);
  for (const auto& a : arcs) deg[static_cast<std::size_t>(a.src)] += a.weight;
  for (auto& a : arcs) {
    const double di = deg[static_cast<std::size_t>(a.src)];
    if (mode == NormMode::row) {
      a.weight = a.weight / di;
    } else {
      const double dj = deg[static_cast<std::size_t>(a.dst)];
      a.weight = a.weight / (std::sqrt(di) * std::sqrt(dj));
    }
  }
  // Row mode weights are not symmetric, so the result is flagged directed.
  return build_sorted(n, arcs, /*directed=*/mode == NormMode::row || g.directed(),
                      /*weighted=*/true);
}

std::vector<NodeId> k_hop(const SparseGraph& g, NodeId node, int k) {
  require(node >= 0 && static_cast<std::size_t>(node) < g.n_nodes(), "k_hop: node out of range");
  require(k == 1 || k == 2, "k_hop: k must be 1 or 2");
  std::vector<NodeId> out(g.neighbors(node).begin(), g.neighbors(node).end());
  if (k == 2) {
    for (NodeId u : g.neighbors(node)) {
      auto nb = g.neighbors(u);
      out.insert(out.end(), nb.begin(), nb.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  std::erase(out, node);
  return out;
}

SparseGraph to_undirected(const SparseGraph& g) {
  if (!g.directed()) return g;
  const std::size_t n = g.n_nodes();
  std::map<ArcKey, double> pairs;
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    auto nb = g.neighbors(i);
    auto ws = g.weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      ArcKey key{std::min(i, nb[k]), std::max(i, nb[k])};
      auto [it, inserted] = pairs.try_emplace(key, ws[k]);
      if (!inserted) it->second = std::max(it->second, ws[k]);
    }
  }
  std::vector<Edge> arcs;
  arcs.reserve(2 * pairs.size());
  for (const auto& [key, w] : pairs) {
    arcs.push_back({key.src, key.dst, w});
    if (key.src != key.dst) arcs.push_back({key.dst, key.src, w});
  }
  return build_sorted(n, arcs, /*directed=*/false, g.weighted());
}

SparseGraph strip_self_loops(const SparseGraph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<std::int64_t> rp(n + 1, 0);
  std::vector<NodeId> col;
  std::vector<double> w;
  col.reserve(g.n_arcs());
  w.reserve(g.n_arcs());
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    auto nb = g.neighbors(i);
    auto ws = g.weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] == i) continue;
      col.push_back(nb[k]);
      w.push_back(ws[k]);
    }
    rp[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(col.size());
  }
  return SparseGraph::from_csr(n, std::move(rp), std::move(col), std::move(w), g.directed(),
                               g.weighted());
}

}  // namespace autograph
