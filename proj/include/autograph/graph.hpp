#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "autograph/kernels.hpp"
#include "autograph/matrix.hpp"

namespace autograph {

using NodeId = std::int32_t;
using Mask = std::vector<std::uint8_t>;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;
};

/// Canonical CSR adjacency. Undirected graphs store both arcs of every edge.
/// Immutable once built; every constructor validates the CSR invariants.
class SparseGraph {
 public:
  SparseGraph() : row_ptr_{0} {}

  /// Builds from an edge list. Undirected input lists each edge once in
  /// either direction; duplicates merge by weight sum (or stay 1 when
  /// unweighted). Self-loops are kept; the loader strips them beforehand.
  static SparseGraph from_edges(std::size_t n_nodes, std::vector<Edge> edges, bool directed,
                                bool weighted);

  /// Takes ownership of ready-made CSR arrays and validates them.
  static SparseGraph from_csr(std::size_t n_nodes, std::vector<std::int64_t> row_ptr,
                              std::vector<NodeId> col_idx, std::vector<double> edge_weight,
                              bool directed, bool weighted);

  std::size_t n_nodes() const { return row_ptr_.size() - 1; }
  std::size_t n_arcs() const { return col_idx_.size(); }
  bool directed() const { return directed_; }
  bool weighted() const { return weighted_; }

  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const NodeId> col_idx() const { return col_idx_; }
  std::span<const double> edge_weight() const { return edge_weight_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return std::span(col_idx_).subspan(row_ptr_[v], row_ptr_[v + 1] - row_ptr_[v]);
  }
  std::span<const double> weights(NodeId v) const {
    return std::span(edge_weight_).subspan(row_ptr_[v], row_ptr_[v + 1] - row_ptr_[v]);
  }
  std::size_t out_degree(NodeId v) const {
    return static_cast<std::size_t>(row_ptr_[v + 1] - row_ptr_[v]);
  }
  /// Weight of arc (i -> j), 0 when absent.
  double weight(NodeId i, NodeId j) const;

  /// Reversed arcs: row i of the transpose lists the in-neighbors of i.
  SparseGraph transpose() const;
  /// Dense realization of the weighted adjacency (tests and small graphs).
  Matrix to_dense() const;
  kernels::CsrView view() const;

  friend bool operator==(const SparseGraph&, const SparseGraph&) = default;

 private:
  std::vector<std::int64_t> row_ptr_;
  std::vector<NodeId> col_idx_;
  std::vector<double> edge_weight_;
  bool directed_ = false;
  bool weighted_ = false;
};

struct DatasetBundle {
  SparseGraph graph;
  std::optional<Matrix> features;
  std::vector<int> labels;  // -1 where unknown
  Mask train_mask;
  Mask test_mask;
  int n_classes = 0;
  double time_budget_seconds = 600.0;
  /// Test node ids in the order of test_ids.tsv; predictions follow it.
  std::vector<NodeId> test_order;

  std::size_t n_nodes() const { return graph.n_nodes(); }
  bool featureless() const { return !features.has_value(); }
  /// Throws ContractViolation when a bundle invariant does not hold.
  void validate() const;
};

struct GraphStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double avg_degree = 0.0;
  std::size_t n_features = 0;
  int n_classes = 0;
  bool directed = false;
  bool weighted = false;
  double skewness = 1.0;
};

enum class NormMode { symmetric, row };

/// Table-style statistics. Undirected graphs count each symmetric pair once;
/// skewness uses training labels only.
GraphStats compute_stats(const DatasetBundle& bundle);

/// Symmetric mode realizes D^{-1/2}(A+I)D^{-1/2}, row mode D^{-1}(A+I).
SparseGraph normalize(const SparseGraph& g, NormMode mode, bool add_self_loops);

/// Nodes within k hops of `node` (k in {1,2}), excluding the node, ascending.
std::vector<NodeId> k_hop(const SparseGraph& g, NodeId node, int k);

/// Symmetrized copy; a pair takes the max of its two arc weights.
SparseGraph to_undirected(const SparseGraph& g);

/// Drops every self-loop.
SparseGraph strip_self_loops(const SparseGraph& g);

DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);
/// Writes `labels_test.tsv` (node_id, label) for the listed nodes.
void save_truth(const std::filesystem::path& file, std::span<const NodeId> ids,
                std::span<const int> labels);

}  // namespace autograph
