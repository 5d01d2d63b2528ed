#include "autograph/features.hpp"

#include <algorithm>
#include <cmath>

#include "autograph/error.hpp"

namespace autograph {

FeatureBlock raw_features(const DatasetBundle& bundle) {
  require(bundle.features.has_value(), "raw_features: bundle is featureless");
  return {"raw", *bundle.features, FeatureSource::raw};
}

FeatureBlock one_hot_ids(const DatasetBundle& bundle) {
  require(bundle.featureless(), "one_hot_ids: bundle already has features");
  const std::size_t n = bundle.n_nodes();
  if (n > kOneHotCap)
    throw CapacityError("one_hot_ids: " + std::to_string(n) + " nodes exceeds the cap of " +
                        std::to_string(kOneHotCap));
  return {"one_hot", Matrix::identity(n), FeatureSource::one_hot};
}

FeatureBlock degree_features(const DatasetBundle& bundle) {
  const auto& g = bundle.graph;
  const std::size_t n = g.n_nodes();
  Matrix m(n, 3);
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    m(i, 1) = static_cast<double>(g.out_degree(i));
    for (NodeId j : g.neighbors(i)) m(j, 0) += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double total = g.directed() ? m(i, 0) + m(i, 1) : m(i, 1);
    m(i, 2) = std::log1p(total);
  }
  return {"degree", std::move(m), FeatureSource::degree};
}

FeatureBlock neighbor_feature_stats(const DatasetBundle& bundle, int hops) {
  require(bundle.features.has_value(), "neighbor_feature_stats: bundle is featureless");
  const auto& x = *bundle.features;
  const std::size_t n = bundle.n_nodes();
  Matrix m(n, x.cols);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    auto hood = k_hop(bundle.graph, static_cast<NodeId>(i), hops);
    if (hood.empty()) continue;
    auto out = m.row(static_cast<std::size_t>(i));
    for (NodeId j : hood) {
      auto src = x.row(static_cast<std::size_t>(j));
      for (std::size_t c = 0; c < x.cols; ++c) out[c] += src[c];
    }
    const double inv = 1.0 / static_cast<double>(hood.size());
    for (double& v : out) v *= inv;
  }
  return {hops == 1 ? "neigh_feat_1hop" : "neigh_feat_2hop", std::move(m),
          hops == 1 ? FeatureSource::neigh_feat_1hop : FeatureSource::neigh_feat_2hop};
}

FeatureBlock neighbor_label_distribution(const DatasetBundle& bundle, int hops) {
  return neighbor_label_distribution(bundle, hops, bundle.train_mask);
}

FeatureBlock neighbor_label_distribution(const DatasetBundle& bundle, int hops,
                                         const Mask& label_mask) {
  const std::size_t n = bundle.n_nodes();
  require(label_mask.size() == n, "neighbor_label_distribution: mask length mismatch");
  const auto c = static_cast<std::size_t>(bundle.n_classes);
  Matrix m(n, c);
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    auto out = m.row(i);
    std::size_t seen = 0;
    for (NodeId j : k_hop(bundle.graph, i, hops)) {
      if (!label_mask[j] || !bundle.train_mask[j]) continue;
      ++out[static_cast<std::size_t>(bundle.labels[j])];
      ++seen;
    }
    if (seen == 0) {
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(c));
    } else {
      for (double& v : out) v /= static_cast<double>(seen);
    }
  }
  return {hops == 1 ? "neigh_label_1hop" : "neigh_label_2hop", std::move(m),
          hops == 1 ? FeatureSource::neigh_label_1hop : FeatureSource::neigh_label_2hop};
}

FeatureBlock hub_indicator(const DatasetBundle& bundle, double percentile) {
  require(percentile >= 0.0 && percentile <= 100.0, "hub_indicator: percentile out of range");
  const auto& g = bundle.graph;
  const std::size_t n = g.n_nodes();
  Matrix m(n, 1);
  if (n == 0) return {"hub", std::move(m), FeatureSource::hub};
  std::vector<double> deg(n);
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    deg[i] += static_cast<double>(g.out_degree(i));
    if (g.directed())
      for (NodeId j : g.neighbors(i)) deg[j] += 1.0;
  }
  std::vector<double> sorted = deg;
  std::sort(sorted.begin(), sorted.end());
  // Nearest-rank percentile.
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  const double threshold = sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
  double mean = 0.0;
  for (double d : deg) mean += d;
  mean /= static_cast<double>(n);
  for (NodeId i = 0; static_cast<std::size_t>(i) < n; ++i) {
    for (NodeId j : g.neighbors(i)) {
      if (deg[j] >= threshold && deg[j] > mean) {
        m(i, 0) = 1.0;
        break;
      }
    }
  }
  return {"hub", std::move(m), FeatureSource::hub};
}

Matrix assemble(const std::vector<const FeatureBlock*>& blocks, bool standardize) {
  require(!blocks.empty(), "assemble: no blocks");
  const std::size_t n = blocks[0]->matrix.rows;
  std::size_t width = 0;
  for (const auto* b : blocks) {
    require(b->matrix.rows == n, "assemble: blocks have different row counts");
    width += b->matrix.cols;
  }
  Matrix out(n, width);
  std::size_t offset = 0;
  for (const auto* b : blocks) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < b->matrix.cols; ++j) out(i, offset + j) = b->matrix(i, j);
    offset += b->matrix.cols;
  }
  if (standardize && n > 0) {
    for (std::size_t j = 0; j < width; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += out(i, j);
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (out(i, j) - mu) * (out(i, j) - mu);
      const double sigma = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
      for (std::size_t i = 0; i < n; ++i) out(i, j) = (out(i, j) - mu) / sigma;
    }
  }
  return out;
}

Matrix assemble(const std::vector<FeatureBlock>& blocks, bool standardize) {
  std::vector<const FeatureBlock*> ptrs;
  for (const auto& b : blocks) ptrs.push_back(&b);
  return assemble(ptrs, standardize);
}

void normalize_rows_l1(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    double norm = 0.0;
    for (double v : row) norm += std::abs(v);
    if (norm > 0.0)
      for (double& v : row) v /= norm;
  }
}

std::string to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::raw: return "raw";
    case FeatureSource::one_hot: return "one_hot";
    case FeatureSource::degree: return "degree";
    case FeatureSource::neigh_feat_1hop: return "neigh_feat_1hop";
    case FeatureSource::neigh_feat_2hop: return "neigh_feat_2hop";
    case FeatureSource::neigh_label_1hop: return "neigh_label_1hop";
    case FeatureSource::neigh_label_2hop: return "neigh_label_2hop";
    case FeatureSource::hub: return "hub";
  }
  return "?";
}

FeatureSource feature_source_from_string(const std::string& s) {
  for (auto f : {FeatureSource::raw, FeatureSource::one_hot, FeatureSource::degree,
                 FeatureSource::neigh_feat_1hop, FeatureSource::neigh_feat_2hop,
                 FeatureSource::neigh_label_1hop, FeatureSource::neigh_label_2hop,
                 FeatureSource::hub})
    if (to_string(f) == s) return f;
  throw FormatError("unknown feature block: " + s);
}

FeatureBlock make_block(FeatureSource s, const DatasetBundle& bundle, const Mask& label_mask) {
  switch (s) {
    case FeatureSource::raw: return raw_features(bundle);
    case FeatureSource::one_hot: return one_hot_ids(bundle);
    case FeatureSource::degree: return degree_features(bundle);
    case FeatureSource::neigh_feat_1hop: return neighbor_feature_stats(bundle, 1);
    case FeatureSource::neigh_feat_2hop: return neighbor_feature_stats(bundle, 2);
    case FeatureSource::neigh_label_1hop: return neighbor_label_distribution(bundle, 1, label_mask);
    case FeatureSource::neigh_label_2hop: return neighbor_label_distribution(bundle, 2, label_mask);
    case FeatureSource::hub: return hub_indicator(bundle);
  }
  throw ContractViolation("make_block: unknown source");
}

std::size_t block_width(FeatureSource s, std::size_t n_nodes, std::size_t n_features, int n_classes) {
  switch (s) {
    case FeatureSource::raw:
    case FeatureSource::neigh_feat_1hop:
    case FeatureSource::neigh_feat_2hop: return n_features;
    case FeatureSource::one_hot: return n_nodes;
    case FeatureSource::degree: return 3;
    case FeatureSource::neigh_label_1hop:
    case FeatureSource::neigh_label_2hop: return static_cast<std::size_t>(n_classes);
    case FeatureSource::hub: return 1;
  }
  return 0;
}

}  // namespace autograph
