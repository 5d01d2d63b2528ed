#pragma once

#include <string>
#include <vector>

#include "autograph/graph.hpp"
#include "autograph/matrix.hpp"

namespace autograph {

enum class FeatureSource {
  raw,
  one_hot,
  degree,
  neigh_feat_1hop,
  neigh_feat_2hop,
  neigh_label_1hop,
  neigh_label_2hop,
  hub,
};

struct FeatureBlock {
  std::string name;
  Matrix matrix;
  FeatureSource source = FeatureSource::raw;
};

inline constexpr std::size_t kOneHotCap = 20000;

FeatureBlock raw_features(const DatasetBundle& bundle);
/// Identity block for featureless bundles; CapacityError above kOneHotCap nodes.
FeatureBlock one_hot_ids(const DatasetBundle& bundle);
/// Columns: in-degree, out-degree, log(1 + total degree).
FeatureBlock degree_features(const DatasetBundle& bundle);
/// Row i is the mean raw feature row over the k-hop neighborhood of i.
FeatureBlock neighbor_feature_stats(const DatasetBundle& bundle, int hops);
/// Row i is the class histogram of labeled k-hop neighbors of i (uniform when
/// none). Only nodes in `label_mask` are read; by default the train mask.
FeatureBlock neighbor_label_distribution(const DatasetBundle& bundle, int hops);
FeatureBlock neighbor_label_distribution(const DatasetBundle& bundle, int hops,
                                         const Mask& label_mask);
/// 1.0 when some 1-hop neighbor is a hub: degree at or above the given
/// percentile of the degree distribution and strictly above the mean degree.
FeatureBlock hub_indicator(const DatasetBundle& bundle, double percentile = 99.0);

/// Horizontal concatenation; optional per-column standardization over all nodes.
Matrix assemble(const std::vector<const FeatureBlock*>& blocks, bool standardize);
Matrix assemble(const std::vector<FeatureBlock>& blocks, bool standardize);

/// Divides each row by its L1 norm; all-zero rows are left unchanged.
void normalize_rows_l1(Matrix& m);

std::string to_string(FeatureSource s);
FeatureSource feature_source_from_string(const std::string& s);
/// Builds the named block; label blocks read `label_mask`.
FeatureBlock make_block(FeatureSource s, const DatasetBundle& bundle, const Mask& label_mask);
/// Column count of the named block without building it.
std::size_t block_width(FeatureSource s, std::size_t n_nodes, std::size_t n_features, int n_classes);

}  // namespace autograph
