#include <algorithm>
#include <numeric>
#include <random>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"

namespace autograph::harness {

SynthDataset make_sbm(const SynthOptions& o) {
  require(o.nodes >= 2, "gen-synth: need at least 2 nodes");
  require(o.classes >= 1 && static_cast<std::size_t>(o.classes) <= o.nodes,
          "gen-synth: classes must be in [1, nodes]");
  require(o.p_in >= 0 && o.p_in <= 1 && o.p_out >= 0 && o.p_out <= 1,
          "gen-synth: probabilities must be in [0,1]");
  require(o.train_fraction > 0 && o.train_fraction < 1, "gen-synth: train fraction must be in (0,1)");
  const std::size_t n = o.nodes;
  std::mt19937_64 rng(o.seed);

  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<int>(i % static_cast<std::size_t>(o.classes));
  std::shuffle(label.begin(), label.end(), rng);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < (label[i] == label[j] ? o.p_in : o.p_out))
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});

  SynthDataset d;
  DatasetBundle& b = d.bundle;
  b.graph = SparseGraph::from_edges(n, std::move(edges), /*directed=*/false, /*weighted=*/false);
  b.n_classes = o.classes;
  b.time_budget_seconds = o.time_budget_seconds;
  if (!o.featureless) {
    std::normal_distribution<double> noise(0.0, o.feature_noise);
    Matrix x(n, static_cast<std::size_t>(o.classes));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < x.cols; ++c)
        x(i, c) = (static_cast<int>(c) == label[i] ? 1.0 : 0.0) + noise(rng);
    b.features = std::move(x);
  }

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(o.train_fraction * static_cast<double>(n))), 1, n - 1);
  b.labels.assign(n, -1);
  b.train_mask.assign(n, 0);
  b.test_mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const NodeId v = order[k];
    if (k < n_train) {
      b.train_mask[v] = 1;
      b.labels[v] = label[v];
    } else {
      b.test_mask[v] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (b.test_mask[i]) {
      b.test_order.push_back(static_cast<NodeId>(i));
      d.test_labels.push_back(label[i]);
    }
  b.validate();
  return d;
}

void gen_synth(const SynthOptions& options, const std::filesystem::path& dir) {
  const SynthDataset d = make_sbm(options);
  save_dataset(d.bundle, dir);
  save_truth(dir / "labels_test.tsv", d.bundle.test_order, d.test_labels);
}

}  // namespace autograph::harness
