#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "autograph/error.hpp"
#include "autograph/search.hpp"

namespace autograph {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool needs_two_hop(const SearchSpace& space) {
  auto uses = [](const TrialConfig& c) {
    return std::any_of(c.model.gnn_layers.begin(), c.model.gnn_layers.end(),
                       [](const LayerSpec& l) { return l.kind == LayerKind::two_hop_linear; });
  };
  return std::any_of(space.pinned.begin(), space.pinned.end(), uses) ||
         std::any_of(space.pool.begin(), space.pool.end(), uses);
}

}  // namespace

std::vector<TrialResult> search(const SearchSpace& space, const TrialEnv& env,
                                const TimeBudget& budget, const SearchOptions& options) {
  std::vector<TrialConfig> order = space.pinned;
  {
    std::vector<TrialConfig> pool = space.pool;
    std::mt19937_64 rng(options.seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    order.insert(order.end(), pool.begin(), pool.end());
  }
  require(!order.empty(), "search: empty search space");
  if (options.max_trials > 0 && order.size() > options.max_trials) order.resize(options.max_trials);
  for (std::size_t i = 0; i < order.size(); ++i) order[i].seed = splitmix64(options.seed * 1000003ULL + i);

  if (!budget.can_schedule()) throw BudgetExhausted("search: no time left for the first trial");

  EarlyStopRule rule;
  std::vector<std::pair<std::size_t, TrialResult>> done;

  if (options.workers <= 1) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (!budget.can_schedule()) break;
      try {
        done.emplace_back(i, run_trial(order[i], env, budget, &rule, i));
      } catch (const BudgetExhausted&) {
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= order.size() || !budget.can_schedule()) return;
        try {
          TrialResult r = run_trial(order[i], env, budget, &rule, i);
          std::lock_guard lock(mu);
          done.emplace_back(i, std::move(r));
        } catch (const BudgetExhausted&) {
          return;
        }
      }
    };
    std::vector<std::jthread> pool;
    for (int w = 0; w < options.workers; ++w) pool.emplace_back(worker);
    pool.clear();
    std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  if (done.empty()) throw BudgetExhausted("search: no trial could run");

  std::vector<TrialResult> results;
  results.reserve(done.size());
  for (auto& [i, r] : done) results.push_back(std::move(r));
  std::stable_sort(results.begin(), results.end(),
                   [](const TrialResult& a, const TrialResult& b) { return a.val_acc > b.val_acc; });
  return results;
}

std::vector<int> in_test_order(const DatasetBundle& bundle, std::span<const NodeId> nodes,
                               std::span<const int> predictions) {
  require(nodes.size() == predictions.size(), "in_test_order: length mismatch");
  std::vector<int> by_node(bundle.n_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) by_node[nodes[k]] = predictions[k];
  std::vector<int> out;
  out.reserve(bundle.test_order.size());
  for (NodeId id : bundle.test_order) out.push_back(by_node[id]);
  return out;
}

namespace {

int majority_class(const DatasetBundle& bundle) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(bundle.n_classes), 0);
  for (std::size_t i = 0; i < bundle.n_nodes(); ++i)
    if (bundle.train_mask[i]) ++counts[static_cast<std::size_t>(bundle.labels[i])];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

FitResult fit_predict(const DatasetBundle& bundle, const TimeBudget& budget,
                      const FitOptions& options) {
  FitResult out;
  const MetaFeatures meta = extract_meta_features(bundle);
  out.space = options.space ? *options.space : select_portfolio(meta);
  const SparseGraph graph = out.space.symmetrize ? to_undirected(bundle.graph) : bundle.graph;
  auto ctx = GraphContext::build(graph, needs_two_hop(out.space));
  TrialEnv env(bundle, split_validation(bundle, options.search.val_fraction, options.search.seed),
               ctx);
  out.trials = search(out.space, env, budget, options.search);

  std::vector<TrialResult> usable;
  for (const auto& t : out.trials)
    if (!t.failed) usable.push_back(t);
  if (usable.empty()) {
    out.warning = true;
    out.predictions.assign(bundle.test_order.size(), majority_class(bundle));
    return out;
  }
  out.warning = std::all_of(usable.begin(), usable.end(), [](const TrialResult& t) { return t.aborted; });
  out.ensemble = build_ensemble(usable, options.ensemble_size);
  out.predictions = in_test_order(bundle, out.ensemble.test_nodes, out.ensemble.test_predictions());
  return out;
}

TopoSearchResult topo_search(const TrialEnv& env, const TimeBudget& budget, TopoStrategy strategy,
                             std::size_t hidden, const TopoSearchOptions& options) {
  std::vector<TopologySpec> candidates =
      enumerate_topologies(options.n_layers, options.cap, options.seed);
  if (strategy == TopoStrategy::random && candidates.size() > 2) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(candidates.begin() + 1, candidates.end(), rng);
  }
  if (!budget.can_schedule()) throw BudgetExhausted("topo_search: no time left for the plain stack");

  const MetaFeatures meta = extract_meta_features(env.bundle());
  TopoSearchResult out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (options.max_trials > 0 && i >= options.max_trials) break;
    if (i > 0 && !budget.can_schedule()) break;
    TrialConfig cfg = gcn_stack_config(meta, options.n_layers, hidden, candidates[i]);
    cfg.seed = options.seed;
    cfg.max_epochs = options.max_epochs;
    try {
      out.evaluated.push_back(run_trial(cfg, env, budget, nullptr, i));
    } catch (const BudgetExhausted&) {
      break;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.evaluated.size(); ++i) {
    const auto& t = out.evaluated[i];
    if (!t.failed && t.val_acc > out.evaluated[best].val_acc) best = i;
  }
  out.best_trial = out.evaluated[best];
  out.best = *out.best_trial.config.model.topology;
  out.warning = out.evaluated.front().aborted;
  return out;
}

TopoSearchResult topo_search(const DatasetBundle& bundle, const TimeBudget& budget,
                             TopoStrategy strategy, std::size_t hidden,
                             const TopoSearchOptions& options) {
  TrialEnv env(bundle, split_validation(bundle, options.val_fraction, options.seed),
               GraphContext::build(bundle.graph, false));
  return topo_search(env, budget, strategy, hidden, options);
}

}  // namespace autograph
