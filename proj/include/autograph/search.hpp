#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autograph/budget.hpp"
#include "autograph/features.hpp"
#include "autograph/graph.hpp"
#include "autograph/model.hpp"

namespace autograph {

/// Where neighbor-label blocks enter the model.
enum class LabelWiring { input, pre_output };

struct TrialConfig {
  std::string name;  // free-form tag, e.g. "baseline_gcn2"
  ModelSpec model;
  std::vector<std::string> feature_blocks;
  double lr = 0.01;
  double weight_decay = 5e-4;  // decoupled
  double l2 = 0.0;             // coupled L2 penalty
  double dropout_p = 0.5;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  bool standardize = false;
  bool row_normalize = false;  // scale each row of each main block to unit L1 norm
  LabelWiring label_wiring = LabelWiring::input;

  /// lr > 0 and max_epochs >= 16.
  void validate() const;
  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

struct TrialResult {
  TrialConfig config;
  double val_acc = 0.0;
  double val_loss = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  int best_epoch = 0;
  double wall_seconds = 0.0;
  double started_at = 0.0;  // budget-relative start time
  bool stopped_early = false;
  bool failed = false;   // non-finite loss
  bool aborted = false;  // budget ran out mid-training
  std::vector<NodeId> val_nodes;
  std::vector<int> val_labels;
  std::vector<NodeId> test_nodes;  // ascending node id
  Matrix val_softmax;
  Matrix test_softmax;
};

struct ValidationSplit {
  Mask train;
  Mask val;
};

/// Stratified split of the labeled nodes. Classes with >= 2 labeled nodes keep
/// at least one node on each side; singletons stay in train.
ValidationSplit split_validation(const DatasetBundle& bundle, double fraction, std::uint64_t seed);

/// Epoch-16 abort rule: a trial is stopped when its epoch-16 validation loss
/// exceeds `factor` times the running median of earlier trials' epoch-16
/// losses. The first `warmup_trials` trials are never stopped.
class EarlyStopRule {
 public:
  EarlyStopRule(int check_epoch = 16, double factor = 1.1, int warmup_trials = 3)
      : check_epoch_(check_epoch), factor_(factor), warmup_(warmup_trials) {}

  int check_epoch() const { return check_epoch_; }
  /// Decides for trial number `trial_index` and records its loss.
  bool check_and_record(std::size_t trial_index, double val_loss);
  std::optional<double> median() const;

 private:
  int check_epoch_;
  double factor_;
  int warmup_;
  mutable std::mutex mu_;
  std::vector<double> history_;
};

/// Shared read-only inputs of every trial on one dataset and split.
class TrialEnv {
 public:
  TrialEnv(const DatasetBundle& bundle, ValidationSplit split,
           std::shared_ptr<const GraphContext> graph = nullptr);

  const DatasetBundle& bundle() const { return *bundle_; }
  const ValidationSplit& split() const { return split_; }
  const std::shared_ptr<const GraphContext>& graph() const { return graph_; }
  /// Built on first use; label blocks read only split().train.
  const FeatureBlock& block(FeatureSource s) const;

 private:
  const DatasetBundle* bundle_;
  ValidationSplit split_;
  std::shared_ptr<const GraphContext> graph_;
  mutable std::mutex mu_;
  mutable std::vector<std::unique_ptr<FeatureBlock>> blocks_;
};

/// Full-batch training with Adam and best-validation-accuracy checkpointing.
/// Throws BudgetExhausted when no new trial may start. At least one epoch
/// runs once started. `trial_index` feeds the early-stop rule.
TrialResult run_trial(const TrialConfig& config, const TrialEnv& env, const TimeBudget& budget,
                      EarlyStopRule* early_stop = nullptr, std::size_t trial_index = 0);
TrialResult run_trial(const TrialConfig& config, const DatasetBundle& bundle,
                      const ValidationSplit& split, const TimeBudget& budget,
                      EarlyStopRule* early_stop = nullptr);

struct MetaFeatures {
  double n_nodes = 0, n_edges = 0, avg_degree = 0, n_features = 0, n_classes = 0, skewness = 1;
  bool directed = false, weighted = false, featureless = true;
};

MetaFeatures extract_meta_features(const DatasetBundle& bundle);

struct SearchSpace {
  int graph_class = 3;  // 1 featureless, 2 dense/directed, 3 sparse attributed
  std::string name;
  bool symmetrize = false;
  std::vector<TrialConfig> pinned;  // run first, in order
  std::vector<TrialConfig> pool;    // run afterwards in seeded shuffled order
};

/// Rule-based choice among three fixed search spaces.
SearchSpace select_portfolio(const MetaFeatures& meta);
int classify_graph(const MetaFeatures& meta);

/// Input features used by the fixed baselines: raw, else one-hot ids, else degree.
std::vector<std::string> default_feature_blocks(const MetaFeatures& meta);
/// Two GCN layers (features -> hidden -> classes) with coupled L2 and
/// row-normalized raw features.
TrialConfig baseline_gcn2_config(const MetaFeatures& meta, std::size_t hidden = 16);
/// MLP-in, an L-layer GCN wired by `topology` (plain stack when absent), MLP-out.
TrialConfig gcn_stack_config(const MetaFeatures& meta, int n_layers, std::size_t hidden = 64,
                             std::optional<TopologySpec> topology = std::nullopt);
/// Same features and regularization as the baseline, graph layers replaced
/// by a two-layer MLP.
TrialConfig mlp_only_config(const MetaFeatures& meta, std::size_t hidden = 16);
/// Input width of a config's main features.
std::size_t feature_width(const std::vector<std::string>& blocks, LabelWiring wiring,
                          const MetaFeatures& meta, bool side);

struct SearchOptions {
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t max_trials = 0;  // 0: unlimited
};

/// Runs pinned configs then the shuffled pool until the budget's safety mark.
/// Results come back sorted by validation accuracy, best first. Throws
/// BudgetExhausted if not even the first pinned trial can start.
std::vector<TrialResult> search(const SearchSpace& space, const TrialEnv& env,
                                const TimeBudget& budget, const SearchOptions& options = {});

struct Ensemble {
  std::vector<std::size_t> members;  // indices into the trial list
  double val_acc = 0.0;
  Matrix val_softmax;
  Matrix test_softmax;
  std::vector<NodeId> test_nodes;

  std::vector<int> test_predictions() const;
};

/// Greedy forward selection by validation accuracy of the averaged softmax.
Ensemble build_ensemble(const std::vector<TrialResult>& trials, std::size_t k_max);

/// Accuracy of row-argmax against labels.
double argmax_accuracy(const Matrix& probs, std::span<const int> labels);
std::vector<int> argmax_rows(const Matrix& probs);

struct FitResult {
  std::vector<int> predictions;  // aligned with bundle.test_order
  std::vector<TrialResult> trials;
  Ensemble ensemble;
  SearchSpace space;
  bool warning = false;  // only a partially trained trial was available
};

struct FitOptions {
  SearchOptions search;
  std::size_t ensemble_size = 5;
  std::optional<SearchSpace> space;  // overrides portfolio selection
};

/// meta-features -> portfolio -> validation split -> search -> ensemble.
FitResult fit_predict(const DatasetBundle& bundle, const TimeBudget& budget,
                      const FitOptions& options = {});

/// Maps per-test-node predictions (ascending id) onto bundle.test_order.
std::vector<int> in_test_order(const DatasetBundle& bundle, std::span<const NodeId> nodes,
                               std::span<const int> predictions);

std::string to_string(LabelWiring w);
void to_json(nlohmann::json& j, const TrialConfig& c);
void from_json(const nlohmann::json& j, TrialConfig& c);
void to_json(nlohmann::json& j, const SearchSpace& s);
void from_json(const nlohmann::json& j, SearchSpace& s);

enum class TopoStrategy { exhaustive, random };

struct TopoSearchOptions {
  int n_layers = 4;
  std::size_t cap = 500;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t max_trials = 0;  // 0: unlimited
  int max_epochs = 200;
};

struct TopoSearchResult {
  TopologySpec best;
  TrialResult best_trial;
  std::vector<TrialResult> evaluated;  // in evaluation order, plain stack first
  bool warning = false;                // plain stack did not finish
};

/// Evaluates candidate wirings of an equal-width GCN stack, plain stack first,
/// and returns the one with the best validation accuracy.
TopoSearchResult topo_search(const TrialEnv& env, const TimeBudget& budget, TopoStrategy strategy,
                             std::size_t hidden, const TopoSearchOptions& options = {});
/// Same, splitting the bundle's labeled nodes with options.val_fraction.
TopoSearchResult topo_search(const DatasetBundle& bundle, const TimeBudget& budget,
                             TopoStrategy strategy, std::size_t hidden,
                             const TopoSearchOptions& options = {});

}  // namespace autograph
