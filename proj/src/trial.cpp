#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "autograph/error.hpp"
#include "autograph/search.hpp"

namespace autograph {

void TrialConfig::validate() const {
  require(lr > 0.0, "trial config: lr must be positive");
  require(weight_decay >= 0.0 && l2 >= 0.0, "trial config: regularization must be non-negative");
  require(max_epochs >= 16, "trial config: max_epochs must be at least 16");
  require(dropout_p >= 0.0 && dropout_p < 1.0, "trial config: dropout must be in [0,1)");
  require(!feature_blocks.empty(), "trial config: needs at least one feature block");
}

ValidationSplit split_validation(const DatasetBundle& bundle, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction < 1.0, "split_validation: fraction must be in [0,1)");
  const std::size_t n = bundle.n_nodes();
  ValidationSplit s{bundle.train_mask, Mask(n, 0)};
  std::map<int, std::vector<NodeId>> by_class;
  for (std::size_t i = 0; i < n; ++i)
    if (bundle.train_mask[i]) by_class[bundle.labels[i]].push_back(static_cast<NodeId>(i));
  std::mt19937_64 rng(seed);
  for (auto& [label, nodes] : by_class) {
    if (nodes.size() < 2) continue;
    std::shuffle(nodes.begin(), nodes.end(), rng);
    auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(nodes.size())));
    if (fraction > 0.0) k = std::clamp<std::size_t>(k, 1, nodes.size() - 1);
    for (std::size_t i = 0; i < k; ++i) {
      s.val[nodes[i]] = 1;
      s.train[nodes[i]] = 0;
    }
  }
  return s;
}

bool EarlyStopRule::check_and_record(std::size_t trial_index, double val_loss) {
  std::lock_guard lock(mu_);
  bool stop = false;
  if (trial_index >= static_cast<std::size_t>(warmup_) && !history_.empty()) {
    std::vector<double> sorted = history_;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    stop = !(val_loss <= factor_ * median);
  }
  if (std::isfinite(val_loss)) history_.push_back(val_loss);
  return stop;
}

std::optional<double> EarlyStopRule::median() const {
  std::lock_guard lock(mu_);
  if (history_.empty()) return std::nullopt;
  std::vector<double> sorted = history_;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  return m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
}

TrialEnv::TrialEnv(const DatasetBundle& bundle, ValidationSplit split,
                   std::shared_ptr<const GraphContext> graph)
    : bundle_(&bundle), split_(std::move(split)), graph_(std::move(graph)) {
  require(split_.train.size() == bundle.n_nodes() && split_.val.size() == bundle.n_nodes(),
          "TrialEnv: split masks must cover every node");
  if (!graph_) graph_ = GraphContext::build(bundle.graph);
  blocks_.resize(8);
}

const FeatureBlock& TrialEnv::block(FeatureSource s) const {
  std::lock_guard lock(mu_);
  auto& slot = blocks_[static_cast<std::size_t>(s)];
  if (!slot) slot = std::make_unique<FeatureBlock>(make_block(s, *bundle_, split_.train));
  return *slot;
}

namespace {

bool is_label_block(FeatureSource s) {
  return s == FeatureSource::neigh_label_1hop || s == FeatureSource::neigh_label_2hop;
}

struct EvalStats {
  double loss = 0.0;
  double acc = 0.0;
};

EvalStats evaluate(const Matrix& probs, std::span<const NodeId> nodes, std::span<const int> labels) {
  EvalStats s;
  if (nodes.empty()) return s;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto row = probs.row(static_cast<std::size_t>(nodes[k]));
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[k]) ++correct;
    s.loss -= std::log(std::max(row[static_cast<std::size_t>(labels[k])], 1e-300));
  }
  s.loss /= static_cast<double>(nodes.size());
  s.acc = static_cast<double>(correct) / static_cast<double>(nodes.size());
  return s;
}

Matrix gather_rows(const Matrix& m, std::span<const NodeId> nodes) {
  Matrix out(nodes.size(), m.cols);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto src = m.row(static_cast<std::size_t>(nodes[k]));
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

}  // namespace

TrialResult run_trial(const TrialConfig& config, const TrialEnv& env, const TimeBudget& budget,
                      EarlyStopRule* early_stop, std::size_t trial_index) {
  config.validate();
  if (!budget.can_schedule()) throw BudgetExhausted("run_trial: time budget exhausted");
  TrialResult r;
  r.config = config;
  r.started_at = budget.elapsed();

  const DatasetBundle& b = env.bundle();
  const ValidationSplit& split = env.split();
  for (std::size_t i = 0; i < b.n_nodes(); ++i) {
    if (split.val[i]) {
      r.val_nodes.push_back(static_cast<NodeId>(i));
      r.val_labels.push_back(b.labels[i]);
    }
    if (b.test_mask[i]) r.test_nodes.push_back(static_cast<NodeId>(i));
  }
  const auto n_classes = static_cast<std::size_t>(b.n_classes);

  std::vector<const FeatureBlock*> main_blocks, side_blocks;
  for (const auto& name : config.feature_blocks) {
    const FeatureSource src = feature_source_from_string(name);
    const FeatureBlock& blk = env.block(src);
    if (is_label_block(src) && config.label_wiring == LabelWiring::pre_output)
      side_blocks.push_back(&blk);
    else
      main_blocks.push_back(&blk);
  }
  require(!main_blocks.empty(), "run_trial: no input feature blocks");
  std::vector<FeatureBlock> scaled;
  if (config.row_normalize) {
    scaled.reserve(main_blocks.size());
    for (const auto* blk : main_blocks) {
      scaled.push_back(*blk);
      normalize_rows_l1(scaled.back().matrix);
    }
    main_blocks.clear();
    for (const auto& blk : scaled) main_blocks.push_back(&blk);
  }
  Matrix main = assemble(main_blocks, config.standardize);
  const ad::Tensor x = ad::Tensor::constant(std::move(main));
  const ad::Tensor side =
      side_blocks.empty() ? ad::Tensor{} : ad::Tensor::constant(assemble(side_blocks, false));

  ModelSpec spec = config.model;
  spec.dropout_p = config.dropout_p;
  Model model(spec, env.graph(), config.seed);
  ad::AdamState adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  adam.l2 = config.l2;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const bool has_val = !r.val_nodes.empty();
  Matrix best_probs;
  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (epoch > 1 && !budget.can_schedule()) {
      r.aborted = true;
      break;
    }
    for (auto& p : model.parameters()) p.zero_grad();
    ad::Tensor logits = model.forward(x, side, /*training=*/true, rng);
    ad::Tensor loss = ad::masked_softmax_cross_entropy(logits, b.labels, split.train);
    r.epochs_run = epoch;
    if (!std::isfinite(loss.value().data[0])) {
      r.failed = true;
      break;
    }
    ad::backward(loss);
    ad::adam_step(model.parameters(), adam);

    Matrix probs = ad::softmax_rows(model.forward(x, side, /*training=*/false, rng).value());
    if (!has_val) {
      best_probs = std::move(probs);
      r.best_epoch = epoch;
      continue;
    }
    const EvalStats val = evaluate(probs, r.val_nodes, r.val_labels);
    if (!std::isfinite(val.loss) ||
        std::any_of(probs.data.begin(), probs.data.end(), [](double v) { return !std::isfinite(v); })) {
      r.failed = true;
      break;
    }
    if (val.acc > best_acc || (val.acc == best_acc && val.loss < best_loss)) {
      best_acc = val.acc;
      best_loss = val.loss;
      best_probs = std::move(probs);
      r.best_epoch = epoch;
    }
    if (early_stop && epoch == early_stop->check_epoch() &&
        early_stop->check_and_record(trial_index, val.loss)) {
      r.stopped_early = true;
      break;
    }
  }

  if (r.failed || best_probs.rows == 0) {
    r.failed = true;
    r.val_acc = 0.0;
    best_probs = Matrix(b.n_nodes(), n_classes, 1.0 / static_cast<double>(n_classes));
  } else if (has_val) {
    r.val_acc = best_acc;
    r.val_loss = best_loss;
  }
  r.val_softmax = gather_rows(best_probs, r.val_nodes);
  r.test_softmax = gather_rows(best_probs, r.test_nodes);
  r.wall_seconds = budget.elapsed() - r.started_at;
  return r;
}

TrialResult run_trial(const TrialConfig& config, const DatasetBundle& bundle,
                      const ValidationSplit& split, const TimeBudget& budget,
                      EarlyStopRule* early_stop) {
  TrialEnv env(bundle, split);
  return run_trial(config, env, budget, early_stop, 0);
}

}  // namespace autograph
