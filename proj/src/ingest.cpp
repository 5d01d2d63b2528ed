#include <algorithm>
#include <fstream>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"

namespace autograph::harness {

namespace fs = std::filesystem;

const std::vector<std::string>& solution_names() {
  static const std::vector<std::string> names{"baseline_gcn2", "gcn4", "autograph", "f2gcn"};
  return names;
}

namespace {

struct Outcome {
  std::vector<int> predictions;  // aligned with bundle.test_order
  std::size_t n_trials = 0;
  std::optional<TrialConfig> best;
  double best_val_acc = 0.0;
  std::optional<TopologySpec> topology;
  bool warning = false;
};

int majority_class(const DatasetBundle& b) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(b.n_classes), 0);
  for (std::size_t i = 0; i < b.n_nodes(); ++i)
    if (b.train_mask[i]) ++counts[static_cast<std::size_t>(b.labels[i])];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Outcome from_trial(const DatasetBundle& b, const TrialResult& t) {
  Outcome o;
  o.predictions = in_test_order(b, t.test_nodes, argmax_rows(t.test_softmax));
  o.n_trials = 1;
  o.best = t.config;
  o.best_val_acc = t.val_acc;
  o.warning = t.aborted || t.failed;
  return o;
}

/// One fixed configuration trained on every labeled node.
Outcome run_fixed(const DatasetBundle& b, TrialConfig cfg, const TimeBudget& budget,
                  const IngestOptions& opt) {
  FitOptions fo;
  fo.search.seed = opt.seed;
  fo.search.val_fraction = 0.0;
  fo.ensemble_size = 1;
  SearchSpace space;
  space.graph_class = 0;
  space.name = cfg.name;
  space.pinned = {std::move(cfg)};
  fo.space = std::move(space);
  FitResult fit = fit_predict(b, budget, fo);
  Outcome o;
  o.predictions = std::move(fit.predictions);
  o.n_trials = fit.trials.size();
  if (!fit.trials.empty()) o.best = fit.trials.front().config;
  o.warning = fit.warning;
  return o;
}

Outcome run_solution(const DatasetBundle& b, const TimeBudget& budget, const IngestOptions& opt) {
  const MetaFeatures meta = extract_meta_features(b);
  if (opt.replay) {
    std::ifstream in(*opt.replay);
    if (!in) throw LoadError("cannot open " + opt.replay->string());
    const auto j = nlohmann::json::parse(in);
    const TrialConfig cfg = j.at("config").get<TrialConfig>();
    TrialEnv env(b, split_validation(b, 0.2, opt.seed));
    return from_trial(b, run_trial(cfg, env, budget));
  }
  if (opt.solution == "baseline_gcn2") return run_fixed(b, baseline_gcn2_config(meta), budget, opt);
  if (opt.solution == "gcn4") return run_fixed(b, gcn_stack_config(meta, 4), budget, opt);
  if (opt.solution == "autograph") {
    FitOptions fo;
    fo.search.seed = opt.seed;
    fo.search.workers = opt.workers;
    fo.search.max_trials = opt.max_trials;
    FitResult fit = fit_predict(b, budget, fo);
    Outcome o;
    o.predictions = std::move(fit.predictions);
    o.n_trials = fit.trials.size();
    if (!fit.ensemble.members.empty()) {
      std::vector<TrialResult> usable;
      for (const auto& t : fit.trials)
        if (!t.failed) usable.push_back(t);
      o.best = usable[fit.ensemble.members.front()].config;
      o.best_val_acc = usable[fit.ensemble.members.front()].val_acc;
    }
    o.warning = fit.warning;
    return o;
  }
  // f2gcn
  TopoSearchOptions to;
  to.seed = opt.seed;
  to.max_trials = opt.max_trials;
  TopoSearchResult r = topo_search(b, budget, TopoStrategy::exhaustive, 64, to);
  Outcome o = from_trial(b, r.best_trial);
  o.n_trials = r.evaluated.size();
  o.topology = r.best;
  o.warning = r.warning;
  return o;
}

fs::path predictions_file(const fs::path& out) {
  if (out.extension() == ".tsv") return out;
  return out / "predictions.tsv";
}

IngestResult ingest_with(const DatasetBundle& b, const IngestOptions& opt, const TimeBudget& budget) {
  IngestResult res;
  res.ids = b.test_order;
  Outcome o;
  bool fallback = false;
  try {
    o = run_solution(b, budget, opt);
  } catch (const BudgetExhausted&) {
    fallback = true;
    res.budget_exceeded = true;
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception&) {
    fallback = true;
    res.warning = true;
  }
  if (fallback) o.predictions.assign(b.test_order.size(), majority_class(b));
  res.predictions = std::move(o.predictions);
  res.n_trials = o.n_trials;
  res.best = o.best;
  res.topology = o.topology;
  res.warning = res.warning || o.warning;

  res.predictions_path = predictions_file(opt.out);
  const fs::path dir = res.predictions_path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  {
    std::ofstream f(res.predictions_path);
    if (!f) throw LoadError("cannot write " + res.predictions_path.string());
    f << "node_id\tlabel\n";
    for (std::size_t k = 0; k < res.ids.size(); ++k) f << res.ids[k] << '\t' << res.predictions[k] << '\n';
  }
  if (res.best) {
    nlohmann::ordered_json bt;
    bt["solution"] = opt.solution;
    bt["val_acc"] = o.best_val_acc;
    nlohmann::json cfg = *res.best;
    bt["config"] = cfg;
    if (res.topology) {
      nlohmann::json t = *res.topology;
      bt["topology"] = t;
    }
    write_json(bt, dir / "best_trial.json");
  }
  res.wall_seconds = budget.elapsed();
  res.budget_exceeded = res.budget_exceeded || res.wall_seconds > opt.budget_seconds;
  nlohmann::ordered_json meta;
  meta["solution"] = opt.solution;
  meta["seed"] = opt.seed;
  meta["budget_seconds"] = opt.budget_seconds;
  meta["wall_seconds"] = res.wall_seconds;
  meta["budget_exceeded"] = res.budget_exceeded;
  meta["n_classes"] = b.n_classes;
  meta["n_trials"] = res.n_trials;
  meta["warning"] = res.warning;
  write_json(meta, dir / "ingestion_meta.json");
  return res;
}

void check_solution(const IngestOptions& opt) {
  const auto& names = solution_names();
  if (!opt.replay && std::find(names.begin(), names.end(), opt.solution) == names.end())
    throw ContractViolation("unknown solution '" + opt.solution +
                            "' (expected baseline_gcn2, gcn4, autograph or f2gcn)");
  require(opt.budget_seconds > 0.0, "budget must be positive");
}

std::shared_ptr<Clock> clock_of(const IngestOptions& opt) {
  return opt.clock ? opt.clock : std::make_shared<SteadyClock>();
}

}  // namespace

IngestResult ingest(const IngestOptions& options) {
  check_solution(options);
  const TimeBudget budget(options.budget_seconds, clock_of(options));
  const DatasetBundle bundle = load_dataset(options.dataset);
  return ingest_with(bundle, options, budget);
}

IngestResult ingest(const DatasetBundle& bundle, const IngestOptions& options) {
  check_solution(options);
  const TimeBudget budget(options.budget_seconds, clock_of(options));
  return ingest_with(bundle, options, budget);
}

}  // namespace autograph::harness
