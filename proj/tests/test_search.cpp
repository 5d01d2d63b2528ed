#include <doctest.h>

#include <algorithm>
#include <map>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"
#include "autograph/search.hpp"

using namespace autograph;

namespace {

harness::SynthDataset small_synth(std::uint64_t seed, std::size_t nodes = 150) {
  harness::SynthOptions o;
  o.nodes = nodes;
  o.classes = 3;
  o.p_in = 0.1;
  o.p_out = 0.01;
  o.seed = seed;
  return harness::make_sbm(o);
}

TrialConfig quick(TrialConfig c, int epochs = 20) {
  c.max_epochs = epochs;
  return c;
}

TrialResult fake_trial(std::vector<std::vector<double>> val, std::vector<int> labels) {
  TrialResult r;
  r.val_labels = std::move(labels);
  r.val_softmax = Matrix(val.size(), val[0].size());
  for (std::size_t i = 0; i < val.size(); ++i)
    for (std::size_t j = 0; j < val[i].size(); ++j) r.val_softmax(i, j) = val[i][j];
  r.test_softmax = r.val_softmax;
  for (std::size_t i = 0; i < val.size(); ++i) {
    r.val_nodes.push_back(static_cast<NodeId>(i));
    r.test_nodes.push_back(static_cast<NodeId>(i + 100));
  }
  r.val_acc = argmax_accuracy(r.val_softmax, r.val_labels);
  return r;
}

}  // namespace

TEST_CASE("validation split is stratified, disjoint and seeded") {
  const auto ds = small_synth(1);
  const auto& b = ds.bundle;
  const auto s = split_validation(b, 0.2, 7);
  std::map<int, std::pair<int, int>> per;  // label -> (train, val)
  for (std::size_t i = 0; i < b.n_nodes(); ++i) {
    CHECK_FALSE((s.train[i] && s.val[i]));
    CHECK((s.train[i] || s.val[i]) == static_cast<bool>(b.train_mask[i]));
    if (s.train[i]) ++per[b.labels[i]].first;
    if (s.val[i]) ++per[b.labels[i]].second;
  }
  for (const auto& [label, tv] : per) {
    CHECK(tv.first >= 1);
    CHECK(tv.second >= 1);
  }
  CHECK(split_validation(b, 0.2, 7).val == s.val);
  CHECK(split_validation(b, 0.2, 8).val != s.val);
  const auto none = split_validation(b, 0.0, 7);
  CHECK(std::count(none.val.begin(), none.val.end(), 1) == 0);
  CHECK_THROWS_AS(split_validation(b, 1.0, 0), ContractViolation);
}

TEST_CASE("singleton classes stay in train") {
  DatasetBundle b;
  b.graph = SparseGraph::from_edges(3, {}, false, false);
  b.labels = {0, 1, 1};
  b.train_mask = {1, 1, 1};
  b.test_mask = {0, 0, 0};
  b.n_classes = 2;
  const auto s = split_validation(b, 0.5, 0);
  CHECK(s.train[0] == 1);
  CHECK(s.val[1] + s.val[2] == 1);
}

TEST_CASE("early-stop rule compares against the running median after warmup") {
  EarlyStopRule rule(16, 1.1, 2);
  CHECK_FALSE(rule.check_and_record(0, 10.0));
  CHECK_FALSE(rule.check_and_record(1, 1.0));
  CHECK(rule.median() == doctest::Approx(5.5));
  CHECK(rule.check_and_record(2, 6.1));
  CHECK_FALSE(rule.check_and_record(3, 1.0));
  CHECK(rule.median() == doctest::Approx(3.55));
  CHECK(rule.check_and_record(4, std::numeric_limits<double>::quiet_NaN()));
}

TEST_CASE("run_trial is deterministic and reports softmax rows") {
  const auto ds = small_synth(2);
  const auto& b = ds.bundle;
  const auto meta = extract_meta_features(b);
  TimeBudget budget(1e9);
  const auto split = split_validation(b, 0.2, 0);
  const auto cfg = quick(baseline_gcn2_config(meta), 40);
  const auto r1 = run_trial(cfg, b, split, budget);
  const auto r2 = run_trial(cfg, b, split, budget);
  CHECK(r1.test_softmax == r2.test_softmax);
  CHECK(r1.val_acc == r2.val_acc);
  CHECK(r1.epochs_run == 40);
  CHECK(r1.val_acc > 0.5);
  CHECK(r1.test_softmax.rows == r1.test_nodes.size());
  CHECK(std::is_sorted(r1.test_nodes.begin(), r1.test_nodes.end()));
  for (std::size_t i = 0; i < r1.test_softmax.rows; ++i) {
    double s = 0;
    for (double v : r1.test_softmax.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
  auto bad = cfg;
  bad.max_epochs = 5;
  CHECK_THROWS_AS(run_trial(bad, b, split, budget), ContractViolation);
}

TEST_CASE("run_trial refuses to start past the safety mark and aborts mid-training") {
  const auto ds = small_synth(3);
  const auto& b = ds.bundle;
  const auto cfg = quick(baseline_gcn2_config(extract_meta_features(b)), 200);
  const auto split = split_validation(b, 0.2, 0);
  auto clock = std::make_shared<FakeClock>();
  TimeBudget budget(10.0, clock);
  clock->advance(9.0);
  CHECK_THROWS_AS(run_trial(cfg, b, split, budget), BudgetExhausted);

  auto ticking = std::make_shared<FakeClock>(0.01);
  TimeBudget tight(1.0, ticking);
  const auto r = run_trial(cfg, b, split, tight);
  CHECK(r.aborted);
  CHECK(r.epochs_run >= 1);
  CHECK(r.epochs_run < 200);
}

TEST_CASE("search schedules nothing after the safety mark of a fake clock") {
  const auto ds = small_synth(4);
  const auto& b = ds.bundle;
  auto space = select_portfolio(extract_meta_features(b));
  for (auto& c : space.pinned) c.max_epochs = 16;
  for (auto& c : space.pool) c.max_epochs = 16;
  TrialEnv env(b, split_validation(b, 0.2, 0));
  auto clock = std::make_shared<FakeClock>(0.05);
  TimeBudget budget(20.0, clock);
  SearchOptions opt;
  opt.max_trials = 400;
  const auto results = search(space, env, budget, opt);
  CHECK(results.size() >= 2);
  CHECK(results.size() < 400);
  for (const auto& r : results) CHECK(r.started_at < 0.9 * budget.total());
  for (std::size_t i = 1; i < results.size(); ++i) CHECK(results[i - 1].val_acc >= results[i].val_acc);

  auto spent = std::make_shared<FakeClock>();
  TimeBudget gone(1.0, spent);
  spent->advance(0.95);
  CHECK_THROWS_AS(search(space, env, gone, opt), BudgetExhausted);
}

TEST_CASE("search runs pinned configs first and is seed-deterministic across workers") {
  const auto ds = small_synth(5);
  const auto& b = ds.bundle;
  auto space = select_portfolio(extract_meta_features(b));
  for (auto& c : space.pinned) c.max_epochs = 20;
  for (auto& c : space.pool) c.max_epochs = 20;
  TrialEnv env(b, split_validation(b, 0.2, 0));
  TimeBudget budget(1e9);
  SearchOptions opt;
  opt.max_trials = 5;
  opt.seed = 3;
  const auto a = search(space, env, budget, opt);
  opt.workers = 3;
  const auto c = search(space, env, budget, opt);
  REQUIRE(a.size() == 5);
  REQUIRE(c.size() == 5);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a[i].config == c[i].config);
    CHECK(a[i].test_softmax == c[i].test_softmax);
    names.push_back(a[i].config.name);
  }
  CHECK(std::count(names.begin(), names.end(), "baseline_gcn2") == 1);
  CHECK(std::count(names.begin(), names.end(), "mlp_only") == 1);
}

TEST_CASE("greedy ensemble never loses to its best member") {
  // Member 1 is weak alone but confident exactly where member 0 is wrong.
  const std::vector<int> labels{0, 0, 1, 1, 0, 1};
  auto rows = [](std::vector<int> p, std::vector<double> conf) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < p.size(); ++i)
      out.push_back(p[i] == 0 ? std::vector<double>{conf[i], 1 - conf[i]}
                              : std::vector<double>{1 - conf[i], conf[i]});
    return out;
  };
  std::vector<TrialResult> trials{
      fake_trial(rows({0, 0, 1, 1, 1, 0}, std::vector<double>(6, 0.6)), labels),
      fake_trial(rows({1, 1, 0, 0, 0, 1}, {0.55, 0.55, 0.55, 0.55, 0.9, 0.9}), labels),
      fake_trial(rows({0, 1, 0, 1, 1, 1}, std::vector<double>(6, 0.8)), labels)};
  const auto e = build_ensemble(trials, 3);
  double best = 0;
  for (const auto& t : trials) best = std::max(best, t.val_acc);
  CHECK(e.val_acc >= best);
  CHECK(e.val_acc == doctest::Approx(1.0));
  CHECK(e.members == std::vector<std::size_t>{0, 1});
  CHECK(e.test_nodes == trials[0].test_nodes);
  CHECK(e.test_predictions() == labels);

  const auto single = build_ensemble(trials, 1);
  CHECK(single.members == std::vector<std::size_t>{0});
  CHECK(single.val_acc == doctest::Approx(trials[0].val_acc));

  auto mismatched = trials;
  mismatched[1].val_labels[0] = 1;
  CHECK_THROWS_AS(build_ensemble(mismatched, 3), ContractViolation);
  CHECK_THROWS_AS(build_ensemble({}, 3), ContractViolation);
}

TEST_CASE("argmax picks the first maximum") {
  Matrix p(2, 3);
  p.data = {0.2, 0.4, 0.4, 0.5, 0.25, 0.25};
  CHECK(argmax_rows(p) == std::vector<int>{1, 0});
  CHECK(argmax_accuracy(p, std::vector<int>{1, 1}) == 0.5);
}

TEST_CASE("fit_predict returns one prediction per test id in file order") {
  auto ds = small_synth(6);
  auto& b = ds.bundle;
  std::reverse(b.test_order.begin(), b.test_order.end());
  std::reverse(ds.test_labels.begin(), ds.test_labels.end());
  FitOptions opt;
  opt.search.max_trials = 3;
  TimeBudget budget(1e9);
  auto space = select_portfolio(extract_meta_features(b));
  for (auto& c : space.pinned) c.max_epochs = 60;
  for (auto& c : space.pool) c.max_epochs = 60;
  opt.space = space;
  const auto fit = fit_predict(b, budget, opt);
  REQUIRE(fit.predictions.size() == b.test_order.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < fit.predictions.size(); ++i) hit += fit.predictions[i] == ds.test_labels[i];
  CHECK(static_cast<double>(hit) / fit.predictions.size() > 0.6);
  CHECK(fit.ensemble.val_acc >= fit.trials[0].val_acc);
  CHECK_FALSE(fit.warning);
}

TEST_CASE("portfolio picks one of three spaces from meta-features") {
  MetaFeatures m;
  m.featureless = true;
  m.n_nodes = 100;
  m.n_classes = 3;
  CHECK(classify_graph(m) == 1);
  CHECK(select_portfolio(m).name == "featureless");
  CHECK(default_feature_blocks(m) == std::vector<std::string>{"one_hot"});
  m.n_nodes = 1e6;
  CHECK(default_feature_blocks(m) == std::vector<std::string>{"degree"});
  m.featureless = false;
  m.n_features = 10;
  m.directed = true;
  const auto dense = select_portfolio(m);
  CHECK(dense.graph_class == 2);
  CHECK(dense.symmetrize);
  m.directed = false;
  m.avg_degree = 3;
  const auto sparse = select_portfolio(m);
  CHECK(sparse.graph_class == 3);
  CHECK(sparse.pinned.size() == 2);
  // 2 feature sets x 7 shapes x 2 lr x 3 hidden x 2 dropout x 2 depths
  CHECK(sparse.pool.size() == 336);
  for (const auto& c : sparse.pool) CHECK_NOTHROW(c.validate());
}

TEST_CASE("trial configs and search spaces roundtrip through json") {
  MetaFeatures m;
  m.featureless = false;
  m.n_features = 12;
  m.n_classes = 4;
  m.n_nodes = 50;
  const auto space = select_portfolio(m);
  nlohmann::json j = space;
  const auto back = j.get<SearchSpace>();
  CHECK(back.pool == space.pool);
  CHECK(back.pinned == space.pinned);
  auto cfg = gcn_stack_config(m, 2, 8, plain_stack(2));
  nlohmann::json jc = cfg;
  CHECK(jc.get<TrialConfig>() == cfg);
  jc["label_wiring"] = "sideways";
  CHECK_THROWS_AS(jc.get<TrialConfig>(), FormatError);
}

TEST_CASE("in_test_order maps ascending-id predictions onto file order") {
  DatasetBundle b;
  b.graph = SparseGraph::from_edges(5, {}, false, false);
  b.test_order = {4, 1, 3};
  const std::vector<NodeId> nodes{1, 3, 4};
  const std::vector<int> preds{7, 8, 9};
  CHECK(in_test_order(b, nodes, preds) == std::vector<int>{9, 7, 8});
}
