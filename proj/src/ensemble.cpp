#include <algorithm>

#include "autograph/error.hpp"
#include "autograph/search.hpp"

namespace autograph {

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    auto row = probs.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double argmax_accuracy(const Matrix& probs, std::span<const int> labels) {
  require(probs.rows == labels.size(), "argmax_accuracy: row/label count mismatch");
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> Ensemble::test_predictions() const { return argmax_rows(test_softmax); }

namespace {

void add_into(Matrix& acc, const Matrix& m) {
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += m.data[i];
}

Matrix scaled(const Matrix& m, double f) {
  Matrix out = m;
  for (double& v : out.data) v *= f;
  return out;
}

}  // namespace

Ensemble build_ensemble(const std::vector<TrialResult>& trials, std::size_t k_max) {
  require(!trials.empty(), "build_ensemble: no trials");
  require(k_max >= 1, "build_ensemble: k_max must be positive");
  const auto& labels = trials[0].val_labels;
  for (const auto& t : trials)
    require(t.val_labels == labels && t.test_nodes == trials[0].test_nodes,
            "build_ensemble: trials were evaluated on different nodes");

  std::size_t best = 0;
  double best_acc = argmax_accuracy(trials[0].val_softmax, labels);
  for (std::size_t i = 1; i < trials.size(); ++i) {
    const double acc = argmax_accuracy(trials[i].val_softmax, labels);
    if (acc > best_acc) {
      best = i;
      best_acc = acc;
    }
  }

  Ensemble e;
  e.members = {best};
  e.val_acc = best_acc;
  Matrix val_sum = trials[best].val_softmax;
  while (e.members.size() < k_max) {
    std::optional<std::size_t> pick;
    double pick_acc = e.val_acc;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (std::find(e.members.begin(), e.members.end(), i) != e.members.end()) continue;
      Matrix candidate = val_sum;
      add_into(candidate, trials[i].val_softmax);
      // Scaling by 1/(m+1) never changes the argmax.
      const double acc = argmax_accuracy(candidate, labels);
      if (acc > pick_acc) {
        pick = i;
        pick_acc = acc;
      }
    }
    if (!pick) break;
    e.members.push_back(*pick);
    add_into(val_sum, trials[*pick].val_softmax);
    e.val_acc = pick_acc;
  }

  const double inv = 1.0 / static_cast<double>(e.members.size());
  e.val_softmax = scaled(val_sum, inv);
  Matrix test_sum(trials[0].test_softmax.rows, trials[0].test_softmax.cols);
  for (auto m : e.members) add_into(test_sum, trials[m].test_softmax);
  e.test_softmax = scaled(test_sum, inv);
  e.test_nodes = trials[0].test_nodes;
  return e;
}

}  // namespace autograph
