#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "autograph/budget.hpp"
#include "autograph/graph.hpp"
#include "autograph/search.hpp"

namespace autograph::harness {

struct MetricsReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::vector<int> classes;              // classes present in the truth, ascending
  std::vector<double> per_class_recall;  // aligned with `classes`
  std::size_t n_test = 0;
  double wall_seconds = 0.0;
  bool budget_exceeded = false;
};

double accuracy(std::span<const int> pred, std::span<const int> truth);
/// Mean recall over the classes that occur in `truth`.
double balanced_accuracy(std::span<const int> pred, std::span<const int> truth, int n_classes);
MetricsReport compute_metrics(std::span<const int> pred, std::span<const int> truth, int n_classes);

/// Rows of a `node_id<TAB>label` file with a header line.
std::vector<std::pair<NodeId, int>> read_label_file(const std::filesystem::path& path);

/// Joins predictions to truth by node id. Reads `ingestion_meta.json` next to
/// the prediction file when present. Throws ScoringError on id mismatches.
MetricsReport score(const std::filesystem::path& pred_path, const std::filesystem::path& truth_path);
nlohmann::ordered_json to_json(const MetricsReport& r);
void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);

struct SynthOptions {
  std::size_t nodes = 1000;
  int classes = 5;
  double p_in = 0.05;
  double p_out = 0.005;
  std::uint64_t seed = 0;
  double train_fraction = 0.2;
  double feature_noise = 1.0;  // std-dev of Gaussian noise on class indicators
  bool featureless = false;
  double time_budget_seconds = 600.0;
};

struct SynthDataset {
  DatasetBundle bundle;
  std::vector<int> test_labels;  // aligned with bundle.test_order
};

/// Undirected stochastic block model with balanced classes.
SynthDataset make_sbm(const SynthOptions& options);
/// Writes the dataset plus `labels_test.tsv`.
void gen_synth(const SynthOptions& options, const std::filesystem::path& dir);

/// Shipped solutions, in leaderboard column order.
const std::vector<std::string>& solution_names();

struct IngestOptions {
  std::filesystem::path dataset;
  std::string solution;
  double budget_seconds = 600.0;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // a .tsv file, otherwise a directory
  int workers = 1;
  std::size_t max_trials = 0;
  std::optional<std::filesystem::path> replay;  // best_trial.json to re-run
  std::shared_ptr<Clock> clock;                 // steady clock when null
};

struct IngestResult {
  std::filesystem::path predictions_path;
  std::vector<NodeId> ids;
  std::vector<int> predictions;
  double wall_seconds = 0.0;
  bool budget_exceeded = false;
  bool warning = false;
  std::size_t n_trials = 0;
  std::optional<TrialConfig> best;
  std::optional<TopologySpec> topology;
};

/// Runs one solution under its budget and writes predictions.tsv,
/// ingestion_meta.json and (when a trial finished) best_trial.json.
IngestResult ingest(const IngestOptions& options);
/// Same on an already loaded bundle.
IngestResult ingest(const DatasetBundle& bundle, const IngestOptions& options);

/// Rows are datasets, columns solution x {acc, balacc}; "-" for missing cells.
std::string leaderboard_csv(const std::filesystem::path& results_dir);
void leaderboard(const std::filesystem::path& results_dir, const std::filesystem::path& out);

}  // namespace autograph::harness
