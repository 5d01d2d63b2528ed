#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"

namespace autograph::harness {

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  require(pred.size() == truth.size() && !truth.empty(), "accuracy: need equal non-empty arrays");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

MetricsReport compute_metrics(std::span<const int> pred, std::span<const int> truth, int n_classes) {
  require(pred.size() == truth.size() && !truth.empty(), "metrics: need equal non-empty arrays");
  require(n_classes > 0, "metrics: n_classes must be positive");
  std::vector<std::size_t> support(static_cast<std::size_t>(n_classes), 0), hits(support.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < n_classes, "metrics: truth label out of range");
    const auto c = static_cast<std::size_t>(truth[i]);
    ++support[c];
    if (pred[i] == truth[i]) ++hits[c];
  }
  MetricsReport r;
  r.n_test = truth.size();
  r.accuracy = accuracy(pred, truth);
  double sum = 0.0;
  for (std::size_t c = 0; c < support.size(); ++c) {
    if (support[c] == 0) continue;
    const double recall = static_cast<double>(hits[c]) / static_cast<double>(support[c]);
    r.classes.push_back(static_cast<int>(c));
    r.per_class_recall.push_back(recall);
    sum += recall;
  }
  r.balanced_accuracy = sum / static_cast<double>(r.classes.size());
  return r;
}

double balanced_accuracy(std::span<const int> pred, std::span<const int> truth, int n_classes) {
  return compute_metrics(pred, truth, n_classes).balanced_accuracy;
}

std::vector<std::pair<NodeId, int>> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::pair<NodeId, int>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;
    const auto tab = line.find('\t');
    NodeId id = 0;
    int label = 0;
    const char* end = line.data() + line.size();
    bool ok = tab != std::string::npos;
    if (ok) {
      auto a = std::from_chars(line.data(), line.data() + tab, id);
      auto b = std::from_chars(line.data() + tab + 1, end, label);
      ok = a.ec == std::errc{} && a.ptr == line.data() + tab && b.ec == std::errc{} && b.ptr == end;
    }
    if (!ok)
      throw FormatError(path.filename().string() + ":" + std::to_string(lineno) +
                        ": expected node_id<TAB>label");
    rows.emplace_back(id, label);
  }
  return rows;
}

namespace {

std::string list_ids(const std::vector<NodeId>& ids) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) os << (i ? "," : "") << ids[i];
  if (ids.size() > shown) os << ",... (" << ids.size() << " total)";
  return os.str();
}

}  // namespace

MetricsReport score(const std::filesystem::path& pred_path, const std::filesystem::path& truth_path) {
  const auto truth_rows = read_label_file(truth_path);
  const auto pred_rows = read_label_file(pred_path);
  if (truth_rows.empty()) throw ScoringError("truth file has no rows");

  std::map<NodeId, int> pred;
  std::vector<NodeId> duplicate, missing, extra;
  for (auto [id, label] : pred_rows)
    if (!pred.emplace(id, label).second) duplicate.push_back(id);
  std::set<NodeId> truth_ids;
  std::vector<int> p, t;
  int n_classes = 0;
  for (auto [id, label] : truth_rows) {
    if (!truth_ids.insert(id).second) throw ScoringError("duplicate node id in truth: " + std::to_string(id));
    if (label < 0) throw ScoringError("negative truth label for node " + std::to_string(id));
    n_classes = std::max(n_classes, label + 1);
    auto it = pred.find(id);
    if (it == pred.end()) {
      missing.push_back(id);
      continue;
    }
    p.push_back(it->second);
    t.push_back(label);
  }
  for (const auto& [id, label] : pred)
    if (!truth_ids.contains(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty() || !duplicate.empty()) {
    std::string msg = "prediction ids do not match truth ids";
    if (!missing.empty()) msg += "; missing: " + list_ids(missing);
    if (!extra.empty()) msg += "; extra: " + list_ids(extra);
    if (!duplicate.empty()) msg += "; duplicated: " + list_ids(duplicate);
    throw ScoringError(msg);
  }

  const auto meta_path = pred_path.parent_path() / "ingestion_meta.json";
  nlohmann::json meta = nlohmann::json::object();
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    meta = nlohmann::json::parse(in, nullptr, false);
    if (!meta.is_object()) meta = nlohmann::json::object();
  }
  if (meta.contains("n_classes")) n_classes = std::max(n_classes, meta["n_classes"].get<int>());

  MetricsReport r = compute_metrics(p, t, n_classes);
  r.wall_seconds = meta.value("wall_seconds", 0.0);
  r.budget_exceeded = meta.value("budget_exceeded", false);
  return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["balanced_accuracy"] = r.balanced_accuracy;
  j["classes"] = r.classes;
  j["per_class_recall"] = r.per_class_recall;
  j["n_test"] = r.n_test;
  j["wall_seconds"] = r.wall_seconds;
  j["budget_exceeded"] = r.budget_exceeded;
  return j;
}

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace autograph::harness
