#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "autograph/error.hpp"
#include "autograph/graph.hpp"

namespace autograph {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError("missing or unreadable file: " + file.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Iterates tab-separated data lines (header skipped) with 1-based line numbers.
class TsvReader {
 public:
  TsvReader(std::string text, std::string name) : text_(std::move(text)), name_(std::move(name)) {
    next_line();  // header
  }

  bool next(std::vector<std::string_view>& fields) {
    while (pos_ < text_.size()) {
      std::string_view line = next_line();
      if (line.empty()) continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(name_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  template <typename T>
  T parse(std::string_view field) const {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
      fail("cannot parse '" + std::string(field) + "'");
    return value;
  }

  NodeId parse_node(std::string_view field, std::size_t n_nodes) const {
    auto id = parse<long long>(field);
    if (id < 0 || static_cast<std::size_t>(id) >= n_nodes)
      fail("node id " + std::to_string(id) + " out of range [0," + std::to_string(n_nodes) + ")");
    return static_cast<NodeId>(id);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view next_line() {
    auto end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    std::string_view line(text_.data() + pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return line;
  }

  std::string text_;
  std::string name_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw LoadError("cannot write " + file.string());
  out << text;
}

}  // namespace

DatasetBundle load_dataset(const fs::path& dir) {
  for (const char* name : {"meta.json", "edges.tsv", "labels_train.tsv", "test_ids.tsv"}) {
    if (!fs::exists(dir / name)) throw LoadError("missing dataset file: " + std::string(name));
  }

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  auto get = [&](const char* key) -> const nlohmann::json& {
    if (!meta.contains(key)) throw FormatError(std::string("meta.json: missing key ") + key);
    return meta.at(key);
  };
  DatasetBundle b;
  std::size_t n = 0;
  bool directed = false, weighted = false;
  try {
    n = get("n_nodes").get<std::size_t>();
    b.n_classes = get("n_classes").get<int>();
    directed = get("directed").get<bool>();
    weighted = get("weighted").get<bool>();
    b.time_budget_seconds = meta.value("time_budget_seconds", 600.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  if (b.n_classes < 1) throw FormatError("meta.json: n_classes must be positive");

  std::vector<std::string_view> f;
  {
    TsvReader r(read_file(dir / "edges.tsv"), "edges.tsv");
    std::vector<Edge> edges;
    while (r.next(f)) {
      if (f.size() < 2 || f.size() > 3) r.fail("expected columns src dst weight");
      Edge e{r.parse_node(f[0], n), r.parse_node(f[1], n), 1.0};
      if (f.size() == 3) e.weight = r.parse<double>(f[2]);
      if (e.src == e.dst) continue;  // self-loops are re-added by normalize
      edges.push_back(e);
    }
    b.graph = SparseGraph::from_edges(n, std::move(edges), directed, weighted);
  }

  if (fs::exists(dir / "features.tsv")) {
    TsvReader r(read_file(dir / "features.tsv"), "features.tsv");
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t d = 0;
    bool first = true;
    Matrix x;
    while (r.next(f)) {
      if (first) {
        d = f.size() - 1;
        x = Matrix(n, d);
        first = false;
      }
      if (f.size() != d + 1) r.fail("expected " + std::to_string(d + 1) + " columns");
      NodeId id = r.parse_node(f[0], n);
      if (seen[id]) r.fail("duplicate feature row for node " + std::to_string(id));
      seen[id] = 1;
      for (std::size_t j = 0; j < d; ++j) x(id, j) = r.parse<double>(f[j + 1]);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!seen[i]) throw FormatError("features.tsv: no row for node " + std::to_string(i));
    b.features = std::move(x);
  }

  b.labels.assign(n, -1);
  b.train_mask.assign(n, 0);
  b.test_mask.assign(n, 0);
  {
    TsvReader r(read_file(dir / "labels_train.tsv"), "labels_train.tsv");
    while (r.next(f)) {
      if (f.size() != 2) r.fail("expected columns node_id label");
      NodeId id = r.parse_node(f[0], n);
      int label = r.parse<int>(f[1]);
      if (label < 0 || label >= b.n_classes) r.fail("label out of range");
      if (b.train_mask[id] && b.labels[id] != label)
        r.fail("conflicting labels for node " + std::to_string(id));
      b.labels[id] = label;
      b.train_mask[id] = 1;
    }
  }
  {
    TsvReader r(read_file(dir / "test_ids.tsv"), "test_ids.tsv");
    while (r.next(f)) {
      if (f.size() != 1) r.fail("expected column node_id");
      NodeId id = r.parse_node(f[0], n);
      if (b.train_mask[id]) r.fail("node " + std::to_string(id) + " is also a training node");
      if (b.test_mask[id]) r.fail("duplicate test node " + std::to_string(id));
      b.test_mask[id] = 1;
      b.test_order.push_back(id);
    }
  }
  b.validate();
  return b;
}

void save_dataset(const DatasetBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["n_nodes"] = b.n_nodes();
  meta["n_classes"] = b.n_classes;
  meta["directed"] = b.graph.directed();
  meta["weighted"] = b.graph.weighted();
  meta["time_budget_seconds"] = b.time_budget_seconds;
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string out = "src\tdst\tweight\n";
  const auto& g = b.graph;
  for (NodeId i = 0; static_cast<std::size_t>(i) < g.n_nodes(); ++i) {
    auto nb = g.neighbors(i);
    auto ws = g.weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (!g.directed() && nb[k] < i) continue;
      out += std::to_string(i) + '\t' + std::to_string(nb[k]) + '\t';
      append_number(out, ws[k]);
      out += '\n';
    }
  }
  write_file(dir / "edges.tsv", out);

  if (b.features) {
    const auto& x = *b.features;
    out = "node_id";
    for (std::size_t j = 0; j < x.cols; ++j) out += "\tf" + std::to_string(j);
    out += '\n';
    for (std::size_t i = 0; i < x.rows; ++i) {
      out += std::to_string(i);
      for (double v : x.row(i)) {
        out += '\t';
        append_number(out, v);
      }
      out += '\n';
    }
    write_file(dir / "features.tsv", out);
  }

  out = "node_id\tlabel\n";
  for (std::size_t i = 0; i < b.n_nodes(); ++i)
    if (b.train_mask[i]) out += std::to_string(i) + '\t' + std::to_string(b.labels[i]) + '\n';
  write_file(dir / "labels_train.tsv", out);

  out = "node_id\n";
  for (NodeId id : b.test_order) out += std::to_string(id) + '\n';
  write_file(dir / "test_ids.tsv", out);
}

void save_truth(const fs::path& file, std::span<const NodeId> ids, std::span<const int> labels) {
  require(ids.size() == labels.size(), "save_truth: ids/labels length mismatch");
  std::string out = "node_id\tlabel\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out += std::to_string(ids[i]) + '\t' + std::to_string(labels[i]) + '\n';
  write_file(file, out);
}

}  // namespace autograph
