#include <algorithm>

#include "autograph/error.hpp"
#include "autograph/search.hpp"

namespace autograph {

MetaFeatures extract_meta_features(const DatasetBundle& bundle) {
  const GraphStats s = compute_stats(bundle);
  MetaFeatures m;
  m.n_nodes = static_cast<double>(s.n_nodes);
  m.n_edges = static_cast<double>(s.n_edges);
  m.avg_degree = s.avg_degree;
  m.n_features = static_cast<double>(s.n_features);
  m.n_classes = static_cast<double>(s.n_classes);
  m.skewness = s.skewness;
  m.directed = s.directed;
  m.weighted = s.weighted;
  m.featureless = bundle.featureless();
  return m;
}

int classify_graph(const MetaFeatures& meta) {
  if (meta.featureless) return 1;
  if (meta.directed || meta.avg_degree > 50.0) return 2;
  return 3;
}

std::vector<std::string> default_feature_blocks(const MetaFeatures& meta) {
  if (!meta.featureless) return {"raw"};
  if (meta.n_nodes <= static_cast<double>(kOneHotCap)) return {"one_hot"};
  return {"degree"};
}

std::size_t feature_width(const std::vector<std::string>& blocks, LabelWiring wiring,
                          const MetaFeatures& meta, bool side) {
  std::size_t w = 0;
  for (const auto& name : blocks) {
    const auto src = feature_source_from_string(name);
    const bool is_label =
        src == FeatureSource::neigh_label_1hop || src == FeatureSource::neigh_label_2hop;
    const bool goes_side = is_label && wiring == LabelWiring::pre_output;
    if (goes_side != side) continue;
    w += block_width(src, static_cast<std::size_t>(meta.n_nodes),
                     static_cast<std::size_t>(meta.n_features), static_cast<int>(meta.n_classes));
  }
  return w;
}

namespace {

LayerSpec layer(LayerKind kind, std::size_t in, std::size_t out) {
  LayerSpec l;
  l.kind = kind;
  l.in_dim = in;
  l.out_dim = out;
  return l;
}

struct Shape {
  LayerKind kind = LayerKind::gcn;
  int K = 2;
  int heads = 1;
};

TrialConfig make_config(const MetaFeatures& meta, std::vector<std::string> blocks,
                        LabelWiring wiring, bool standardize, bool row_normalize, const Shape& shape,
                        int n_layers, std::size_t hidden, double lr, double dropout) {
  TrialConfig c;
  c.feature_blocks = std::move(blocks);
  c.label_wiring = wiring;
  c.standardize = standardize;
  c.row_normalize = row_normalize;
  c.lr = lr;
  c.dropout_p = dropout;
  c.weight_decay = 0.0;
  c.l2 = 5e-4;
  const std::size_t in = feature_width(c.feature_blocks, wiring, meta, false);
  const std::size_t side = feature_width(c.feature_blocks, wiring, meta, true);
  const auto n_classes = static_cast<std::size_t>(meta.n_classes);
  c.model.dropout_p = dropout;
  c.model.input_mlp_dims = {in, hidden};
  for (int i = 0; i < n_layers; ++i) {
    LayerSpec l = layer(shape.kind, hidden, hidden);
    if (shape.kind == LayerKind::tagconv) l.K = shape.K;
    if (shape.kind == LayerKind::gat) {
      l.heads = shape.heads;
      l.out_dim = hidden / static_cast<std::size_t>(shape.heads);
    }
    c.model.gnn_layers.push_back(l);
  }
  c.model.output_mlp_dims = {hidden + side, n_classes};
  c.name = to_string(shape.kind) + "_l" + std::to_string(n_layers) + "_h" + std::to_string(hidden);
  if (shape.kind == LayerKind::tagconv) c.name += "_k" + std::to_string(shape.K);
  if (shape.kind == LayerKind::gat) c.name += "_x" + std::to_string(shape.heads);
  return c;
}

}  // namespace

TrialConfig gcn_stack_config(const MetaFeatures& meta, int n_layers, std::size_t hidden,
                             std::optional<TopologySpec> topology) {
  TrialConfig c = make_config(meta, default_feature_blocks(meta), LabelWiring::input, false,
                              !meta.featureless, Shape{}, n_layers, hidden, 0.01, 0.5);
  if (topology) {
    require(topology->n_layers == n_layers, "gcn_stack_config: topology depth mismatch");
    c.model.output_mlp_dims[0] = hidden * topology->final_width_factor();
    c.model.topology = std::move(topology);
    c.name = "topology_l" + std::to_string(n_layers);
  } else {
    c.name = "gcn_l" + std::to_string(n_layers);
  }
  return c;
}

TrialConfig baseline_gcn2_config(const MetaFeatures& meta, std::size_t hidden) {
  TrialConfig c;
  c.name = "baseline_gcn2";
  c.feature_blocks = default_feature_blocks(meta);
  c.row_normalize = !meta.featureless;
  c.weight_decay = 0.0;
  c.l2 = 5e-4;
  c.lr = 0.01;
  c.dropout_p = 0.5;
  c.model.dropout_p = c.dropout_p;
  const std::size_t in = feature_width(c.feature_blocks, LabelWiring::input, meta, false);
  c.model.gnn_layers = {layer(LayerKind::gcn, in, hidden),
                        layer(LayerKind::gcn, hidden, static_cast<std::size_t>(meta.n_classes))};
  return c;
}

TrialConfig mlp_only_config(const MetaFeatures& meta, std::size_t hidden) {
  TrialConfig c = baseline_gcn2_config(meta, hidden);
  c.name = "mlp_only";
  c.model.gnn_layers.clear();
  c.model.input_mlp_dims = {feature_width(c.feature_blocks, LabelWiring::input, meta, false), hidden};
  c.model.output_mlp_dims = {hidden, static_cast<std::size_t>(meta.n_classes)};
  return c;
}

SearchSpace select_portfolio(const MetaFeatures& meta) {
  SearchSpace space;
  space.graph_class = classify_graph(meta);
  space.pinned = {baseline_gcn2_config(meta), mlp_only_config(meta)};

  std::vector<std::vector<std::string>> feature_sets;
  std::vector<LabelWiring> wirings{LabelWiring::input};
  std::vector<Shape> shapes;
  std::vector<double> dropouts{0.2, 0.5};
  bool standardize = true;
  bool row_normalize = false;
  const auto base = default_feature_blocks(meta);

  switch (space.graph_class) {
    case 1: {
      space.name = "featureless";
      auto blocks = base;
      for (const char* extra : {"degree", "neigh_label_1hop", "neigh_label_2hop", "hub"})
        if (std::find(blocks.begin(), blocks.end(), extra) == blocks.end()) blocks.push_back(extra);
      feature_sets = {blocks};
      wirings = {LabelWiring::input, LabelWiring::pre_output};
      standardize = false;
      shapes = {{LayerKind::gcn}, {LayerKind::tagconv, 2}, {LayerKind::tagconv, 3}};
      break;
    }
    case 2:
      space.name = "dense_directed";
      space.symmetrize = true;
      feature_sets = {{"raw", "degree"}};
      shapes = {{LayerKind::sage_mean}, {LayerKind::gat, 2, 1}, {LayerKind::gat, 2, 4}};
      dropouts = {0.5, 0.7};
      break;
    default:
      space.name = "sparse_attributed";
      // Row-normalized blocks keep bag-of-words inputs sparse.
      feature_sets = {{"raw"}, {"raw", "neigh_feat_1hop", "neigh_feat_2hop"}};
      standardize = false;
      row_normalize = true;
      shapes = {{LayerKind::gcn},          {LayerKind::tagconv, 2},   {LayerKind::tagconv, 3},
                {LayerKind::sage_mean},    {LayerKind::gat, 2, 1},    {LayerKind::gat, 2, 4},
                {LayerKind::two_hop_linear}};
      break;
  }

  for (const auto& blocks : feature_sets)
    for (auto wiring : wirings)
      for (const auto& shape : shapes)
        for (double lr : {0.01, 0.005})
          for (std::size_t hidden : {16, 64, 128})
            for (double dropout : dropouts)
              for (int n_layers : {2, 3})
                space.pool.push_back(make_config(meta, blocks, wiring, standardize, row_normalize,
                                                 shape, n_layers, hidden, lr, dropout));
  return space;
}

std::string to_string(LabelWiring w) { return w == LabelWiring::input ? "input" : "pre_output"; }

void to_json(nlohmann::json& j, const TrialConfig& c) {
  j = nlohmann::json{{"name", c.name},
                     {"model", c.model},
                     {"feature_blocks", c.feature_blocks},
                     {"lr", c.lr},
                     {"weight_decay", c.weight_decay},
                     {"dropout_p", c.dropout_p},
                     {"max_epochs", c.max_epochs},
                     {"seed", c.seed},
                     {"l2", c.l2},
                     {"standardize", c.standardize},
                     {"row_normalize", c.row_normalize},
                     {"label_wiring", to_string(c.label_wiring)}};
}

void from_json(const nlohmann::json& j, TrialConfig& c) {
  c.name = j.value("name", std::string{});
  c.model = j.at("model").get<ModelSpec>();
  c.feature_blocks = j.at("feature_blocks").get<std::vector<std::string>>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.value("weight_decay", 5e-4);
  c.dropout_p = j.at("dropout_p").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.standardize = j.value("standardize", false);
  c.l2 = j.value("l2", 0.0);
  c.row_normalize = j.value("row_normalize", false);
  const auto wiring = j.value("label_wiring", std::string("input"));
  if (wiring != "input" && wiring != "pre_output") throw FormatError("unknown label_wiring: " + wiring);
  c.label_wiring = wiring == "input" ? LabelWiring::input : LabelWiring::pre_output;
  c.validate();
}

void to_json(nlohmann::json& j, const SearchSpace& s) {
  j = nlohmann::json{{"graph_class", s.graph_class},
                     {"name", s.name},
                     {"symmetrize", s.symmetrize},
                     {"pinned", s.pinned},
                     {"pool", s.pool}};
}

void from_json(const nlohmann::json& j, SearchSpace& s) {
  s.graph_class = j.at("graph_class").get<int>();
  s.name = j.value("name", std::string{});
  s.symmetrize = j.value("symmetrize", false);
  s.pinned = j.at("pinned").get<std::vector<TrialConfig>>();
  s.pool = j.at("pool").get<std::vector<TrialConfig>>();
}

}  // namespace autograph
