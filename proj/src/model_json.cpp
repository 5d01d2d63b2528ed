#include "autograph/error.hpp"
#include "autograph/model.hpp"

namespace autograph {

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::gcn: return "gcn";
    case LayerKind::tagconv: return "tagconv";
    case LayerKind::sage_mean: return "sage_mean";
    case LayerKind::gat: return "gat";
    case LayerKind::two_hop_linear: return "two_hop_linear";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  for (auto k : {LayerKind::gcn, LayerKind::tagconv, LayerKind::sage_mean, LayerKind::gat,
                 LayerKind::two_hop_linear})
    if (to_string(k) == s) return k;
  throw FormatError("unknown layer kind: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::elu: return "elu";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::relu, Activation::leaky_relu, Activation::elu})
    if (to_string(a) == s) return a;
  throw FormatError("unknown activation: " + s);
}

void to_json(nlohmann::json& j, const LayerSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"in_dim", s.in_dim},
                     {"out_dim", s.out_dim},
                     {"K", s.K},
                     {"heads", s.heads},
                     {"alpha", s.alpha},
                     {"alpha_learnable", s.alpha_learnable},
                     {"bias", s.bias}};
}

void from_json(const nlohmann::json& j, LayerSpec& s) {
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.in_dim = j.at("in_dim").get<std::size_t>();
  s.out_dim = j.at("out_dim").get<std::size_t>();
  s.K = j.value("K", 2);
  s.heads = j.value("heads", 1);
  s.alpha = j.value("alpha", 1.0);
  s.alpha_learnable = j.value("alpha_learnable", true);
  s.bias = j.value("bias", true);
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"input_mlp_dims", s.input_mlp_dims},
                     {"gnn_layers", s.gnn_layers},
                     {"output_mlp_dims", s.output_mlp_dims},
                     {"dropout_p", s.dropout_p},
                     {"activation", to_string(s.activation)}};
  if (s.topology) j["topology"] = *s.topology;
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.input_mlp_dims = j.at("input_mlp_dims").get<std::vector<std::size_t>>();
  s.gnn_layers = j.at("gnn_layers").get<std::vector<LayerSpec>>();
  s.output_mlp_dims = j.at("output_mlp_dims").get<std::vector<std::size_t>>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("topology"))
    s.topology = j.at("topology").get<TopologySpec>();
  else
    s.topology.reset();
}

}  // namespace autograph
