#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "autograph/autodiff.hpp"
#include "autograph/graph.hpp"
#include "autograph/topology.hpp"

namespace autograph {

enum class LayerKind { gcn, tagconv, sage_mean, gat, two_hop_linear };
enum class Activation { relu, leaky_relu, elu };

struct LayerSpec {
  LayerKind kind = LayerKind::gcn;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;  // per head for gat
  int K = 2;                // tagconv radius
  int heads = 1;            // gat
  double alpha = 1.0;       // two_hop_linear self-path weight (initial value)
  bool alpha_learnable = true;
  bool bias = true;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
  std::vector<std::size_t> input_mlp_dims;   // full chain, e.g. {D, 64}
  std::vector<LayerSpec> gnn_layers;
  std::vector<std::size_t> output_mlp_dims;  // full chain, e.g. {64, C}
  double dropout_p = 0.5;
  Activation activation = Activation::relu;
  /// When present, gnn_layers are GCN layers wired by this topology.
  std::optional<TopologySpec> topology;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Graph operators shared read-only by all trials on one dataset.
struct GraphContext {
  SparseGraph graph;               // structure the models see (possibly symmetrized)
  ad::SparseOperator gcn_norm;     // D^-1/2 (A+I) D^-1/2 of the undirected view
  ad::SparseOperator mean_in;      // row i averages the in-neighbors of i
  ad::SparseOperator attend_in;    // in-neighbors plus self, for attention
  ad::SparseOperator two_hop;      // row i lists the 2-hop neighborhood of i

  static std::shared_ptr<const GraphContext> build(const SparseGraph& g, bool with_two_hop = true);
};

// Single layers, pre-activation. `bias` may be an empty Tensor.
ad::Tensor gcn_layer(const ad::SparseOperator& a_hat, const ad::Tensor& h, const ad::Tensor& w,
                     const ad::Tensor& bias);
ad::Tensor tagconv_layer(const ad::SparseOperator& a_hat, const ad::Tensor& h,
                         std::span<const ad::Tensor> w, const ad::Tensor& bias);
ad::Tensor sage_mean_layer(const ad::SparseOperator& mean_in, const ad::Tensor& h,
                           const ad::Tensor& w_self, const ad::Tensor& w_neigh,
                           const ad::Tensor& bias);

struct GatHead {
  ad::Tensor w;      // d x d'
  ad::Tensor a_src;  // d' x 1
  ad::Tensor a_dst;  // d' x 1
};
/// Concatenates heads, or averages them when `average_heads`.
ad::Tensor gat_layer(const ad::SparseOperator& attend_in, const ad::Tensor& h,
                     std::span<const GatHead> heads, double leaky_slope, bool average_heads);
/// Learned softmax weights over the 2-hop neighborhood plus alpha * (h w + b).
ad::Tensor two_hop_linear_layer(const ad::SparseOperator& two_hop, const ad::Tensor& h,
                                const ad::Tensor& attention, const ad::Tensor& w,
                                const ad::Tensor& bias, const ad::Tensor& alpha);

class Model {
 public:
  Model(ModelSpec spec, std::shared_ptr<const GraphContext> ctx, std::uint64_t seed);

  /// Logits N x C. `side` (may be empty) is concatenated before the output MLP.
  ad::Tensor forward(const ad::Tensor& x, const ad::Tensor& side, bool training,
                     std::mt19937_64& rng) const;

  std::vector<ad::Tensor>& parameters() { return params_; }
  const std::vector<ad::Tensor>& parameters() const { return params_; }
  const ModelSpec& spec() const { return spec_; }
  std::size_t input_dim() const;

 private:
  struct Linear {
    std::size_t w = 0;
    std::optional<std::size_t> b;
  };
  struct GnnLayer {
    LayerSpec spec;
    std::vector<std::size_t> w;        // gcn:1, tagconv:K+1, sage:2, gat:heads, two_hop:1
    std::vector<std::size_t> att_src;  // gat per head, two_hop: 1
    std::vector<std::size_t> att_dst;  // gat per head
    std::optional<std::size_t> b;
    std::optional<std::size_t> alpha;
    ad::Tensor frozen_alpha;
    bool average_heads = false;
  };

  std::size_t add_param(Matrix m);
  Linear make_linear(std::size_t in, std::size_t out, bool bias, std::mt19937_64& rng);
  ad::Tensor apply_linear(const Linear& l, const ad::Tensor& h) const;
  ad::Tensor apply_gnn(const GnnLayer& l, const ad::Tensor& h) const;
  ad::Tensor activate(const ad::Tensor& h) const;

  ModelSpec spec_;
  std::shared_ptr<const GraphContext> ctx_;
  std::vector<ad::Tensor> params_;
  std::vector<Linear> input_mlp_;
  std::vector<GnnLayer> gnn_;
  std::vector<Linear> output_mlp_;
  // Sparse copy of the last constant input seen by forward (null when dense).
  mutable std::shared_ptr<ad::Node> sparse_key_;
  mutable std::shared_ptr<const ad::SparseConstant> sparse_x_;
};

/// Total scalar parameters: weights, biases, attention vectors, learnable scalars.
std::size_t count_params(const Model& model);

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

}  // namespace autograph
