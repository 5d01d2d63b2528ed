#pragma once

// Finite-difference gradient cases for every differentiable op, layer and loss.

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "autograph/autodiff.hpp"
#include "autograph/graph.hpp"
#include "autograph/model.hpp"

namespace gradcases {

using autograph::Matrix;
using autograph::ad::Tensor;
namespace ad = autograph::ad;

struct Case {
  std::string name;
  std::function<double()> max_rel_error;
};

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (auto& v : m.data) v = n(rng);
  return m;
}

/// Entries bounded away from zero so activation kinks are never crossed.
inline Matrix off_kink(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  std::bernoulli_distribution sign(0.5);
  Matrix m(r, c);
  for (auto& v : m.data) v = sign(rng) ? u(rng) : -u(rng);
  return m;
}

inline autograph::SparseGraph random_undirected(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<autograph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<autograph::NodeId>(i),
                     static_cast<autograph::NodeId>((i + 1) % n), 1.0});
    for (std::size_t j = i + 2; j < n; ++j)
      if (u(rng) < p)
        edges.push_back({static_cast<autograph::NodeId>(i), static_cast<autograph::NodeId>(j), 1.0});
  }
  return autograph::SparseGraph::from_edges(n, std::move(edges), false, false);
}

/// Scalar r^T X c with fixed random r, c, so every entry of X gets a
/// distinct nonzero weight.
class Reducer {
 public:
  Reducer(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
      : r_(Tensor::constant(random_matrix(1, rows, rng))),
        c_(Tensor::constant(random_matrix(cols, 1, rng))) {}
  Tensor operator()(const Tensor& x) const { return ad::matmul(ad::matmul(r_, x), c_); }

 private:
  Tensor r_, c_;
};

inline constexpr double kStep = 1e-6;

inline std::vector<Case> all_cases(std::uint64_t seed = 7) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto& g = *rng;
  const std::size_t n = 12, d = 5, k = 4;
  auto ctx = autograph::GraphContext::build(random_undirected(n, 0.25, g), true);
  std::vector<Case> cases;

  auto check = [](std::function<Tensor()> f, std::vector<Tensor> params) {
    return ad::grad_check(f, params, kStep, 0, 256);
  };

  {
    Tensor a = Tensor::parameter(random_matrix(n, d, g));
    Tensor b = Tensor::parameter(random_matrix(d, k, g));
    Reducer red(n, k, g);
    cases.push_back({"matmul", [=] { return check([=] { return red(ad::matmul(a, b)); }, {a, b}); }});
  }
  {
    Matrix dense = random_matrix(n, d, g);
    for (std::size_t i = 0; i < dense.size(); i += 2) dense.data[i] = 0.0;
    auto sx = std::make_shared<const ad::SparseConstant>(ad::SparseConstant::from_dense(dense));
    Tensor w = Tensor::parameter(random_matrix(d, k, g));
    Reducer red(n, k, g);
    cases.push_back(
        {"sparse_matmul", [=] { return check([=] { return red(ad::sparse_matmul(sx, w)); }, {w}); }});
  }
  {
    Tensor a = Tensor::parameter(random_matrix(n, d, g));
    Tensor b = Tensor::parameter(random_matrix(n, d, g));
    Tensor bias = Tensor::parameter(random_matrix(1, d, g));
    Tensor s = Tensor::parameter(random_matrix(1, 1, g));
    Reducer red(n, d, g);
    cases.push_back({"add", [=] { return check([=] { return red(ad::add(a, b)); }, {a, b}); }});
    cases.push_back(
        {"add_bias", [=] { return check([=] { return red(ad::add_bias(a, bias)); }, {a, bias}); }});
    cases.push_back({"scale", [=] { return check([=] { return red(ad::scale(a, s)); }, {a, s}); }});
    cases.push_back({"spmm", [=] { return check([=] { return red(ad::spmm(ctx->gcn_norm, a)); }, {a}); }});
    cases.push_back(
        {"spmm_mean_in", [=] { return check([=] { return red(ad::spmm(ctx->mean_in, a)); }, {a}); }});
  }
  {
    Tensor x = Tensor::parameter(off_kink(n, d, g));
    Reducer red(n, d, g);
    cases.push_back({"relu", [=] { return check([=] { return red(ad::relu(x)); }, {x}); }});
    cases.push_back(
        {"leaky_relu", [=] { return check([=] { return red(ad::leaky_relu(x, 0.2)); }, {x}); }});
    cases.push_back({"elu", [=] { return check([=] { return red(ad::elu(x, 1.0)); }, {x}); }});
    cases.push_back({"dropout", [=] {
                       return check(
                           [=] {
                             std::mt19937_64 local(99);
                             return red(ad::dropout(x, 0.4, true, local));
                           },
                           {x});
                     }});
  }
  {
    Tensor a = Tensor::parameter(random_matrix(n, d, g));
    Tensor b = Tensor::parameter(random_matrix(n, d, g));
    Tensor c = Tensor::parameter(random_matrix(n, d, g));
    Reducer red(n, d, g), red3(n, 3 * d, g);
    auto parts = [=] { return std::vector<Tensor>{a, b, c}; };
    cases.push_back({"concat_cols", [=] { return check([=] { return red3(ad::concat_cols(parts())); }, {a, b, c}); }});
    cases.push_back({"sum", [=] { return check([=] { return red(ad::sum(parts())); }, {a, b, c}); }});
    cases.push_back({"mean", [=] { return check([=] { return red(ad::mean(parts())); }, {a, b, c}); }});
    cases.push_back({"max", [=] { return check([=] { return red(ad::max(parts())); }, {a, b, c}); }});
  }
  {
    const auto& op = ctx->attend_in;
    Tensor dst = Tensor::parameter(random_matrix(n, 1, g));
    Tensor src = Tensor::parameter(random_matrix(n, 1, g));
    Tensor v = Tensor::parameter(random_matrix(n, d, g));
    Reducer red_e(op.n_arcs(), 1, g), red(n, d, g);
    cases.push_back({"edge_score", [=] {
                       return check([=] { return red_e(ad::edge_score(op, dst, src)); }, {dst, src});
                     }});
    cases.push_back({"edge_softmax", [=] {
                       // The destination term is constant within a row, so softmax cancels it.
                       return check([=] { return red_e(ad::edge_softmax(op, ad::edge_score(op, dst, src))); },
                                    {src});
                     }});
    cases.push_back({"edge_aggregate", [=] {
                       return check(
                           [=] {
                             return red(ad::edge_aggregate(
                                 op, ad::edge_softmax(op, ad::edge_score(op, dst, src)), v));
                           },
                           {src, v});
                     }});
  }
  {
    Tensor logits = Tensor::parameter(random_matrix(n, k, g, 2.0));
    std::vector<int> labels(n);
    autograph::Mask mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % k);
      mask[i] = i % 3 != 0;
    }
    cases.push_back({"softmax_cross_entropy", [=] {
                       return check(
                           [=] { return ad::masked_softmax_cross_entropy(logits, labels, mask); },
                           {logits});
                     }});
  }
  {
    Tensor h = Tensor::parameter(random_matrix(n, d, g));
    Tensor w0 = Tensor::parameter(random_matrix(d, k, g));
    Tensor w1 = Tensor::parameter(random_matrix(d, k, g));
    Tensor w2 = Tensor::parameter(random_matrix(d, k, g));
    Tensor bias = Tensor::parameter(random_matrix(1, k, g));
    Reducer red(n, k, g);
    cases.push_back({"gcn_layer", [=] {
                       return check([=] { return red(autograph::gcn_layer(ctx->gcn_norm, h, w0, bias)); },
                                    {h, w0, bias});
                     }});
    cases.push_back({"tagconv_layer", [=] {
                       return check(
                           [=] {
                             std::vector<Tensor> ws{w0, w1, w2};
                             return red(autograph::tagconv_layer(ctx->gcn_norm, h, ws, bias));
                           },
                           {h, w0, w1, w2, bias});
                     }});
    cases.push_back({"sage_mean_layer", [=] {
                       return check(
                           [=] { return red(autograph::sage_mean_layer(ctx->mean_in, h, w0, w1, bias)); },
                           {h, w0, w1, bias});
                     }});
  }
  {
    Tensor h = Tensor::parameter(random_matrix(n, d, g));
    std::vector<autograph::GatHead> heads;
    std::vector<Tensor> params{h};
    for (int i = 0; i < 2; ++i) {
      autograph::GatHead head{Tensor::parameter(random_matrix(d, k, g)),
                              Tensor::parameter(random_matrix(k, 1, g)),
                              Tensor::parameter(random_matrix(k, 1, g))};
      params.insert(params.end(), {head.w, head.a_src, head.a_dst});
      heads.push_back(head);
    }
    Reducer red_cat(n, 2 * k, g), red_avg(n, k, g);
    cases.push_back({"gat_layer_concat", [=] {
                       return check(
                           [=] { return red_cat(autograph::gat_layer(ctx->attend_in, h, heads, 0.2, false)); },
                           params);
                     }});
    cases.push_back({"gat_layer_average", [=] {
                       return check(
                           [=] { return red_avg(autograph::gat_layer(ctx->attend_in, h, heads, 0.2, true)); },
                           params);
                     }});
  }
  {
    Tensor h = Tensor::parameter(random_matrix(n, d, g));
    Tensor att = Tensor::parameter(random_matrix(d, 1, g));
    Tensor w = Tensor::parameter(random_matrix(d, d, g));
    Tensor bias = Tensor::parameter(random_matrix(1, d, g));
    Tensor alpha = Tensor::parameter(Matrix(1, 1, 0.7));
    Reducer red(n, d, g);
    cases.push_back({"two_hop_linear_layer", [=] {
                       return check(
                           [=] {
                             return red(autograph::two_hop_linear_layer(ctx->two_hop, h, att, w, bias, alpha));
                           },
                           {h, att, w, bias, alpha});
                     }});
  }
  {
    autograph::ModelSpec spec;
    spec.input_mlp_dims = {d, 6};
    spec.topology = autograph::TopologySpec{
        2, {{0}, {0, 1}}, {autograph::Fusion::sum, autograph::Fusion::max}, {1, 2},
        autograph::Fusion::concat};
    autograph::LayerSpec l;
    l.in_dim = 6;
    l.out_dim = 6;
    spec.gnn_layers = {l, l};
    spec.output_mlp_dims = {12, k};
    spec.activation = autograph::Activation::elu;
    auto model = std::make_shared<autograph::Model>(spec, ctx, 3);
    Tensor x = Tensor::constant(random_matrix(n, d, g));
    std::vector<int> labels(n);
    autograph::Mask mask(n, 1);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % k);
    cases.push_back({"model_topology_loss", [=] {
                       return check(
                           [=] {
                             std::mt19937_64 local(1);
                             return ad::masked_softmax_cross_entropy(
                                 model->forward(x, Tensor{}, false, local), labels, mask);
                           },
                           model->parameters());
                     }});
  }
  return cases;
}

}  // namespace gradcases
