#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "autograph/error.hpp"
#include "autograph/model.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"

using namespace autograph;
using ad::Tensor;
using gradcases::random_matrix;

namespace {

struct Fixture {
  std::mt19937_64 rng{21};
  SparseGraph g = gradcases::random_undirected(15, 0.2, rng);
  std::shared_ptr<const GraphContext> ctx = GraphContext::build(g, true);
  Matrix adj = g.to_dense();
  Matrix h = random_matrix(15, 4, rng);
};

Matrix add_row(Matrix m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) += bias(0, j);
  return m;
}

Matrix plus(Matrix a, const Matrix& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
  return a;
}

double leaky(double x) { return x > 0 ? x : 0.2 * x; }

/// Dense attention over `hood(i)`: softmax of score(i, j), weighted sum of v rows.
template <class Hood, class Score>
Matrix attend(std::size_t n, const Matrix& v, Hood hood, Score score) {
  Matrix out(n, v.cols);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::size_t> js = hood(i);
    if (js.empty()) continue;
    std::vector<double> e;
    for (auto j : js) e.push_back(score(i, j));
    const double mx = *std::max_element(e.begin(), e.end());
    double z = 0;
    for (double& x : e) z += (x = std::exp(x - mx));
    for (std::size_t t = 0; t < js.size(); ++t)
      for (std::size_t c = 0; c < v.cols; ++c) out(i, c) += e[t] / z * v(js[t], c);
  }
  return out;
}

}  // namespace

TEST_CASE("gcn layer equals the dense normalized propagation") {
  Fixture f;
  const Matrix w = random_matrix(4, 3, f.rng), b = random_matrix(1, 3, f.rng);
  const Matrix out = gcn_layer(f.ctx->gcn_norm, Tensor::constant(f.h), Tensor::constant(w),
                               Tensor::constant(b)).value();
  const Matrix expect =
      add_row(oracle::matmul(oracle::gcn_norm_dense(f.adj), oracle::matmul(f.h, w)), b);
  CHECK(oracle::max_abs_diff(out, expect) < 1e-12);
}

TEST_CASE("tagconv layer equals the dense polynomial in the normalized adjacency") {
  Fixture f;
  std::vector<Tensor> ws;
  for (int k = 0; k < 3; ++k) ws.push_back(Tensor::constant(random_matrix(4, 2, f.rng)));
  const Matrix out = tagconv_layer(f.ctx->gcn_norm, Tensor::constant(f.h), ws, Tensor{}).value();
  const Matrix a = oracle::gcn_norm_dense(f.adj);
  Matrix power = f.h, expect(15, 2);
  for (int k = 0; k < 3; ++k) {
    if (k > 0) power = oracle::matmul(a, power);
    expect = plus(expect, oracle::matmul(power, ws[k].value()));
  }
  CHECK(oracle::max_abs_diff(out, expect) < 1e-12);
}

TEST_CASE("sage mean layer combines self and the in-neighbor mean") {
  Fixture f;
  const Matrix ws = random_matrix(4, 3, f.rng), wn = random_matrix(4, 3, f.rng);
  const Matrix b = random_matrix(1, 3, f.rng);
  const Matrix out = sage_mean_layer(f.ctx->mean_in, Tensor::constant(f.h), Tensor::constant(ws),
                                     Tensor::constant(wn), Tensor::constant(b)).value();
  Matrix mean(15, 15);
  for (std::size_t i = 0; i < 15; ++i) {
    double deg = 0;
    for (std::size_t j = 0; j < 15; ++j) deg += f.adj(j, i) != 0 && i != j;
    for (std::size_t j = 0; j < 15; ++j)
      if (f.adj(j, i) != 0 && i != j) mean(i, j) = 1.0 / deg;
  }
  const Matrix expect = add_row(
      plus(oracle::matmul(f.h, ws), oracle::matmul(oracle::matmul(mean, f.h), wn)), b);
  CHECK(oracle::max_abs_diff(out, expect) < 1e-12);
}

TEST_CASE("gat layer equals dense softmax attention over in-neighbors and self") {
  Fixture f;
  std::vector<GatHead> heads;
  for (int i = 0; i < 2; ++i)
    heads.push_back({Tensor::constant(random_matrix(4, 3, f.rng)),
                     Tensor::constant(random_matrix(3, 1, f.rng)),
                     Tensor::constant(random_matrix(3, 1, f.rng))});
  const Matrix cat = gat_layer(f.ctx->attend_in, Tensor::constant(f.h), heads, 0.2, false).value();
  const Matrix avg = gat_layer(f.ctx->attend_in, Tensor::constant(f.h), heads, 0.2, true).value();
  REQUIRE(cat.cols == 6);
  auto hood = [&](std::size_t i) {
    std::vector<std::size_t> js;
    for (std::size_t j = 0; j < 15; ++j)
      if (j == i || f.adj(j, i) != 0) js.push_back(j);
    return js;
  };
  Matrix sum(15, 3);
  for (std::size_t k = 0; k < 2; ++k) {
    const Matrix wh = oracle::matmul(f.h, heads[k].w.value());
    const Matrix sd = oracle::matmul(wh, heads[k].a_dst.value());
    const Matrix ss = oracle::matmul(wh, heads[k].a_src.value());
    const Matrix head = attend(15, wh, hood, [&](std::size_t i, std::size_t j) {
      return leaky(sd(i, 0) + ss(j, 0));
    });
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(cat(i, 3 * k + c) == doctest::Approx(head(i, c)).epsilon(1e-12));
        sum(i, c) += head(i, c) / 2.0;
      }
  }
  CHECK(oracle::max_abs_diff(avg, sum) < 1e-12);
}

TEST_CASE("two-hop linear layer attends over the 2-hop set and adds the scaled self path") {
  Fixture f;
  const Matrix att = random_matrix(4, 1, f.rng), w = random_matrix(4, 4, f.rng);
  const Matrix b = random_matrix(1, 4, f.rng);
  const double alpha = 0.6;
  const Matrix out =
      two_hop_linear_layer(f.ctx->two_hop, Tensor::constant(f.h), Tensor::constant(att),
                           Tensor::constant(w), Tensor::constant(b),
                           Tensor::constant(Matrix(1, 1, alpha)))
          .value();
  const Matrix s = oracle::matmul(f.h, att);
  const Matrix hood = attend(
      15, f.h,
      [&](std::size_t i) {
        std::vector<std::size_t> js;
        for (auto j : oracle::k_hop(f.adj, i, 2)) js.push_back(j);
        return js;
      },
      [&](std::size_t, std::size_t j) { return s(j, 0); });
  Matrix self = add_row(oracle::matmul(f.h, w), b);
  for (double& v : self.data) v *= alpha;
  CHECK(oracle::max_abs_diff(out, plus(hood, self)) < 1e-12);
}

TEST_CASE("graph operators: mean rows sum to one, attention includes self") {
  Fixture f;
  const auto& m = f.ctx->mean_in.matrix();
  for (NodeId i = 0; i < 15; ++i) {
    const auto ws = m.weights(i);
    if (ws.empty()) continue;
    CHECK(std::accumulate(ws.begin(), ws.end(), 0.0) == doctest::Approx(1.0));
    const auto nb = f.ctx->attend_in.matrix().neighbors(i);
    CHECK(std::find(nb.begin(), nb.end(), i) != nb.end());
  }
  const auto no_hop = GraphContext::build(f.g, false);
  CHECK(no_hop->two_hop.n_nodes() == 0);
}

TEST_CASE("a bias-free 1433-16-7 GCN has 23,040 parameters") {
  auto ctx = GraphContext::build(SparseGraph::from_edges(3, {{0, 1, 1}}, false, false), false);
  ModelSpec spec;
  LayerSpec a, b;
  a.in_dim = 1433;
  a.out_dim = 16;
  a.bias = false;
  b.in_dim = 16;
  b.out_dim = 7;
  b.bias = false;
  spec.gnn_layers = {a, b};
  CHECK(count_params(Model(spec, ctx, 0)) == 23040);
  spec.gnn_layers[0].bias = spec.gnn_layers[1].bias = true;
  CHECK(count_params(Model(spec, ctx, 0)) == 23040 + 16 + 7);
}

TEST_CASE("sparse leading GCN path matches the dense two-layer computation") {
  Fixture f;
  Matrix x(15, 40);
  std::uniform_int_distribution<int> col(0, 39);
  for (std::size_t i = 0; i < 15; ++i)
    for (int t = 0; t < 3; ++t) x(i, static_cast<std::size_t>(col(f.rng))) = 1.0;
  ModelSpec spec;
  LayerSpec a, b;
  a.in_dim = 40;
  a.out_dim = 8;
  b.in_dim = 8;
  b.out_dim = 3;
  spec.gnn_layers = {a, b};
  Model model(spec, f.ctx, 5);
  std::mt19937_64 rng(0);
  const Matrix out = model.forward(Tensor::constant(x), Tensor{}, false, rng).value();
  const auto& p = model.parameters();
  const Matrix an = oracle::gcn_norm_dense(f.adj);
  Matrix h = add_row(oracle::matmul(an, oracle::matmul(x, p[0].value())), p[1].value());
  for (double& v : h.data) v = std::max(v, 0.0);
  const Matrix expect = add_row(oracle::matmul(an, oracle::matmul(h, p[2].value())), p[3].value());
  CHECK(oracle::max_abs_diff(out, expect) < 1e-12);

  // The same input as a trainable tensor takes the dense path.
  const Matrix dense = model.forward(Tensor::parameter(x), Tensor{}, false, rng).value();
  CHECK(oracle::max_abs_diff(out, dense) < 1e-12);
}

TEST_CASE("models are permutation equivariant") {
  Fixture f;
  std::vector<NodeId> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), f.rng);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 15; ++i)
    for (NodeId j : f.g.neighbors(i))
      if (i < j) edges.push_back({perm[i], perm[j], 1.0});
  auto pctx = GraphContext::build(SparseGraph::from_edges(15, edges, false, false), true);
  Matrix px(15, 4);
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t c = 0; c < 4; ++c) px(perm[i], c) = f.h(i, c);

  for (LayerKind kind : {LayerKind::gcn, LayerKind::tagconv, LayerKind::sage_mean, LayerKind::gat,
                         LayerKind::two_hop_linear}) {
    CAPTURE(to_string(kind));
    ModelSpec spec;
    spec.input_mlp_dims = {4, 6};
    LayerSpec l;
    l.kind = kind;
    l.in_dim = 6;
    l.out_dim = 6;
    l.heads = kind == LayerKind::gat ? 2 : 1;
    LayerSpec l2 = l;
    l2.in_dim = l.out_dim * static_cast<std::size_t>(l.heads);
    if (kind == LayerKind::two_hop_linear) l2.in_dim = 6;
    l2.out_dim = 6;
    spec.gnn_layers = {l, l2};
    spec.output_mlp_dims = {6 * static_cast<std::size_t>(l2.heads), 3};
    Model m1(spec, f.ctx, 9), m2(spec, pctx, 9);
    std::mt19937_64 r1(0), r2(0);
    const Matrix y1 = m1.forward(Tensor::constant(f.h), Tensor{}, false, r1).value();
    const Matrix y2 = m2.forward(Tensor::constant(px), Tensor{}, false, r2).value();
    double worst = 0;
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(y1(i, c) - y2(perm[i], c)));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("model rejects inconsistent specs") {
  Fixture f;
  ModelSpec spec;
  LayerSpec l;
  l.in_dim = 4;
  l.out_dim = 3;
  spec.gnn_layers = {l};
  spec.dropout_p = 1.0;
  CHECK_THROWS_AS(Model(spec, f.ctx, 0), ContractViolation);
  spec.dropout_p = 0.5;
  spec.input_mlp_dims = {4, 5};
  CHECK_THROWS_AS(Model(spec, f.ctx, 0), ContractViolation);
  spec.input_mlp_dims.clear();
  spec.gnn_layers[0].kind = LayerKind::two_hop_linear;
  CHECK_THROWS_AS(Model(spec, f.ctx, 0), ContractViolation);
  spec.gnn_layers[0] = l;
  spec.gnn_layers[0].kind = LayerKind::sage_mean;
  spec.gnn_layers[0].out_dim = 4;
  spec.topology = plain_stack(1);
  CHECK_THROWS_AS(Model(spec, f.ctx, 0), ContractViolation);

  ModelSpec ok;
  ok.gnn_layers = {l};
  Model m(ok, f.ctx, 0);
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(m.forward(Tensor::constant(Matrix(15, 5)), Tensor{}, false, rng), ContractViolation);
}

TEST_CASE("model spec survives a json roundtrip") {
  ModelSpec spec;
  spec.input_mlp_dims = {10, 8};
  LayerSpec l;
  l.kind = LayerKind::gcn;
  l.in_dim = l.out_dim = 8;
  spec.gnn_layers = {l, l};
  spec.output_mlp_dims = {16, 3};
  spec.activation = Activation::elu;
  spec.topology = TopologySpec{2, {{0}, {0, 1}}, {Fusion::sum, Fusion::mean}, {1, 2}, Fusion::concat};
  nlohmann::json j = spec;
  CHECK(j.get<ModelSpec>() == spec);
  CHECK_THROWS(layer_kind_from_string("conv9"));
}
