#include <cmath>

#include "autograph/error.hpp"
#include "autograph/model.hpp"

namespace autograph {

using ad::Tensor;

namespace {

Matrix glorot(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(in, out);
  for (double& v : m.data) v = dist(rng);
  return m;
}

constexpr double kGatSlope = 0.2;
constexpr double kSparseInputDensity = 0.25;

}  // namespace

std::size_t Model::add_param(Matrix m) {
  params_.push_back(Tensor::parameter(std::move(m)));
  return params_.size() - 1;
}

Model::Linear Model::make_linear(std::size_t in, std::size_t out, bool bias, std::mt19937_64& rng) {
  require(in >= 1 && out >= 1, "model: dims must be positive");
  Linear l;
  l.w = add_param(glorot(in, out, rng));
  if (bias) l.b = add_param(Matrix(1, out));
  return l;
}

Model::Model(ModelSpec spec, std::shared_ptr<const GraphContext> ctx, std::uint64_t seed)
    : spec_(std::move(spec)), ctx_(std::move(ctx)) {
  require(spec_.dropout_p >= 0.0 && spec_.dropout_p < 1.0, "model: dropout must be in [0,1)");
  std::mt19937_64 rng(seed);
  std::size_t width = 0;
  auto chain = [&](const std::vector<std::size_t>& dims, std::vector<Linear>& out) {
    if (dims.empty()) return;
    require(dims.size() >= 2, "model: an MLP chain needs at least two dims");
    if (width != 0) require(dims[0] == width, "model: MLP input dim does not match");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      out.push_back(make_linear(dims[i], dims[i + 1], true, rng));
    width = dims.back();
  };
  chain(spec_.input_mlp_dims, input_mlp_);

  if (spec_.topology) {
    spec_.topology->validate();
    require(spec_.gnn_layers.size() == static_cast<std::size_t>(spec_.topology->n_layers),
            "model: topology layer count does not match gnn_layers");
    for (const auto& l : spec_.gnn_layers)
      require(l.kind == LayerKind::gcn && l.in_dim == l.out_dim &&
                  l.in_dim == spec_.gnn_layers[0].in_dim,
              "model: topology stacks need equal-width gcn layers");
  }

  for (std::size_t li = 0; li < spec_.gnn_layers.size(); ++li) {
    const auto& ls = spec_.gnn_layers[li];
    require(ls.in_dim >= 1 && ls.out_dim >= 1, "model: layer dims must be positive");
    require(ls.K >= 0 && ls.heads >= 1, "model: invalid K or heads");
    if (width != 0 && !spec_.topology) require(ls.in_dim == width, "model: layer in_dim mismatch");
    GnnLayer g;
    g.spec = ls;
    const bool last = li + 1 == spec_.gnn_layers.size();
    switch (ls.kind) {
      case LayerKind::gcn:
        g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
        break;
      case LayerKind::tagconv:
        for (int k = 0; k <= ls.K; ++k) g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
        break;
      case LayerKind::sage_mean:
        g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
        g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
        break;
      case LayerKind::gat:
        for (int h = 0; h < ls.heads; ++h) {
          g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
          g.att_src.push_back(add_param(glorot(ls.out_dim, 1, rng)));
          g.att_dst.push_back(add_param(glorot(ls.out_dim, 1, rng)));
        }
        g.average_heads = last && spec_.output_mlp_dims.empty();
        break;
      case LayerKind::two_hop_linear:
        require(ls.in_dim == ls.out_dim, "model: two_hop_linear maps d -> d");
        require(ctx_->two_hop.n_nodes() == ctx_->graph.n_nodes(),
                "model: graph context lacks the 2-hop operator");
        g.w.push_back(add_param(glorot(ls.in_dim, ls.out_dim, rng)));
        g.att_src.push_back(add_param(Matrix(ls.in_dim, 1)));  // zero: uniform start
        if (ls.alpha_learnable)
          g.alpha = add_param(Matrix(1, 1, ls.alpha));
        else
          g.frozen_alpha = Tensor::constant(Matrix(1, 1, ls.alpha));
        break;
    }
    if (ls.bias) g.b = add_param(Matrix(1, ls.out_dim));
    width = (ls.kind == LayerKind::gat && !g.average_heads) ? ls.out_dim * ls.heads : ls.out_dim;
    gnn_.push_back(std::move(g));
  }
  if (spec_.topology && !spec_.gnn_layers.empty())
    width = spec_.gnn_layers[0].out_dim * spec_.topology->final_width_factor();

  if (!spec_.output_mlp_dims.empty()) {
    // Side features widen the first output layer; the check happens in forward.
    width = 0;
    chain(spec_.output_mlp_dims, output_mlp_);
  }
}

std::size_t Model::input_dim() const {
  if (!spec_.input_mlp_dims.empty()) return spec_.input_mlp_dims.front();
  if (!spec_.gnn_layers.empty()) return spec_.gnn_layers.front().in_dim;
  if (!spec_.output_mlp_dims.empty()) return spec_.output_mlp_dims.front();
  return 0;
}

Tensor Model::apply_linear(const Linear& l, const Tensor& h) const {
  Tensor out = ad::matmul(h, params_[l.w]);
  return l.b ? ad::add_bias(out, params_[*l.b]) : out;
}

Tensor Model::activate(const Tensor& h) const {
  switch (spec_.activation) {
    case Activation::relu: return ad::relu(h);
    case Activation::leaky_relu: return ad::leaky_relu(h, 0.2);
    case Activation::elu: return ad::elu(h, 1.0);
  }
  return h;
}

Tensor Model::apply_gnn(const GnnLayer& l, const Tensor& h) const {
  const Tensor bias = l.b ? params_[*l.b] : Tensor{};
  switch (l.spec.kind) {
    case LayerKind::gcn:
      return gcn_layer(ctx_->gcn_norm, h, params_[l.w[0]], bias);
    case LayerKind::tagconv: {
      std::vector<Tensor> w;
      for (auto i : l.w) w.push_back(params_[i]);
      return tagconv_layer(ctx_->gcn_norm, h, w, bias);
    }
    case LayerKind::sage_mean:
      return sage_mean_layer(ctx_->mean_in, h, params_[l.w[0]], params_[l.w[1]], bias);
    case LayerKind::gat: {
      std::vector<GatHead> heads;
      for (std::size_t k = 0; k < l.w.size(); ++k)
        heads.push_back({params_[l.w[k]], params_[l.att_src[k]], params_[l.att_dst[k]]});
      Tensor out = gat_layer(ctx_->attend_in, h, heads, kGatSlope, l.average_heads);
      if (!bias) return out;
      if (out.cols() == bias.cols()) return ad::add_bias(out, bias);
      // Concatenated heads share the per-head bias.
      std::vector<Tensor> tiled(static_cast<std::size_t>(l.spec.heads), bias);
      return ad::add_bias(out, ad::concat_cols(tiled));
    }
    case LayerKind::two_hop_linear: {
      const Tensor alpha = l.alpha ? params_[*l.alpha] : l.frozen_alpha;
      return two_hop_linear_layer(ctx_->two_hop, h, params_[l.att_src[0]], params_[l.w[0]], bias,
                                  alpha);
    }
  }
  throw ContractViolation("model: unknown layer kind");
}

namespace {

Tensor fuse(Fusion f, std::span<const Tensor> parts) {
  if (parts.size() == 1) return parts[0];
  switch (f) {
    case Fusion::sum: return ad::sum(parts);
    case Fusion::mean: return ad::mean(parts);
    case Fusion::max: return ad::max(parts);
    case Fusion::concat: return ad::concat_cols(parts);
  }
  return parts[0];
}

}  // namespace

Tensor Model::forward(const Tensor& x, const Tensor& side, bool training,
                      std::mt19937_64& rng) const {
  require(x.rows() == ctx_->graph.n_nodes(), "forward: feature rows must equal n_nodes");
  require(x.cols() == input_dim(), "forward: feature width does not match the model");
  const double p = spec_.dropout_p;
  const bool gcn_first = input_mlp_.empty() && !spec_.topology && !gnn_.empty() &&
                         gnn_[0].spec.kind == LayerKind::gcn;
  const bool sparse_ok = !x.requires_grad() && (!input_mlp_.empty() || gcn_first);
  if (sparse_ok && sparse_key_ != x.node()) {
    sparse_key_ = x.node();
    auto sx = std::make_shared<const ad::SparseConstant>(ad::SparseConstant::from_dense(x.value()));
    sparse_x_ = sx->density() < kSparseInputDensity ? std::move(sx) : nullptr;
  }
  Tensor h;
  std::size_t first_mlp = 0, first_gnn = 0;
  if (sparse_ok && sparse_x_) {
    // Same arithmetic as the dense path, touching only the stored entries.
    auto sx = training && p > 0.0
                  ? std::make_shared<const ad::SparseConstant>(sparse_x_->dropout(p, rng))
                  : sparse_x_;
    if (!input_mlp_.empty()) {
      const Linear& l = input_mlp_[0];
      h = ad::sparse_matmul(std::move(sx), params_[l.w]);
      if (l.b) h = ad::add_bias(h, params_[*l.b]);
      h = ad::dropout(activate(h), p, training, rng);
      first_mlp = 1;
    } else {
      const GnnLayer& l = gnn_[0];
      h = ad::spmm(ctx_->gcn_norm, ad::sparse_matmul(std::move(sx), params_[l.w[0]]));
      if (l.b) h = ad::add_bias(h, params_[*l.b]);
      if (gnn_.size() > 1 || !output_mlp_.empty()) h = ad::dropout(activate(h), p, training, rng);
      first_gnn = 1;
    }
  } else {
    h = ad::dropout(x, p, training, rng);
  }
  for (std::size_t i = first_mlp; i < input_mlp_.size(); ++i)
    h = ad::dropout(activate(apply_linear(input_mlp_[i], h)), p, training, rng);

  if (spec_.topology) {
    const auto& topo = *spec_.topology;
    std::vector<Tensor> slots{h};
    for (int k = 0; k < topo.n_layers; ++k) {
      std::vector<Tensor> in;
      for (int s : topo.inputs[k]) in.push_back(slots[s]);
      Tensor z = apply_gnn(gnn_[k], fuse(topo.layer_fusion[k], in));
      slots.push_back(ad::dropout(activate(z), p, training, rng));
    }
    std::vector<Tensor> fin;
    for (int s : topo.final_inputs) fin.push_back(slots[s]);
    h = fuse(topo.final_fusion, fin);
  } else {
    for (std::size_t i = first_gnn; i < gnn_.size(); ++i) {
      h = apply_gnn(gnn_[i], h);
      if (i + 1 < gnn_.size() || !output_mlp_.empty())
        h = ad::dropout(activate(h), p, training, rng);
    }
  }

  if (side) {
    std::vector<Tensor> parts{h, side};
    h = ad::concat_cols(parts);
  }
  for (std::size_t i = 0; i < output_mlp_.size(); ++i) {
    if (i == 0)
      require(h.cols() == params_[output_mlp_[0].w].rows(),
              "forward: output MLP input width mismatch");
    h = apply_linear(output_mlp_[i], h);
    if (i + 1 < output_mlp_.size()) h = ad::dropout(activate(h), p, training, rng);
  }
  return h;
}

std::size_t count_params(const Model& model) {
  std::size_t total = 0;
  for (const auto& p : model.parameters()) total += p.value().size();
  return total;
}

}  // namespace autograph
