#include "hgfx/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hgfx/error.hpp"
#include "hgfx/init.hpp"
#include "hgfx/ops.hpp"

namespace hgfx {

namespace {

struct NamedAblation {
  const char* name;
  AblationFlags flags;
};

// Rows of the ablation table, baseline first.
const NamedAblation kAblations[] = {
    {"base", {false, false, false}},
    {"hg", {true, false, false}},
    {"hg+scan", {true, true, false}},
    {"scan+hgl", {false, true, true}},
    {"full", {true, true, true}},
};

Tensor ones(std::size_t n) { return Tensor::full({n}, 1.0, true); }
Tensor zeros(std::size_t n) { return Tensor::zeros({n}, true); }

// m_ic = max_j w_ij (pool[adj_ij],c - x_ic)
Tensor weighted_max_relative(Tape& tape, const Tensor& x, const Tensor& pool, const Adjacency& adj,
                             const Tensor& w) {
  const std::size_t n = x.dim(0), d = x.dim(1), k = adj.k;
  const auto xv = x.data(), pv = pool.data(), wv = w.data();
  std::vector<double> out(n * d);
  std::vector<std::size_t> arg(n * d);  // winning neighbour slot
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = adj.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t best = 0;
      double best_v = wv[i * k] * (pv[row[0] * d + c] - xv[i * d + c]);
      for (std::size_t j = 1; j < k; ++j) {
        const double v = wv[i * k + j] * (pv[row[j] * d + c] - xv[i * d + c]);
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      out[i * d + c] = best_v;
      arg[i * d + c] = best;
    }
  }
  const bool track = tape.tracks({&x, &pool, &w});
  Tensor result = Tensor::from({n, d}, std::move(out), track);
  if (track) {
    tape.record(result, {x, pool, w},
                [x, pool, w, adj, arg = std::move(arg), n, d, k](Tape& t, std::span<const double> g) {
                  auto gx = t.grad_buffer(x);
                  auto gp = t.grad_buffer(pool);
                  auto gw = t.grad_buffer(w);
                  const auto xv = x.data(), pv = pool.data(), wv = w.data();
                  for (std::size_t i = 0; i < n; ++i) {
                    const auto row = adj.row(i);
                    for (std::size_t c = 0; c < d; ++c) {
                      const std::size_t j = arg[i * d + c];
                      const std::size_t src = row[j];
                      const double gi = g[i * d + c];
                      const double wij = wv[i * k + j];
                      if (!gw.empty()) gw[i * k + j] += gi * (pv[src * d + c] - xv[i * d + c]);
                      if (!gp.empty()) gp[src * d + c] += gi * wij;
                      if (!gx.empty()) gx[i * d + c] -= gi * wij;
                    }
                  }
                });
  }
  return result;
}

}  // namespace

AblationFlags ablation_from_name(const std::string& name) {
  for (const auto& a : kAblations)
    if (name == a.name) return a.flags;
  throw ConfigError("unknown ablation '" + name + "' (expected base, hg, hg+scan, scan+hgl or full)");
}

std::string ablation_name(const AblationFlags& flags) {
  for (const auto& a : kAblations)
    if (a.flags == flags) return a.name;
  std::string s = "custom(";
  s += flags.hetero_graph ? "hg" : "-";
  s += flags.adaptive_scan ? ",scan" : ",-";
  s += flags.hetero_learning ? ",hgl)" : ",-)";
  return s;
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& a : kAblations) v.emplace_back(a.name);
    return v;
  }();
  return names;
}

std::size_t ModelConfig::nodes() const {
  if (patch_size == 0) return 0;
  return (image_size / patch_size) * (image_size / patch_size);
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(image_size, "image_size");
  positive(patch_size, "patch_size");
  positive(dim, "dim");
  positive(mapped_dim, "mapped_dim");
  positive(state_dim, "state_dim");
  positive(k, "k");
  positive(dilation, "dilation");
  positive(blocks, "blocks");
  positive(classes, "classes");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (image_size % patch_size) throw ConfigError("image_size must be divisible by patch_size");
  if (k > nodes()) throw ConfigError("k = " + std::to_string(k) + " exceeds the " + std::to_string(nodes()) + " nodes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0,1)");
  if (!(distance_floor > 0.0)) throw ConfigError("distance_floor must be positive");
}

ReasonBlockParams init_reason_block(const ModelConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.dim;
  ReasonBlockParams p;
  p.norm1_gamma = ones(d);
  p.norm1_beta = zeros(d);
  if (cfg.ablation.hetero_learning) p.mapping = init_mapping_params(d, cfg.mapped_dim, rng);
  p.w_agg = glorot_uniform(2 * d, d, rng);
  p.b_agg = zeros(d);
  p.w_update = glorot_uniform(d, d, rng);
  p.b_update = zeros(d);
  p.norm2_gamma = ones(d);
  p.norm2_beta = zeros(d);
  p.ffn = Mlp{glorot_uniform(d, 4 * d, rng), zeros(4 * d), glorot_uniform(4 * d, d, rng), zeros(d)};
  return p;
}

Tensor neighbor_weights(Tape& tape, const Tensor& h, const Adjacency& adj) {
  const std::size_t n = adj.centers, k = adj.k;
  if (h.rank() != 2 || h.dim(0) != n) throw DimensionError("neighbor_weights: correlation " + shape_str(h.shape()));
  const std::size_t m = h.dim(1);
  const auto hv = h.data();
  std::vector<double> w(n * k), row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = adj.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] >= m) throw DimensionError("neighbor_weights: neighbour index out of range");
      row_sum[i] += hv[i * m + row[j]];
    }
    if (!(row_sum[i] > 0.0)) throw NumericError("neighbor_weights: correlation row has no positive mass");
    for (std::size_t j = 0; j < k; ++j) w[i * k + j] = static_cast<double>(k) * hv[i * m + row[j]] / row_sum[i];
  }
  const bool track = tape.tracks({&h});
  Tensor result = Tensor::from({n, k}, std::move(w), track);
  if (track) {
    tape.record(result, {h}, [h, adj, result, row_sum = std::move(row_sum), n, m, k](Tape& t, std::span<const double> g) {
      auto gh = t.grad_buffer(h);
      const auto wv = result.data();
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[i * k + j] * wv[i * k + j];
        const auto row = adj.row(i);
        for (std::size_t l = 0; l < k; ++l)
          gh[i * m + row[l]] += static_cast<double>(k) / row_sum[i] * (g[i * k + l] - dot / static_cast<double>(k));
      }
    });
  }
  return result;
}

Tensor aggregate(Tape& tape, const HeteroGraph& graph) {
  const Tensor& x = graph.visual;
  const Tensor& pool = graph.semantic;
  if (x.rank() != 2 || pool.rank() != 2 || x.dim(1) != pool.dim(1) || graph.adj.centers != x.dim(0))
    throw DimensionError("aggregate: graph nodes and adjacency are inconsistent");
  Tensor rel;
  if (graph.h.defined()) {
    rel = weighted_max_relative(tape, x, pool, graph.adj, neighbor_weights(tape, graph.h, graph.adj));
  } else {
    rel = ops::sub(tape, ops::indexed_row_max(tape, pool, graph.adj.idx, graph.adj.k), x);
  }
  return ops::concat_lastdim(tape, x, rel);
}

Tensor reason_block(Tape& tape, const Tensor& x, const Tensor& semantic, const ReasonBlockParams& p,
                    const ModelConfig& cfg, const BlockContext& ctx) {
  if (x.rank() != 2 || x.dim(1) != cfg.dim)
    throw DimensionError("reason_block: input " + shape_str(x.shape()) + " does not have width " + std::to_string(cfg.dim));
  const bool drop = ctx.training && cfg.dropout > 0.0;
  if (drop && ctx.rng == nullptr) throw ContractError("reason_block: training with dropout needs a generator");
  const double slope = cfg.leaky_slope;

  const Tensor xn = ops::layer_norm(tape, x, p.norm1_gamma, p.norm1_beta);
  const AblationFlags& ab = cfg.ablation;
  if (ab.semantic_branch() && !semantic.defined()) throw ContractError("reason_block: semantic nodes required");
  const Tensor pool = ab.hetero_graph ? semantic : xn;
  Tensor h;
  if (ab.hetero_learning) h = cross_modal_correlation(tape, xn, semantic, p.mapping, slope).h;
  HeteroGraph graph = build_hetero_graph(xn, pool, h, cfg.k, effective_dilation(cfg.k, cfg.dilation, pool.dim(0)));

  const Tensor agg = aggregate(tape, graph);
  Tensor upd = ops::leaky_relu(tape, ops::affine(tape, agg, p.w_agg, p.b_agg), slope);
  upd = ops::affine(tape, upd, p.w_update, p.b_update);
  Rng dummy;
  Rng& rng = ctx.rng ? *ctx.rng : dummy;
  Tensor y = ops::add(tape, x, ops::dropout(tape, upd, cfg.dropout, rng, drop));

  const Tensor ffn = mlp_forward(tape, p.ffn, ops::layer_norm(tape, y, p.norm2_gamma, p.norm2_beta), slope);
  y = ops::add(tape, y, ops::dropout(tape, ffn, cfg.dropout, rng, drop));
  if (ctx.graph) *ctx.graph = std::move(graph);
  return y;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t d = cfg_.dim;
  embed_proj_ = glorot_uniform(cfg_.patch_values(), d, rng);
  embed_pos_ = normal_init({cfg_.nodes(), d}, 0.02, rng);
  if (cfg_.ablation.semantic_branch()) {
    ssm_ = init_ssm_params(d, cfg_.state_dim, rng);
    semantic_norm_gamma_ = ones(d);
    semantic_norm_beta_ = zeros(d);
  }
  for (std::size_t b = 0; b < cfg_.blocks; ++b) blocks_.push_back(init_reason_block(cfg_, rng));
  final_norm_gamma_ = ones(d);
  final_norm_beta_ = zeros(d);
  head_w_ = glorot_uniform(d, cfg_.classes, rng);
  head_b_ = Tensor::zeros({cfg_.classes}, true);
}

ForwardResult Model::forward(Tape& tape, const ImageSample& img, const ForwardOptions& opts) const {
  if (img.height != cfg_.image_size || img.width != cfg_.image_size || img.channels != cfg_.channels)
    throw DataError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) + "x" +
                    std::to_string(img.channels) + " does not match the model input " + std::to_string(cfg_.image_size) +
                    "x" + std::to_string(cfg_.image_size) + "x" + std::to_string(cfg_.channels));
  ForwardResult res;
  NodeSet nodes = patch_embed(tape, img, cfg_.patch_size, embed_proj_, embed_pos_);
  const std::size_t n = nodes.size();

  Tensor semantic;
  std::vector<std::size_t> order;
  if (cfg_.ablation.semantic_branch()) {
    if (cfg_.ablation.adaptive_scan) {
      res.trace.plan = plan_scan(nodes.features, cfg_.distance_floor);
      order = res.trace.plan.order;
    } else {
      order = raster_order(n);
    }
    semantic = encode_semantic(tape, nodes.features, order, ssm_);
    semantic = ops::layer_norm(tape, semantic, semantic_norm_gamma_, semantic_norm_beta_);
  }

  Tensor x = nodes.features;
  BlockContext ctx{opts.training, opts.rng, nullptr};
  for (const auto& block : blocks_) {
    HeteroGraph graph;
    ctx.graph = opts.keep_trace ? &graph : nullptr;
    x = reason_block(tape, x, semantic, block, cfg_, ctx);
    if (opts.keep_trace) res.trace.graphs.push_back(std::move(graph));
  }

  const Tensor pooled = ops::mean_axis(tape, ops::layer_norm(tape, x, final_norm_gamma_, final_norm_beta_), 0);
  res.logits = ops::affine(tape, ops::reshape(tape, pooled, {1, cfg_.dim}), head_w_, head_b_);
  if (!all_finite(res.logits.data())) throw NumericError("forward: non-finite logits");
  if (opts.keep_trace) {
    res.trace.visual = std::move(nodes);
    res.trace.order = std::move(order);
    res.trace.semantic = semantic;
  }
  return res;
}

std::size_t Model::predict(const ImageSample& img) const {
  Tape tape(Tape::Mode::kInference);
  const Tensor out = forward(tape, img).logits;
  const auto logits = out.data();
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

NamedTensors Model::named_parameters() const {
  NamedTensors out;
  out.emplace_back("embed.proj", embed_proj_);
  out.emplace_back("embed.pos", embed_pos_);
  if (cfg_.ablation.semantic_branch()) {
    out.emplace_back("ssm.a_log", ssm_.a_log);
    out.emplace_back("ssm.b", ssm_.b);
    out.emplace_back("ssm.c", ssm_.c);
    out.emplace_back("ssm.delta_param", ssm_.delta_param);
    out.emplace_back("semantic_norm.gamma", semantic_norm_gamma_);
    out.emplace_back("semantic_norm.beta", semantic_norm_beta_);
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& p = blocks_[b];
    const std::string pre = "blocks." + std::to_string(b) + ".";
    out.emplace_back(pre + "norm1.gamma", p.norm1_gamma);
    out.emplace_back(pre + "norm1.beta", p.norm1_beta);
    if (cfg_.ablation.hetero_learning) {
      out.emplace_back(pre + "map.conv_v", p.mapping.conv_v);
      out.emplace_back(pre + "map.conv_s", p.mapping.conv_s);
      out.emplace_back(pre + "map.shared", p.mapping.shared_map);
      out.emplace_back(pre + "map.mlp_v.w1", p.mapping.mlp_v.w1);
      out.emplace_back(pre + "map.mlp_v.b1", p.mapping.mlp_v.b1);
      out.emplace_back(pre + "map.mlp_v.w2", p.mapping.mlp_v.w2);
      out.emplace_back(pre + "map.mlp_v.b2", p.mapping.mlp_v.b2);
      out.emplace_back(pre + "map.mlp_s.w1", p.mapping.mlp_s.w1);
      out.emplace_back(pre + "map.mlp_s.b1", p.mapping.mlp_s.b1);
      out.emplace_back(pre + "map.mlp_s.w2", p.mapping.mlp_s.w2);
      out.emplace_back(pre + "map.mlp_s.b2", p.mapping.mlp_s.b2);
    }
    out.emplace_back(pre + "agg.w", p.w_agg);
    out.emplace_back(pre + "agg.b", p.b_agg);
    out.emplace_back(pre + "update.w", p.w_update);
    out.emplace_back(pre + "update.b", p.b_update);
    out.emplace_back(pre + "norm2.gamma", p.norm2_gamma);
    out.emplace_back(pre + "norm2.beta", p.norm2_beta);
    out.emplace_back(pre + "ffn.w1", p.ffn.w1);
    out.emplace_back(pre + "ffn.b1", p.ffn.b1);
    out.emplace_back(pre + "ffn.w2", p.ffn.w2);
    out.emplace_back(pre + "ffn.b2", p.ffn.b2);
  }
  out.emplace_back("final_norm.gamma", final_norm_gamma_);
  out.emplace_back("final_norm.beta", final_norm_beta_);
  out.emplace_back("head.w", head_w_);
  out.emplace_back("head.b", head_b_);
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

void Model::load_parameters(const NamedTensors& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (auto& [name, param] : named_parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint is missing parameter '" + name + "'");
    if (it->second->shape() != param.shape())
      throw DataError("checkpoint parameter '" + name + "' has shape " + shape_str(it->second->shape()) +
                      ", model expects " + shape_str(param.shape()));
    Tensor dst = param;
    const auto src = it->second->data();
    std::copy(src.begin(), src.end(), dst.mutable_data().begin());
  }
}

std::optional<double> Model::max_abs_a_bar() const {
  if (!cfg_.ablation.semantic_branch()) return std::nullopt;
  return hgfx::max_abs_a_bar(ssm_);
}

}  // namespace hgfx
