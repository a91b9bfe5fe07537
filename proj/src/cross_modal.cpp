#include "hgfx/cross_modal.hpp"

#include <cmath>

#include "hgfx/error.hpp"
#include "hgfx/init.hpp"
#include "hgfx/ops.hpp"

namespace hgfx {

namespace {

void check_pair(const Tensor& visual, const Tensor& semantic, std::size_t dim, const char* op) {
  if (visual.rank() != 2 || visual.shape() != semantic.shape() || visual.dim(1) != dim)
    throw DimensionError(std::string(op) + ": visual " + shape_str(visual.shape()) + " and semantic " +
                         shape_str(semantic.shape()) + " must both be [N," + std::to_string(dim) + "]");
}

Mlp init_mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  return Mlp{glorot_uniform(in, hidden, rng), Tensor::zeros({hidden}, true), glorot_uniform(hidden, out, rng),
             Tensor::zeros({out}, true)};
}

}  // namespace

MappingParams init_mapping_params(std::size_t dim, std::size_t mapped_dim, Rng& rng) {
  MappingParams p;
  p.conv_v = glorot_uniform(dim, dim, rng);
  p.conv_s = glorot_uniform(dim, dim, rng);
  p.shared_map = glorot_uniform(dim, mapped_dim, rng);
  p.mlp_v = init_mlp(dim, mapped_dim, mapped_dim, rng);
  p.mlp_s = init_mlp(dim, mapped_dim, mapped_dim, rng);
  return p;
}

Tensor mlp_forward(Tape& tape, const Mlp& mlp, const Tensor& x, double slope) {
  const Tensor hidden = ops::leaky_relu(tape, ops::affine(tape, x, mlp.w1, mlp.b1), slope);
  return ops::affine(tape, hidden, mlp.w2, mlp.b2);
}

MappedPair flexible_map(Tape& tape, const Tensor& visual, const Tensor& semantic, const MappingParams& p) {
  check_pair(visual, semantic, p.conv_v.dim(0), "flexible_map");
  return {ops::matmul(tape, ops::matmul(tape, visual, p.conv_v), p.shared_map),
          ops::matmul(tape, ops::matmul(tape, semantic, p.conv_s), p.shared_map)};
}

MappedPair context_encode(Tape& tape, const Tensor& visual, const Tensor& semantic, const MappingParams& p,
                          double slope) {
  check_pair(visual, semantic, p.mlp_v.w1.dim(0), "context_encode");
  return {mlp_forward(tape, p.mlp_v, visual, slope), mlp_forward(tape, p.mlp_s, semantic, slope)};
}

Tensor correlation(Tape& tape, const MappedPair& mapped, const MappedPair& context, double d_a) {
  if (!(d_a > 0.0)) throw ConfigError("correlation: scaling dimension must be positive");
  const Tensor q = ops::add(tape, mapped.visual, context.visual);
  const Tensor k = ops::add(tape, mapped.semantic, context.semantic);
  const Tensor scores = ops::scale(tape, ops::matmul(tape, q, ops::transpose(tape, k)), 1.0 / std::sqrt(d_a));
  if (!all_finite(scores.data())) throw NumericError("correlation: non-finite scores");
  return ops::softmax_lastdim(tape, scores);
}

Tensor hetero_correlation(Tape& tape, const Tensor& alpha, double slope) {
  return ops::softmax_lastdim(tape, ops::leaky_relu(tape, alpha, slope));
}

CorrelationResult cross_modal_correlation(Tape& tape, const Tensor& visual, const Tensor& semantic,
                                          const MappingParams& p, double slope) {
  const MappedPair mapped = flexible_map(tape, visual, semantic, p);
  const MappedPair context = context_encode(tape, visual, semantic, p, slope);
  CorrelationResult r;
  r.d_a = static_cast<double>(p.mapped_dim());
  r.alpha = correlation(tape, mapped, context, r.d_a);
  r.h = hetero_correlation(tape, r.alpha, slope);
  return r;
}

}  // namespace hgfx
