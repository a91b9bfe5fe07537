#pragma once

#include <cstddef>
#include <utility>

#include "hgfx/rng.hpp"
#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

// Two-layer perceptron in -> hidden -> out with LeakyReLU between the layers.
struct Mlp {
  Tensor w1, b1, w2, b2;
};

// Visual/semantic alignment parameters. conv_v and conv_s are node-wise (1x1)
// projections D -> D; shared_map is the single D -> D' matrix applied after both.
struct MappingParams {
  Tensor conv_v;      // [D,D]
  Tensor conv_s;      // [D,D]
  Tensor shared_map;  // [D,D']
  Mlp mlp_v;          // D -> D' -> D'
  Mlp mlp_s;

  std::size_t mapped_dim() const { return shared_map.dim(1); }
};

MappingParams init_mapping_params(std::size_t dim, std::size_t mapped_dim, Rng& rng);

Tensor mlp_forward(Tape& tape, const Mlp& mlp, const Tensor& x, double slope);

struct MappedPair {
  Tensor visual;
  Tensor semantic;
};

// Q = conv_v(V_v) * W_G and K = conv_s(V_s) * W_G, each [N,D'].
MappedPair flexible_map(Tape& tape, const Tensor& visual, const Tensor& semantic, const MappingParams& p);

// C_v = MLP_v(V_v), C_s = MLP_s(V_s), each [N,D'].
MappedPair context_encode(Tape& tape, const Tensor& visual, const Tensor& semantic, const MappingParams& p,
                          double slope);

// alpha = softmax_j((Q + C_v)(K + C_s)^T / sqrt(d_a)), [N,N] row-stochastic.
Tensor correlation(Tape& tape, const MappedPair& mapped, const MappedPair& context, double d_a);

// H_ij = exp(LeakyReLU(alpha_ij)) / sum_k exp(LeakyReLU(alpha_ik)).
Tensor hetero_correlation(Tape& tape, const Tensor& alpha, double slope);

struct CorrelationResult {
  Tensor alpha;
  Tensor h;
  double d_a = 0.0;
};

// Full chain from node sets to the heterogeneous correlation matrix.
CorrelationResult cross_modal_correlation(Tape& tape, const Tensor& visual, const Tensor& semantic,
                                          const MappingParams& p, double slope);

}  // namespace hgfx
