#pragma once

#include <cstddef>
#include <span>

#include "hgfx/rng.hpp"
#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

// Diagonal state-space parameters, one S-dimensional state per feature channel.
//   A = -exp(a_log)            [D,S], strictly negative
//   delta = softplus(delta_param)  [D], strictly positive
struct SSMParams {
  Tensor a_log;
  Tensor b;
  Tensor c;
  Tensor delta_param;

  std::size_t channels() const { return a_log.dim(0); }
  std::size_t state_dim() const { return a_log.dim(1); }
};

struct DiscreteSSM {
  Tensor a_bar;  // [D,S]
  Tensor b_bar;  // [D,S]
};

// |z| below this switches B-bar to its power series around z = 0.
inline constexpr double kZohSeriesThreshold = 1e-6;

// Mamba-style initialisation: A = -(1..S) per channel, delta log-uniform in [1e-3, 1e-1].
SSMParams init_ssm_params(std::size_t channels, std::size_t state_dim, Rng& rng);

Tensor continuous_a(Tape& tape, const SSMParams& p);
Tensor step_size(Tape& tape, const SSMParams& p);

// Zero-order hold, elementwise with z = delta*A:
//   a_bar = exp(z),  b_bar = (exp(z) - 1) / z * delta * B
// a, b are [D,S]; delta is [D] and broadcast over the state axis.
DiscreteSSM zoh_discretize(Tape& tape, const Tensor& a, const Tensor& b, const Tensor& delta);

// h_t = a_bar h_{t-1} + b_bar x_t,  y_t = C h_t + x_t, with h_0 = 0.
// seq is [N,D] in scan order; returns [N,D].
Tensor ssm_recurrence(Tape& tape, const DiscreteSSM& d, const Tensor& c, const Tensor& seq);

// Reorders nodes along the scan, runs the discretised recurrence and restores
// the spatial row order, so row i of the result belongs to node i.
Tensor encode_semantic(Tape& tape, const Tensor& nodes, std::span<const std::size_t> order, const SSMParams& p);

// Largest |a_bar| under the current parameters.
double max_abs_a_bar(const SSMParams& p);

}  // namespace hgfx
