#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hgfx/rng.hpp"
#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

// Differentiable primitives. Each records itself on the tape when any input
// requires a gradient and the tape is recording.
namespace hgfx::ops {

// Elementwise. b must have a's shape or equal a trailing suffix of it, in which
// case it is broadcast over the leading axes.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& x, double c);
Tensor add_scalar(Tape& tape, const Tensor& x, double c);
Tensor exp(Tape& tape, const Tensor& x);
Tensor softplus(Tape& tape, const Tensor& x);
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = 0.2);

// Matrix product over the last two axes; leading axes broadcast from 1.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(Tape& tape, const Tensor& x);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Numerically stabilised softmax over the last axis.
Tensor softmax_lastdim(Tape& tape, const Tensor& x);

Tensor sum(Tape& tape, const Tensor& x);
// Reductions drop the reduced axis.
Tensor sum_axis(Tape& tape, const Tensor& x, int axis);
Tensor mean_axis(Tape& tape, const Tensor& x, int axis);

Tensor concat_lastdim(Tape& tape, const Tensor& a, const Tensor& b);

// x[n,in] * w[in,out] + bias[out]; bias may be undefined.
Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias);

// Inverted dropout: kept entries scaled by 1/(1-p) in training, identity otherwise.
Tensor dropout(Tape& tape, const Tensor& x, double p, Rng& rng, bool training);

// Row gather out[i] = x[index[i]] over the first axis of a rank-2 tensor.
Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index);
// Scatter-add out[index[i]] += x[i] into n_rows zero rows.
Tensor scatter_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index, std::size_t n_rows);

// out[i,c] = max over j in index[i*k .. i*k+k) of x[j,c]. Ties resolve to the
// earliest listed row, which alone receives the gradient.
Tensor indexed_row_max(Tape& tape, const Tensor& x, std::span<const std::size_t> index, std::size_t k);

// Standardise each row over the last axis, then apply gamma/beta.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Softmax cross-entropy of a single logits row (shape [C] or [1,C]) against label.
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

}  // namespace hgfx::ops
