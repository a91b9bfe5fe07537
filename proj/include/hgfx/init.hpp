#pragma once

#include <cmath>
#include <cstddef>

#include "hgfx/rng.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

// Trainable [in,out] matrix with Glorot-uniform entries.
inline Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> v(in * out);
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return Tensor::from({in, out}, std::move(v), true);
}

inline Tensor normal_init(Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace hgfx
