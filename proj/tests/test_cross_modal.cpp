#include "doctest.h"

#include <cmath>

#include "hgfx/cross_modal.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/verify.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;
using hgfx::testing::values;

namespace {

Tape inference(Tape::Mode::kInference);

Tensor eye(std::size_t n) {
  Tensor t = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
  return t;
}

MappingParams zero_params(std::size_t d, std::size_t dm) {
  return {Tensor::zeros({d, d}), Tensor::zeros({d, d}), Tensor::zeros({d, dm}),
          Mlp{Tensor::zeros({d, dm}), Tensor::zeros({dm}), Tensor::zeros({dm, dm}), Tensor::zeros({dm})},
          Mlp{Tensor::zeros({d, dm}), Tensor::zeros({dm}), Tensor::zeros({dm, dm}), Tensor::zeros({dm})}};
}

}  // namespace

TEST_CASE("flexible map examples") {
  Rng rng(1);
  MappingParams p = init_mapping_params(4, 4, rng);
  const auto zero = flexible_map(inference, Tensor::zeros({3, 4}), Tensor::zeros({3, 4}), p);
  for (double v : zero.visual.data()) CHECK(v == 0.0);
  for (double v : zero.semantic.data()) CHECK(v == 0.0);

  p.shared_map = eye(4);
  const Tensor v = random_tensor({3, 4}, rng), s = random_tensor({3, 4}, rng);
  const auto mapped = flexible_map(inference, v, s, p);
  CHECK(values(mapped.visual) == values(ops::matmul(inference, v, p.conv_v)));
  CHECK(values(mapped.semantic) == values(ops::matmul(inference, s, p.conv_s)));
}

TEST_CASE("zero context weights give zero context") {
  Rng rng(2);
  const auto ctx = context_encode(inference, random_tensor({3, 4}, rng), random_tensor({3, 4}, rng), zero_params(4, 5), 0.2);
  CHECK(ctx.visual.shape() == Shape{3, 5});
  for (double v : ctx.visual.data()) CHECK(v == 0.0);
  for (double v : ctx.semantic.data()) CHECK(v == 0.0);
}

TEST_CASE("identical queries and keys give uniform rows") {
  const Tensor q = Tensor::from({3, 2}, {1, 2, 1, 2, 1, 2});
  const Tensor zero = Tensor::zeros({3, 2});
  const Tensor alpha = correlation(inference, {q, q}, {zero, zero}, 2.0);
  for (double v : alpha.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("two-node correlation by hand") {
  const Tensor q = Tensor::from({2, 2}, {1.0, 0.0, 0.5, -1.0});
  const Tensor k = Tensor::from({2, 2}, {0.2, 0.4, -1.0, 1.5});
  const Tensor zero = Tensor::zeros({2, 2});
  const Tensor alpha = correlation(inference, {q, k}, {zero, zero}, 2.0);
  // scores / sqrt(2): row 0 = [0.2, -1.0], row 1 = [0.1 - 0.4, -0.5 - 1.5]
  const double r = std::sqrt(2.0);
  const double s[2][2] = {{0.2 / r, -1.0 / r}, {-0.3 / r, -2.0 / r}};
  for (int i = 0; i < 2; ++i) {
    const double z = std::exp(s[i][0]) + std::exp(s[i][1]);
    CHECK(std::fabs(alpha.at(i * 2) - std::exp(s[i][0]) / z) <= 1e-10);
    CHECK(std::fabs(alpha.at(i * 2 + 1) - std::exp(s[i][1]) / z) <= 1e-10);
  }
}

TEST_CASE("hetero correlation examples") {
  const Tensor h = hetero_correlation(inference, Tensor::from({1, 2}, {0.8, 0.2}), 0.2);
  CHECK(h.at(0) == doctest::Approx(0.6457).epsilon(1e-4));
  CHECK(h.at(1) == doctest::Approx(0.3543).epsilon(1e-4));
  CHECK(h.at(0) == doctest::Approx(std::exp(0.8) / (std::exp(0.8) + std::exp(0.2))).epsilon(1e-14));
  const Tensor u = hetero_correlation(inference, Tensor::full({2, 4}, 0.25), 0.2);
  for (double v : u.data()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("alpha and H are row-stochastic and H is softmax of alpha") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(10), d = 1 + rng.below(8), dm = 1 + rng.below(8);
    const MappingParams p = init_mapping_params(d, dm, rng);
    const auto r = cross_modal_correlation(inference, random_tensor({n, d}, rng, -2, 2), random_tensor({n, d}, rng, -2, 2), p, 0.2);
    CHECK(r.d_a == static_cast<double>(dm));
    for (std::size_t i = 0; i < n; ++i) {
      double sa = 0.0, sh = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sa += r.alpha.at(i * n + j);
        sh += r.h.at(i * n + j);
        CHECK(r.h.at(i * n + j) > 0.0);
      }
      CHECK(std::fabs(sa - 1.0) <= 1e-6);
      CHECK(std::fabs(sh - 1.0) <= 1e-6);
      const auto ref = verify::softmax_reference(r.alpha.data().subspan(i * n, n));
      for (std::size_t j = 0; j < n; ++j) CHECK(std::fabs(r.h.at(i * n + j) - static_cast<double>(ref[j])) <= 1e-12);
    }
  }
}

TEST_CASE("correlation chain gradients match finite differences") {
  Rng rng(4);
  const MappingParams p = init_mapping_params(5, 6, rng);
  const Tensor v = random_tensor({6, 5}, rng, -1, 1, true), s = random_tensor({6, 5}, rng, -1, 1, true);
  const NamedTensors named{{"visual", v},        {"semantic", s},       {"conv_v", p.conv_v},
                           {"conv_s", p.conv_s}, {"shared", p.shared_map}, {"mlp_v.w1", p.mlp_v.w1},
                           {"mlp_s.w2", p.mlp_s.w2}};
  const auto errs = verify::gradient_errors(
      [&](Tape& t) { return verify::random_projection_loss(t, cross_modal_correlation(t, v, s, p, 0.2).h, 3); }, named,
      1e-5);
  for (const auto& e : errs) {
    INFO(e.name);
    CHECK(e.rel_error <= 1e-4);
  }
}
