#include "doctest.h"

#include <cmath>
#include <numbers>

#include "hgfx/error.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/ssm.hpp"
#include "hgfx/verify.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;
using hgfx::testing::values;

namespace {

Tape inference(Tape::Mode::kInference);

}  // namespace

TEST_CASE("zero-order hold scalar example") {
  const auto d = zoh_discretize(inference, Tensor::from({1, 1}, {-1.0}), Tensor::from({1, 1}, {1.0}),
                                Tensor::from({1}, {std::numbers::ln2}));
  CHECK(d.a_bar.item() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.b_bar.item() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("zero-order hold limit at A = 0") {
  const auto d = zoh_discretize(inference, Tensor::from({1, 2}, {0.0, -1e-12}), Tensor::from({1, 2}, {2.0, 2.0}),
                                Tensor::from({1}, {0.3}));
  CHECK(d.a_bar.at(0) == 1.0);
  CHECK(d.b_bar.at(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(d.b_bar.at(1) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(zoh_discretize(inference, Tensor::from({1, 1}, {-1.0}), Tensor::from({1, 1}, {1.0}),
                                 Tensor::from({1}, {0.0})),
                  ContractError);
}

TEST_CASE("recurrence special cases") {
  const Tensor x = Tensor::from({3, 1}, {1.0, -2.0, 0.5});
  const Tensor c = Tensor::from({1, 1}, {3.0});
  SUBCASE("memoryless when a_bar = 0") {
    const Tensor y = ssm_recurrence(inference, {Tensor::from({1, 1}, {0.0}), Tensor::from({1, 1}, {0.25})}, c, x);
    for (std::size_t t = 0; t < 3; ++t) CHECK(y.at(t) == doctest::Approx(3.0 * 0.25 * x.at(t) + x.at(t)));
  }
  SUBCASE("single step") {
    const Tensor y = ssm_recurrence(inference, {Tensor::from({1, 1}, {0.9}), Tensor::from({1, 1}, {0.25})}, c,
                                    Tensor::from({1, 1}, {2.0}));
    CHECK(y.item() == doctest::Approx(3.0 * 0.25 * 2.0 + 2.0));
  }
}

TEST_CASE("recurrence equals the unrolled convolution") {
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng.below(32), d = 1 + rng.below(5), s = 1 + rng.below(6);
    const Tensor ab = random_tensor({d, s}, rng, 0.0, 0.99), bb = random_tensor({d, s}, rng),
                 c = random_tensor({d, s}, rng), x = random_tensor({n, d}, rng, -2.0, 2.0);
    const Tensor y = ssm_recurrence(inference, {ab, bb}, c, x);
    const auto ref = verify::ssm_convolution_reference(x.data(), ab.data(), bb.data(), c.data(), n, d, s);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(std::fabs(y.at(i) - ref[i]) <= 1e-10 * std::max(1.0L, std::fabs(ref[i])));
  }
}

TEST_CASE("initialisation is stable and within the step-size range") {
  Rng rng(9);
  const SSMParams p = init_ssm_params(16, 8, rng);
  const Tensor a = continuous_a(inference, p);
  for (std::size_t c = 0; c < 16; ++c)
    for (std::size_t q = 0; q < 8; ++q) CHECK(a.at(c * 8 + q) == doctest::Approx(-(static_cast<double>(q) + 1)));
  const Tensor steps = step_size(inference, p);
  for (double dt : steps.data()) {
    CHECK(dt >= 1e-3 * (1 - 1e-9));
    CHECK(dt <= 1e-1 * (1 + 1e-9));
  }
  const double m = max_abs_a_bar(p);
  CHECK(m < 1.0);
  CHECK(m > 0.0);
}

TEST_CASE("encode_semantic restores the spatial row order") {
  Rng rng(10);
  const SSMParams p = init_ssm_params(4, 3, rng);
  const Tensor nodes = random_tensor({5, 4}, rng);
  const std::vector<std::size_t> order{3, 0, 4, 1, 2};
  const Tensor y = encode_semantic(inference, nodes, order, p);
  // node order[0] is first in the scan: no history, so its row is C*b_bar*x + x
  const Tensor a = continuous_a(inference, p);
  const auto disc = zoh_discretize(inference, a, p.b, step_size(inference, p));
  const std::size_t first = order[0];
  for (std::size_t c = 0; c < 4; ++c) {
    double expect = nodes.at(first * 4 + c);
    for (std::size_t q = 0; q < 3; ++q)
      expect += p.c.at(c * 3 + q) * disc.b_bar.at(c * 3 + q) * nodes.at(first * 4 + c);
    CHECK(y.at(first * 4 + c) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("state-space gradients match finite differences") {
  Rng rng(12);
  SSMParams p = init_ssm_params(3, 4, rng);
  for (auto& v : p.delta_param.mutable_data()) v += 1.5;
  const Tensor nodes = random_tensor({8, 3}, rng, -1.0, 1.0, true);
  const std::vector<std::size_t> order{0, 5, 2, 7, 1, 3, 6, 4};
  const auto errs = verify::gradient_errors(
      [&](Tape& t) { return verify::random_projection_loss(t, encode_semantic(t, nodes, order, p), 5); },
      {{"a_log", p.a_log}, {"b", p.b}, {"c", p.c}, {"delta_param", p.delta_param}, {"nodes", nodes}}, 1e-5);
  for (const auto& e : errs) {
    INFO(e.name);
    CHECK(e.rel_error <= 1e-4);
  }
}
