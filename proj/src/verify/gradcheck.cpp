#include <algorithm>
#include <cmath>

#include "hgfx/error.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/rng.hpp"
#include "hgfx/verify.hpp"

namespace hgfx::verify {

Tensor random_projection_loss(Tape& tape, const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(out.numel());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return ops::sum(tape, ops::mul(tape, out, Tensor::from(out.shape(), std::move(w))));
}

std::vector<GroupError> gradient_errors(const LossFn& loss, const NamedTensors& params, double step) {
  Tape tape;
  const Tensor l = loss(tape);
  tape.backward(l, GradSink::kTapeOnly);
  std::vector<GroupError> out;
  for (const auto& [name, p] : params) {
    if (!p.requires_grad()) throw ContractError("gradient_errors: '" + name + "' does not require a gradient");
    const auto* g = tape.grad(p);
    std::vector<double> analytic = g ? *g : std::vector<double>(p.numel(), 0.0);
    Tensor q = p;
    auto v = q.mutable_data();
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + step;
      Tape up(Tape::Mode::kInference);
      const double f_up = loss(up).item();
      v[i] = orig - step;
      Tape down(Tape::Mode::kInference);
      const double f_down = loss(down).item();
      v[i] = orig;
      const double numeric = (f_up - f_down) / (2.0 * step);
      diff += (analytic[i] - numeric) * (analytic[i] - numeric);
      na += analytic[i] * analytic[i];
      nn += numeric * numeric;
    }
    const double scale = std::max(std::sqrt(std::max(na, nn)), kGradientFloor);
    out.push_back({name, std::sqrt(diff) / scale});
  }
  return out;
}

}  // namespace hgfx::verify
