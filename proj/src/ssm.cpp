#include "hgfx/ssm.hpp"

#include <cmath>

#include "hgfx/adaptive_scan.hpp"
#include "hgfx/error.hpp"
#include "hgfx/kernels.hpp"
#include "hgfx/ops.hpp"

namespace hgfx {

namespace {

// phi(z) = (e^z - 1) / z and its derivative.
double zoh_phi(double z) {
  if (std::abs(z) < kZohSeriesThreshold) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

double zoh_dphi(double z) {
  if (std::abs(z) < 1e-3) return 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0;
  return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

}  // namespace

SSMParams init_ssm_params(std::size_t channels, std::size_t state_dim, Rng& rng) {
  SSMParams p;
  std::vector<double> a_log(channels * state_dim), b(channels * state_dim), c(channels * state_dim), dp(channels);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t q = 0; q < state_dim; ++q) {
      a_log[ch * state_dim + q] = std::log(static_cast<double>(q + 1));
      b[ch * state_dim + q] = rng.normal() / std::sqrt(static_cast<double>(state_dim));
      c[ch * state_dim + q] = rng.normal() / std::sqrt(static_cast<double>(state_dim));
    }
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    dp[ch] = dt + std::log(-std::expm1(-dt));  // softplus^-1
  }
  p.a_log = Tensor::from({channels, state_dim}, std::move(a_log), true);
  p.b = Tensor::from({channels, state_dim}, std::move(b), true);
  p.c = Tensor::from({channels, state_dim}, std::move(c), true);
  p.delta_param = Tensor::from({channels}, std::move(dp), true);
  return p;
}

Tensor continuous_a(Tape& tape, const SSMParams& p) { return ops::scale(tape, ops::exp(tape, p.a_log), -1.0); }

Tensor step_size(Tape& tape, const SSMParams& p) { return ops::softplus(tape, p.delta_param); }

DiscreteSSM zoh_discretize(Tape& tape, const Tensor& a, const Tensor& b, const Tensor& delta) {
  if (a.rank() != 2 || b.shape() != a.shape() || delta.rank() != 1 || delta.dim(0) != a.dim(0))
    throw DimensionError("zoh_discretize: A " + shape_str(a.shape()) + ", B " + shape_str(b.shape()) + ", delta " +
                         shape_str(delta.shape()) + " are inconsistent");
  for (double dt : delta.data())
    if (!(dt > 0.0)) throw ContractError("zoh_discretize: step size must be positive");
  const std::size_t d = a.dim(0), s = a.dim(1);
  const auto av = a.data(), bv = b.data(), dv = delta.data();
  std::vector<double> abar(d * s), bbar(d * s), phi(d * s), dphi(d * s);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t q = 0; q < s; ++q) {
      const std::size_t i = c * s + q;
      const double z = dv[c] * av[i];
      abar[i] = std::exp(z);
      phi[i] = zoh_phi(z);
      dphi[i] = zoh_dphi(z);
      bbar[i] = phi[i] * dv[c] * bv[i];
    }
  }
  const bool track = tape.tracks({&a, &b, &delta});
  DiscreteSSM out{Tensor::from({d, s}, std::move(abar), track), Tensor::from({d, s}, std::move(bbar), track)};
  if (track) {
    tape.record(out.a_bar, {a, delta}, [a, delta, abar = out.a_bar, s](Tape& t, std::span<const double> g) {
      auto ga = t.grad_buffer(a);
      auto gd = t.grad_buffer(delta);
      const auto av = a.data(), dv = delta.data(), ab = abar.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t c = i / s;
        if (!ga.empty()) ga[i] += g[i] * dv[c] * ab[i];
        if (!gd.empty()) gd[c] += g[i] * av[i] * ab[i];
      }
    });
    tape.record(out.b_bar, {a, b, delta},
                [a, b, delta, phi = std::move(phi), dphi = std::move(dphi), s](Tape& t, std::span<const double> g) {
                  auto ga = t.grad_buffer(a);
                  auto gb = t.grad_buffer(b);
                  auto gd = t.grad_buffer(delta);
                  const auto av = a.data(), bv = b.data(), dv = delta.data();
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    const std::size_t c = i / s;
                    const double dt = dv[c];
                    // b_bar = phi(dt*a) * dt * b
                    if (!ga.empty()) ga[i] += g[i] * dphi[i] * dt * dt * bv[i];
                    if (!gb.empty()) gb[i] += g[i] * phi[i] * dt;
                    if (!gd.empty()) gd[c] += g[i] * (phi[i] * bv[i] + dphi[i] * av[i] * dt * bv[i]);
                  }
                });
  }
  return out;
}

Tensor ssm_recurrence(Tape& tape, const DiscreteSSM& disc, const Tensor& c, const Tensor& seq) {
  const Tensor& abar = disc.a_bar;
  const Tensor& bbar = disc.b_bar;
  if (seq.rank() != 2 || abar.rank() != 2 || bbar.shape() != abar.shape() || c.shape() != abar.shape() ||
      seq.dim(1) != abar.dim(0))
    throw DimensionError("ssm_recurrence: sequence " + shape_str(seq.shape()) + " does not match parameters " +
                         shape_str(abar.shape()));
  const std::size_t n = seq.dim(0), d = seq.dim(1), s = abar.dim(1);
  auto h = std::make_shared<std::vector<double>>(n * d * s);
  std::vector<double> y(n * d);
  kernels::parallel::ssm_scan_forward(seq.data().data(), abar.data().data(), bbar.data().data(), c.data().data(),
                                      h->data(), y.data(), n, d, s);
  const bool track = tape.tracks({&seq, &abar, &bbar, &c});
  Tensor out = Tensor::from({n, d}, std::move(y), track);
  if (track) {
    tape.record(out, {seq, abar, bbar, c}, [seq, abar, bbar, c, h, n, d, s](Tape& t, std::span<const double> g) {
      // The kernel writes every gradient; inputs that need none get scratch space.
      std::vector<double> scratch_x, scratch_a, scratch_b, scratch_c;
      auto buffer = [&t](const Tensor& x, std::vector<double>& scratch) -> double* {
        auto gb = t.grad_buffer(x);
        if (!gb.empty()) return gb.data();
        scratch.assign(x.numel(), 0.0);
        return scratch.data();
      };
      double* gx = buffer(seq, scratch_x);
      double* ga = buffer(abar, scratch_a);
      double* gbb = buffer(bbar, scratch_b);
      double* gc = buffer(c, scratch_c);
      kernels::parallel::ssm_scan_backward(g.data(), seq.data().data(), abar.data().data(), bbar.data().data(),
                                           c.data().data(), h->data(), gx, ga, gbb, gc, n, d, s);
    });
  }
  return out;
}

Tensor encode_semantic(Tape& tape, const Tensor& nodes, std::span<const std::size_t> order, const SSMParams& p) {
  if (nodes.rank() != 2 || nodes.dim(1) != p.channels())
    throw DimensionError("encode_semantic: nodes " + shape_str(nodes.shape()) + " do not match " +
                         std::to_string(p.channels()) + " SSM channels");
  const Tensor seq = apply_order(tape, nodes, order);
  const DiscreteSSM disc = zoh_discretize(tape, continuous_a(tape, p), p.b, step_size(tape, p));
  const Tensor y = ssm_recurrence(tape, disc, p.c, seq);
  return invert_order(tape, y, order);
}

double max_abs_a_bar(const SSMParams& p) {
  Tape tape(Tape::Mode::kInference);
  const DiscreteSSM disc = zoh_discretize(tape, continuous_a(tape, p), p.b, step_size(tape, p));
  double m = 0.0;
  for (double v : disc.a_bar.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace hgfx
