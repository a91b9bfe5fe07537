#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "hgfx/cross_modal.hpp"
#include "hgfx/dataset.hpp"
#include "hgfx/hetero_graph.hpp"
#include "hgfx/kernels.hpp"
#include "hgfx/model.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/ssm.hpp"
#include "hgfx/trainer.hpp"
#include "hgfx/verify.hpp"

namespace hgfx::verify {

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

Tensor randn_tensor(Shape shape, Rng& rng, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v), grad);
}

// Entries with magnitude in [0.1, 1] and random sign, away from kinks at zero.
Tensor signed_tensor(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return Tensor::from(std::move(shape), std::move(v), true);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng, bool fix_zero) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  if (fix_zero && n > 1)
    shuffle(p.begin() + 1, p.end(), rng);
  else
    shuffle(p.begin(), p.end(), rng);
  return p;
}

// Row i of x moves to row perm[i].
Tensor relabel_rows(const Tensor& x, std::span<const std::size_t> perm) {
  const std::size_t n = x.dim(0), d = x.numel() / n;
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(x.data().begin() + static_cast<long>(i * d), d, out.begin() + static_cast<long>(perm[i] * d));
  return Tensor::from(x.shape(), std::move(out));
}

bool distinct_weights(const SimilarityGraph& g) {
  std::set<double> seen;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j)
      if (!seen.insert(g.at(i, j)).second) return false;
  return true;
}

CheckResult below(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CheckResult mst_check(Rng& rng) {
  double mismatches = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 2 + rng.below(5);
    SimilarityGraph g;
    if (t % 2 == 0) {
      g = pairwise_similarity(randn_tensor({n, 1 + rng.below(4)}, rng));
    } else {
      g.n = n;
      g.weights.assign(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.weights[i * n + j] = g.weights[j * n + i] = rng.uniform(0.01, 5.0);
    }
    const auto tree = max_spanning_tree(g);
    if (!is_spanning_tree(n, tree) || tree_weight(g, tree) != exhaustive_max_spanning_weight(g)) mismatches += 1;
  }
  return below("spanning tree weight equals exhaustive enumeration (200 graphs, N<=6)", mismatches, 0.0,
               "mismatching graphs");
}

CheckResult zoh_check(Rng& rng) {
  double worst = 0.0;
  auto compare = [&](const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& delta,
                     std::size_t d, std::size_t s) {
    Tape tape(Tape::Mode::kInference);
    const auto disc = zoh_discretize(tape, Tensor::from({d, s}, a), Tensor::from({d, s}, b), Tensor::from({d}, delta));
    for (std::size_t i = 0; i < d * s; ++i) {
      const ZohReference ref = zoh_reference(a[i], delta[i / s], b[i]);
      const long double ea = std::fabs(disc.a_bar.at(i) - ref.a_bar) / std::fabs(ref.a_bar);
      const long double eb =
          ref.b_bar == 0.0L ? std::fabs(disc.b_bar.at(i)) : std::fabs(disc.b_bar.at(i) - ref.b_bar) / std::fabs(ref.b_bar);
      worst = std::max({worst, static_cast<double>(ea), static_cast<double>(eb)});
    }
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.below(4), s = 1 + rng.below(6);
    std::vector<double> a(d * s), b(d * s), delta(d);
    for (auto& v : a) v = -std::exp(rng.uniform(-4.0, 3.0));
    for (auto& v : b) v = rng.uniform(-2.0, 2.0);
    for (auto& v : delta) v = std::exp(rng.uniform(std::log(1e-4), std::log(2.0)));
    compare(a, b, delta, d, s);
  }
  // A -> 0 limit, across the series switch-over.
  const std::vector<double> tiny{0.0, -1e-15, -1e-12, -1e-9, -3e-7, -9.99e-7, -1.001e-6, -1e-5, -1e-3};
  for (double a0 : tiny) {
    for (double dt : {1e-3, 0.1, 0.9}) compare({a0}, {1.3}, {dt}, 1, 1);
  }
  return below("zero-order hold equals extended-precision closed form, incl. A->0", worst, 1e-12,
               "max relative error");
}

CheckResult recurrence_check(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + rng.below(32), d = 1 + rng.below(4), s = 1 + rng.below(5);
    const Tensor abar = rand_tensor({d, s}, rng, 0.05, 0.999, false);
    const Tensor bbar = rand_tensor({d, s}, rng, -1.0, 1.0, false);
    const Tensor c = rand_tensor({d, s}, rng, -1.0, 1.0, false);
    const Tensor x = randn_tensor({n, d}, rng);
    Tape tape(Tape::Mode::kInference);
    const Tensor y = ssm_recurrence(tape, {abar, bbar}, c, x);
    const auto ref = ssm_convolution_reference(x.data(), abar.data(), bbar.data(), c.data(), n, d, s);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const long double err = std::fabs(y.at(i) - ref[i]) / std::max(1.0L, std::fabs(ref[i]));
      worst = std::max(worst, static_cast<double>(err));
    }
  }
  return below("state-space recurrence equals unrolled convolution (length<=32)", worst, 1e-10,
               "max error relative to max(1,|y|)");
}

CheckResult adjacency_check(Rng& rng, bool adaptive) {
  double mismatches = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(9), m = 2 + rng.below(9), d = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(m);
    const std::size_t dil = 1 + rng.below(m / k);
    const Tensor centers = randn_tensor({n, d}, rng);
    const Tensor pool = randn_tensor({m, d}, rng);
    std::vector<double> keys = naive_distances(centers.data(), pool.data(), n, m, d);
    Adjacency adj;
    if (adaptive) {
      Tape tape(Tape::Mode::kInference);
      const Tensor h = ops::softmax_lastdim(tape, randn_tensor({n, m}, rng));
      for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = h.at(i) * keys[i];
      adj = adaptive_adjacency(h, centers, pool, k, dil);
    } else {
      adj = knn_adjacency(centers, pool, k, dil);
    }
    if (adj.idx != ranked_selection_reference(keys, n, m, k, dil)) mismatches += 1;
  }
  return below(std::string(adaptive ? "adaptive" : "knn") + " adjacency equals full-sort oracle (200 instances, N<=10)",
               mismatches, 0.0, "mismatching instances");
}

CheckResult kernel_check(Rng& rng) {
  double mismatches = 0.0;
  const std::size_t m = 48, p = 40, n = 56;
  const Tensor a = randn_tensor({m, p}, rng), b = randn_tensor({p, n}, rng), bt = randn_tensor({n, p}, rng),
               at = randn_tensor({p, m}, rng);
  auto run = [&](auto gemm, const Tensor& x, const Tensor& y) {
    std::vector<double> c(m * n, 0.5);
    gemm(x.data().data(), y.data().data(), c.data(), m, p, n);
    return c;
  };
  mismatches += run(kernels::serial::gemm_nn, a, b) != run(kernels::parallel::gemm_nn, a, b);
  mismatches += run(kernels::serial::gemm_nt, a, bt) != run(kernels::parallel::gemm_nt, a, bt);
  mismatches += run(kernels::serial::gemm_tn, at, b) != run(kernels::parallel::gemm_tn, at, b);
  {
    std::vector<double> s(m * n), q(m * n);
    kernels::serial::pairwise_sqdist(a.data().data(), bt.data().data(), s.data(), m, n, p);
    kernels::parallel::pairwise_sqdist(a.data().data(), bt.data().data(), q.data(), m, n, p);
    mismatches += s != q;
  }
  {
    const std::size_t len = 64, d = 32, st = 16;
    const Tensor x = randn_tensor({len, d}, rng), ab = rand_tensor({d, st}, rng, 0.1, 0.99, false),
                 bb = randn_tensor({d, st}, rng), c = randn_tensor({d, st}, rng), gy = randn_tensor({len, d}, rng);
    std::vector<double> h1(len * d * st), h2(len * d * st), y1(len * d), y2(len * d);
    kernels::serial::ssm_scan_forward(x.data().data(), ab.data().data(), bb.data().data(), c.data().data(), h1.data(),
                                      y1.data(), len, d, st);
    kernels::parallel::ssm_scan_forward(x.data().data(), ab.data().data(), bb.data().data(), c.data().data(),
                                        h2.data(), y2.data(), len, d, st);
    mismatches += (h1 != h2) || (y1 != y2);
    std::vector<double> g1(len * d), g2(len * d), ga1(d * st), ga2(d * st), gb1(d * st), gb2(d * st), gc1(d * st),
        gc2(d * st);
    kernels::serial::ssm_scan_backward(gy.data().data(), x.data().data(), ab.data().data(), bb.data().data(),
                                       c.data().data(), h1.data(), g1.data(), ga1.data(), gb1.data(), gc1.data(), len,
                                       d, st);
    kernels::parallel::ssm_scan_backward(gy.data().data(), x.data().data(), ab.data().data(), bb.data().data(),
                                         c.data().data(), h1.data(), g2.data(), ga2.data(), gb2.data(), gc2.data(),
                                         len, d, st);
    mismatches += (g1 != g2) || (ga1 != ga2) || (gb1 != gb2) || (gc1 != gc2);
  }
  return below("parallel kernels equal serial kernels bitwise", mismatches, 0.0, "mismatching kernels");
}

struct GradCase {
  std::string name;
  NamedTensors params;
  LossFn loss;
};

CheckResult run_grad_case(const GradCase& c, double step, double tol) {
  const auto errs = gradient_errors(c.loss, c.params, step);
  double worst = 0.0;
  std::string group;
  for (const auto& e : errs)
    if (e.rel_error >= worst) {
      worst = e.rel_error;
      group = e.name;
    }
  return below("gradient " + c.name, worst, tol, "worst group " + group);
}

ModelConfig tiny_config(const std::string& ablation) {
  ModelConfig cfg;
  cfg.image_size = 8;
  cfg.patch_size = 4;
  cfg.channels = 3;
  cfg.dim = 8;
  cfg.mapped_dim = 8;
  cfg.state_dim = 4;
  cfg.k = 2;
  cfg.dilation = 2;
  cfg.blocks = 2;
  cfg.classes = 2;
  cfg.ablation = ablation_from_name(ablation);
  return cfg;
}

}  // namespace

std::vector<CheckResult> oracle_checks(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 1));
  return {mst_check(rng),        zoh_check(rng),          recurrence_check(rng),
          adjacency_check(rng, false), adjacency_check(rng, true), kernel_check(rng)};
}

std::vector<CheckResult> primitive_gradient_checks(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 2));
  std::vector<GradCase> cases;
  const std::uint64_t proj = mix_seed(seed, 99);
  auto unary = [&](std::string name, Tensor x, std::function<Tensor(Tape&, const Tensor&)> f) {
    cases.push_back({std::move(name), {{"x", x}}, [x, f, proj](Tape& t) { return random_projection_loss(t, f(t, x), proj); }});
  };
  auto binary = [&](std::string name, Tensor a, Tensor b, std::function<Tensor(Tape&, const Tensor&, const Tensor&)> f) {
    cases.push_back(
        {std::move(name), {{"a", a}, {"b", b}}, [a, b, f, proj](Tape& t) { return random_projection_loss(t, f(t, a, b), proj); }});
  };

  binary("add", rand_tensor({3, 4}, rng), rand_tensor({3, 4}, rng), ops::add);
  binary("add broadcast", rand_tensor({2, 3, 4}, rng), rand_tensor({4}, rng), ops::add);
  binary("sub broadcast", rand_tensor({3, 4}, rng), rand_tensor({4}, rng), ops::sub);
  binary("mul broadcast", rand_tensor({2, 3, 4}, rng), rand_tensor({3, 4}, rng), ops::mul);
  unary("scale/add_scalar", rand_tensor({3, 4}, rng),
        [](Tape& t, const Tensor& x) { return ops::scale(t, ops::add_scalar(t, x, 0.3), -1.7); });
  unary("exp", rand_tensor({3, 4}, rng), ops::exp);
  unary("softplus", rand_tensor({3, 4}, rng, -3.0, 3.0), ops::softplus);
  unary("leaky_relu", signed_tensor({4, 5}, rng), [](Tape& t, const Tensor& x) { return ops::leaky_relu(t, x, 0.2); });
  binary("matmul", rand_tensor({3, 4}, rng), rand_tensor({4, 5}, rng), ops::matmul);
  binary("matmul batched broadcast", rand_tensor({2, 3, 4}, rng), rand_tensor({4, 2}, rng), ops::matmul);
  binary("matmul batched", rand_tensor({2, 3, 4}, rng), rand_tensor({2, 4, 5}, rng), ops::matmul);
  unary("transpose", rand_tensor({2, 3, 4}, rng), ops::transpose);
  unary("reshape", rand_tensor({3, 4}, rng), [](Tape& t, const Tensor& x) { return ops::reshape(t, x, {2, 6}); });
  unary("softmax", rand_tensor({3, 5}, rng, -2.0, 2.0), ops::softmax_lastdim);
  unary("sum_axis 0", rand_tensor({3, 4, 2}, rng), [](Tape& t, const Tensor& x) { return ops::sum_axis(t, x, 0); });
  unary("sum_axis 1", rand_tensor({3, 4, 2}, rng), [](Tape& t, const Tensor& x) { return ops::sum_axis(t, x, 1); });
  unary("mean_axis -1", rand_tensor({3, 4}, rng), [](Tape& t, const Tensor& x) { return ops::mean_axis(t, x, -1); });
  binary("concat", rand_tensor({3, 2}, rng), rand_tensor({3, 4}, rng), ops::concat_lastdim);
  {
    Tensor x = rand_tensor({3, 4}, rng), w = rand_tensor({4, 5}, rng), b = rand_tensor({5}, rng);
    cases.push_back({"affine", {{"x", x}, {"w", w}, {"b", b}},
                     [=](Tape& t) { return random_projection_loss(t, ops::affine(t, x, w, b), proj); }});
  }
  unary("dropout", rand_tensor({4, 6}, rng), [](Tape& t, const Tensor& x) {
    Rng r(17);
    return ops::dropout(t, x, 0.3, r, true);
  });
  unary("gather_rows", rand_tensor({3, 4}, rng), [](Tape& t, const Tensor& x) {
    const std::vector<std::size_t> idx{2, 0, 2, 1};
    return ops::gather_rows(t, x, idx);
  });
  unary("scatter_rows", rand_tensor({4, 3}, rng), [](Tape& t, const Tensor& x) {
    const std::vector<std::size_t> idx{1, 1, 0, 3};
    return ops::scatter_rows(t, x, idx, 5);
  });
  unary("indexed_row_max", rand_tensor({5, 3}, rng), [](Tape& t, const Tensor& x) {
    const std::vector<std::size_t> idx{0, 3, 4, 1, 2, 2};
    return ops::indexed_row_max(t, x, idx, 2);
  });
  {
    Tensor x = rand_tensor({3, 6}, rng, -2.0, 2.0), g = rand_tensor({6}, rng, 0.5, 1.5), b = rand_tensor({6}, rng);
    cases.push_back({"layer_norm", {{"x", x}, {"gamma", g}, {"beta", b}},
                     [=](Tape& t) { return random_projection_loss(t, ops::layer_norm(t, x, g, b), proj); }});
  }
  {
    Tensor logits = rand_tensor({1, 4}, rng, -2.0, 2.0);
    cases.push_back({"cross_entropy", {{"logits", logits}}, [=](Tape& t) { return ops::cross_entropy(t, logits, 2); }});
  }
  {
    Tensor a = rand_tensor({3, 4}, rng, -3.0, -0.2), b = rand_tensor({3, 4}, rng), dt = rand_tensor({3}, rng, 0.01, 0.5);
    cases.push_back({"zoh_discretize", {{"a", a}, {"b", b}, {"delta", dt}}, [=](Tape& t) {
                       const auto d = zoh_discretize(t, a, b, dt);
                       return ops::add(t, random_projection_loss(t, d.a_bar, proj), random_projection_loss(t, d.b_bar, proj + 1));
                     }});
    Tensor a0 = Tensor::from({2, 2}, {-1e-7, -4e-5, -2e-4, -3e-3}, true), b0 = rand_tensor({2, 2}, rng),
           d0 = Tensor::from({2}, {0.01, 0.2}, true);
    cases.push_back({"zoh_discretize near A=0", {{"a", a0}, {"b", b0}, {"delta", d0}}, [=](Tape& t) {
                       const auto d = zoh_discretize(t, a0, b0, d0);
                       return ops::add(t, random_projection_loss(t, d.a_bar, proj), random_projection_loss(t, d.b_bar, proj + 1));
                     }});
  }
  {
    Rng r(mix_seed(seed, 3));
    SSMParams p = init_ssm_params(3, 4, r);
    cases.push_back({"ssm parameterisation", {{"a_log", p.a_log}, {"delta_param", p.delta_param}}, [=](Tape& t) {
                       return ops::add(t, random_projection_loss(t, continuous_a(t, p), proj),
                                       random_projection_loss(t, step_size(t, p), proj + 1));
                     }});
  }
  {
    Tensor ab = rand_tensor({3, 4}, rng, 0.1, 0.95), bb = rand_tensor({3, 4}, rng), c = rand_tensor({3, 4}, rng),
           x = rand_tensor({7, 3}, rng);
    cases.push_back({"ssm_recurrence", {{"a_bar", ab}, {"b_bar", bb}, {"c", c}, {"seq", x}},
                     [=](Tape& t) { return random_projection_loss(t, ssm_recurrence(t, {ab, bb}, c, x), proj); }});
  }
  {
    Rng r(mix_seed(seed, 4));
    SSMParams p = init_ssm_params(3, 4, r);
    for (auto& v : p.delta_param.mutable_data()) v += 2.0;
    Tensor nodes = rand_tensor({6, 3}, rng);
    const std::vector<std::size_t> order{0, 4, 2, 5, 1, 3};
    cases.push_back({"encode_semantic",
                     {{"nodes", nodes}, {"a_log", p.a_log}, {"b", p.b}, {"c", p.c}, {"delta_param", p.delta_param}},
                     [=](Tape& t) { return random_projection_loss(t, encode_semantic(t, nodes, order, p), proj); }});
  }
  {
    Rng r(mix_seed(seed, 5));
    const ImageSample img = synth_image(0, 8, r);
    Tensor w = rand_tensor({48, 5}, rng), pos = rand_tensor({4, 5}, rng);
    cases.push_back({"patch_embed", {{"proj", w}, {"pos", pos}},
                     [=](Tape& t) { return random_projection_loss(t, patch_embed(t, img, 4, w, pos).features, proj); }});
  }
  {
    Rng r(mix_seed(seed, 6));
    const MappingParams mp = init_mapping_params(5, 4, r);
    Tensor v = rand_tensor({6, 5}, rng), s = rand_tensor({6, 5}, rng);
    const NamedTensors named{{"visual", v},
                             {"semantic", s},
                             {"conv_v", mp.conv_v},
                             {"conv_s", mp.conv_s},
                             {"shared_map", mp.shared_map},
                             {"mlp_v.w1", mp.mlp_v.w1},
                             {"mlp_v.b1", mp.mlp_v.b1},
                             {"mlp_v.w2", mp.mlp_v.w2},
                             {"mlp_v.b2", mp.mlp_v.b2},
                             {"mlp_s.w1", mp.mlp_s.w1},
                             {"mlp_s.b1", mp.mlp_s.b1},
                             {"mlp_s.w2", mp.mlp_s.w2},
                             {"mlp_s.b2", mp.mlp_s.b2}};
    cases.push_back({"correlation alpha", named, [=](Tape& t) {
                       return random_projection_loss(t, cross_modal_correlation(t, v, s, mp, 0.2).alpha, proj);
                     }});
    cases.push_back({"correlation H", named, [=](Tape& t) {
                       return random_projection_loss(t, cross_modal_correlation(t, v, s, mp, 0.2).h, proj);
                     }});
  }
  unary("hetero_correlation", signed_tensor({4, 5}, rng),
        [](Tape& t, const Tensor& a) { return hetero_correlation(t, a, 0.2); });
  {
    Tape setup(Tape::Mode::kInference);
    Tensor h = ops::softmax_lastdim(setup, rand_tensor({5, 5}, rng, -2.0, 2.0, false));
    h.set_requires_grad(true);
    const Tensor v = rand_tensor({5, 3}, rng, -1.0, 1.0, false);
    const Adjacency adj = knn_adjacency(v, v, 3, 1);
    cases.push_back({"neighbor_weights", {{"h", h}},
                     [=](Tape& t) { return random_projection_loss(t, neighbor_weights(t, h, adj), proj); }});
  }
  {
    Tape setup(Tape::Mode::kInference);
    Tensor h = ops::softmax_lastdim(setup, rand_tensor({6, 6}, rng, -2.0, 2.0, false));
    h.set_requires_grad(true);
    Tensor v = rand_tensor({6, 4}, rng), s = rand_tensor({6, 4}, rng);
    const HeteroGraph g = build_hetero_graph(v, s, h, 3, 2);
    cases.push_back({"aggregate with correlation", {{"visual", v}, {"semantic", s}, {"h", h}},
                     [=](Tape& t) { return random_projection_loss(t, aggregate(t, g), proj); }});
    Tensor v2 = rand_tensor({6, 4}, rng), s2 = rand_tensor({6, 4}, rng);
    const HeteroGraph g2 = build_hetero_graph(v2, s2, Tensor(), 2, 2);
    cases.push_back({"aggregate plain", {{"visual", v2}, {"semantic", s2}},
                     [=](Tape& t) { return random_projection_loss(t, aggregate(t, g2), proj); }});
  }

  std::vector<CheckResult> out;
  for (const auto& c : cases) out.push_back(run_grad_case(c, 1e-5, 1e-6));
  return out;
}

std::vector<CheckResult> model_gradient_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng img_rng(mix_seed(seed, 7));
  const ImageSample img = synth_image(1, 8, img_rng);
  for (const auto& name : ablation_names()) {
    const ModelConfig cfg = tiny_config(name);
    const Model model(cfg, mix_seed(seed, 8));
    GradCase c{"end-to-end " + name + " (N=4, D=8, D'=8, S=4, l=2)", model.named_parameters(),
               [&model, &img](Tape& t) { return ops::cross_entropy(t, model.forward(t, img).logits, img.label); }};
    out.push_back(run_grad_case(c, 1e-6, 1e-3));
  }
  return out;
}

std::vector<CheckResult> normalization_checks(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 9));
  double alpha_dev = 0.0, h_dev = 0.0, nonpositive = 0.0, softmax_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(11), d = 2 + rng.below(7), dm = 2 + rng.below(7);
    const MappingParams mp = init_mapping_params(d, dm, rng);
    Tape tape(Tape::Mode::kInference);
    const auto res = cross_modal_correlation(tape, randn_tensor({n, d}, rng), randn_tensor({n, d}, rng), mp, 0.2);
    for (std::size_t i = 0; i < n; ++i) {
      double sa = 0.0, sh = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sa += res.alpha.at(i * n + j);
        sh += res.h.at(i * n + j);
        nonpositive += res.h.at(i * n + j) <= 0.0;
      }
      alpha_dev = std::max(alpha_dev, std::fabs(sa - 1.0));
      h_dev = std::max(h_dev, std::fabs(sh - 1.0));
    }
    // alpha is nonnegative, and so is a fresh random matrix.
    const Tensor extra = rand_tensor({n, n}, rng, 0.0, 3.0, false);
    for (const Tensor& alpha : {res.alpha, extra}) {
      const Tensor h = hetero_correlation(tape, alpha, 0.2);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ref = softmax_reference(alpha.data().subspan(i * n, n));
        for (std::size_t j = 0; j < n; ++j)
          softmax_err = std::max(softmax_err, static_cast<double>(std::fabs(h.at(i * n + j) - ref[j])));
      }
    }
  }
  return {below("alpha rows sum to one", alpha_dev, 1e-6, "max |row sum - 1|"),
          below("H rows sum to one", h_dev, 1e-6, "max |row sum - 1|"),
          below("H strictly positive", nonpositive, 0.0, "nonpositive entries"),
          below("H on nonnegative alpha equals row softmax of alpha", softmax_err, 1e-12, "max abs difference")};
}

std::vector<CheckResult> equivariance_checks(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 10));
  double order_fail = 0.0, edge_fail = 0.0, knn_fail = 0.0, adaptive_fail = 0.0, repeat_fail = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng.below(14), d = 2 + rng.below(5);
    Tensor x = randn_tensor({n, d}, rng);
    while (!distinct_weights(pairwise_similarity(x))) x = randn_tensor({n, d}, rng);
    const ScanPlan plan = plan_scan(x);
    repeat_fail += plan_scan(x).order != plan.order;

    // Root-preserving relabeling: order follows the labels.
    const auto pi = random_permutation(n, rng, true);
    const ScanPlan moved = plan_scan(relabel_rows(x, pi));
    for (std::size_t j = 0; j < n; ++j)
      if (moved.order[j] != pi[plan.order[j]]) {
        order_fail += 1;
        break;
      }
    // Any relabeling: the tree edge set follows the labels.
    const auto sigma = random_permutation(n, rng, false);
    std::vector<Edge> expect;
    for (const auto& [a, b] : plan.tree_edges)
      expect.emplace_back(std::min(sigma[a], sigma[b]), std::max(sigma[a], sigma[b]));
    std::sort(expect.begin(), expect.end());
    auto got = max_spanning_tree(pairwise_similarity(relabel_rows(x, sigma)));
    std::sort(got.begin(), got.end());
    edge_fail += got != expect;

    // Neighbour sets follow a joint relabeling of centers and pool.
    const std::size_t k = 1 + rng.below(n - 1);
    const Adjacency adj = knn_adjacency(x, x, k, 1);
    const Adjacency adj2 = knn_adjacency(relabel_rows(x, sigma), relabel_rows(x, sigma), k, 1);
    Tape tape(Tape::Mode::kInference);
    const Tensor h = ops::softmax_lastdim(tape, randn_tensor({n, n}, rng));
    std::vector<double> hp(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) hp[sigma[i] * n + sigma[j]] = h.at(i * n + j);
    const Adjacency ada = adaptive_adjacency(h, x, x, k, 1);
    const Adjacency ada2 = adaptive_adjacency(Tensor::from({n, n}, hp), relabel_rows(x, sigma), relabel_rows(x, sigma), k, 1);
    bool kf = false, af = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < k; ++r) {
        kf = kf || adj2.row(sigma[i])[r] != sigma[adj.row(i)[r]];
        af = af || ada2.row(sigma[i])[r] != sigma[ada.row(i)[r]];
      }
    knn_fail += kf;
    adaptive_fail += af;
  }
  return {below("scan plan is deterministic", repeat_fail, 0.0, "differing repeats"),
          below("scan order is equivariant under root-preserving relabeling", order_fail, 0.0, "failing instances"),
          below("spanning tree edges are equivariant under relabeling", edge_fail, 0.0, "failing instances"),
          below("knn adjacency is equivariant under relabeling", knn_fail, 0.0, "failing instances"),
          below("adaptive adjacency is equivariant under relabeling", adaptive_fail, 0.0, "failing instances")};
}

std::vector<CheckResult> determinism_checks(std::uint64_t seed) {
  const Dataset data = synth_dataset(4, 8, mix_seed(seed, 11));
  ModelConfig cfg = tiny_config("full");
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.seed = seed;
  tc.optim.base_lr = 1e-3;
  const int saved = omp_get_max_threads();
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    Model m(cfg, seed);
    auto hist = train(m, data, data, tc);
    std::vector<double> flat;
    for (const auto& r : hist) flat.insert(flat.end(), {r.train_loss, r.train_acc, r.val_acc, r.lr});
    for (const auto& [_, p] : m.named_parameters()) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(3);
  omp_set_num_threads(saved);
  return {below("fixed-seed training repeats exactly", a != b, 0.0, "histories differ"),
          below("fixed-seed training is independent of the thread count", a != c, 0.0, "histories differ")};
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> all;
  for (auto suite : {oracle_checks, primitive_gradient_checks, model_gradient_checks, normalization_checks,
                     equivariance_checks, determinism_checks}) {
    auto part = suite(seed);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::string format_result(const CheckResult& r) {
  std::string s = r.pass ? "[PASS] " : "[FAIL] ";
  s += r.name + ": " + fmt("%.3g", r.value) + " (limit " + fmt("%.3g", r.tolerance) + ")";
  if (!r.detail.empty()) s += " " + r.detail;
  return s;
}

}  // namespace hgfx::verify
