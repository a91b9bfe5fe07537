#include "hgfx/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hgfx/error.hpp"
#include "hgfx/kernels.hpp"

namespace hgfx::ops {

namespace {

Tensor make_out(Shape shape, std::vector<double> values, bool track) {
  return Tensor::from(std::move(shape), std::move(values), track);
}

void require_finite(const Tensor& x, const char* op) {
  if (!all_finite(x.data())) throw NumericError(std::string(op) + ": non-finite input");
}

// Size of the broadcast block when b is a's shape or a trailing suffix of it.
std::size_t suffix_block(const Tensor& a, const Tensor& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  bool ok = sb.size() <= sa.size();
  for (std::size_t i = 0; ok && i < sb.size(); ++i) ok = sb[sb.size() - 1 - i] == sa[sa.size() - 1 - i];
  if (!ok) throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(sb) + " onto " + shape_str(sa));
  return b.numel();
}

enum class Binary { kAdd, kSub, kMul };

Tensor binary(Tape& tape, const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  const std::size_t block = suffix_block(a, b, name);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i], y = bv[i % block];
    out[i] = kind == Binary::kAdd ? x + y : kind == Binary::kSub ? x - y : x * y;
  }
  const bool track = tape.tracks({&a, &b});
  Tensor result = make_out(a.shape(), std::move(out), track);
  if (track) {
    tape.record(result, {a, b}, [a, b, kind, block](Tape& t, std::span<const double> g) {
      if (auto ga = t.grad_buffer(a); !ga.empty()) {
        if (kind == Binary::kMul) {
          const auto bv = b.data();
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i % block];
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
      }
      if (auto gb = t.grad_buffer(b); !gb.empty()) {
        const auto av = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double d = kind == Binary::kAdd ? g[i] : kind == Binary::kSub ? -g[i] : g[i] * av[i];
          gb[i % block] += d;
        }
      }
    });
  }
  return result;
}

// Elementwise unary op given value and derivative-from-(input, output).
template <typename F, typename DF>
Tensor unary(Tape& tape, const Tensor& x, F f, DF df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const bool track = tape.tracks({&x});
  Tensor result = make_out(x.shape(), std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, result, df](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      const auto xv = x.data();
      const auto yv = result.data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
    });
  }
  return result;
}

struct MatmulLayout {
  std::size_t m, p, n;
  Shape out_shape;
  std::vector<std::size_t> a_off, b_off;  // per output batch: element offsets
};

MatmulLayout matmul_layout(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  auto fail = [&] { return DimensionError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb)); };
  if (sa.size() < 2 || sb.size() < 2) throw fail();
  MatmulLayout l;
  l.m = sa[sa.size() - 2];
  l.p = sa[sa.size() - 1];
  l.n = sb[sb.size() - 1];
  if (sb[sb.size() - 2] != l.p) throw fail();

  const std::size_t ra = sa.size() - 2, rb = sb.size() - 2;
  const std::size_t r = std::max(ra, rb);
  Shape ba(r, 1), bb(r, 1), bo(r, 1);
  for (std::size_t i = 0; i < ra; ++i) ba[r - ra + i] = sa[i];
  for (std::size_t i = 0; i < rb; ++i) bb[r - rb + i] = sb[i];
  for (std::size_t i = 0; i < r; ++i) {
    if (ba[i] != bb[i] && ba[i] != 1 && bb[i] != 1) throw fail();
    bo[i] = std::max(ba[i], bb[i]);
  }
  const std::size_t nbatch = shape_numel(bo);
  l.a_off.resize(nbatch);
  l.b_off.resize(nbatch);
  for (std::size_t flat = 0; flat < nbatch; ++flat) {
    std::size_t rem = flat, ia = 0, ib = 0, stride_a = 1, stride_b = 1;
    for (std::size_t ax = r; ax-- > 0;) {
      const std::size_t coord = rem % bo[ax];
      rem /= bo[ax];
      ia += (ba[ax] == 1 ? 0 : coord) * stride_a;
      ib += (bb[ax] == 1 ? 0 : coord) * stride_b;
      stride_a *= ba[ax];
      stride_b *= bb[ax];
    }
    l.a_off[flat] = ia * l.m * l.p;
    l.b_off[flat] = ib * l.p * l.n;
  }
  l.out_shape = bo;
  l.out_shape.push_back(l.m);
  l.out_shape.push_back(l.n);
  return l;
}

// outer x extent x inner decomposition around an axis
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
  Shape reduced;
};

AxisSplit split_axis(const Shape& s, int axis) {
  const int r = static_cast<int>(s.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisSplit sp;
  for (int i = 0; i < a; ++i) sp.outer *= s[static_cast<std::size_t>(i)];
  sp.extent = s[static_cast<std::size_t>(a)];
  for (int i = a + 1; i < r; ++i) sp.inner *= s[static_cast<std::size_t>(i)];
  for (int i = 0; i < r; ++i)
    if (i != a) sp.reduced.push_back(s[static_cast<std::size_t>(i)]);
  return sp;
}

Tensor reduce_axis(Tape& tape, const Tensor& x, int axis, double factor) {
  const AxisSplit sp = split_axis(x.shape(), axis);
  const auto xv = x.data();
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t e = 0; e < sp.extent; ++e)
      for (std::size_t i = 0; i < sp.inner; ++i) out[o * sp.inner + i] += xv[(o * sp.extent + e) * sp.inner + i];
  for (auto& v : out) v *= factor;
  const bool track = tape.tracks({&x});
  Tensor result = make_out(sp.reduced, std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, sp, factor](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < sp.extent; ++e)
          for (std::size_t i = 0; i < sp.inner; ++i) gx[(o * sp.extent + e) * sp.inner + i] += g[o * sp.inner + i] * factor;
    });
  }
  return result;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return binary(tape, a, b, Binary::kAdd, "add"); }
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return binary(tape, a, b, Binary::kSub, "sub"); }
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return binary(tape, a, b, Binary::kMul, "mul"); }

Tensor scale(Tape& tape, const Tensor& x, double c) {
  return unary(tape, x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor add_scalar(Tape& tape, const Tensor& x, double c) {
  return unary(tape, x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary(tape, x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor softplus(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu: slope must lie in (0,1)");
  require_finite(x, "leaky_relu");
  return unary(
      tape, x, [slope](double v) { return v >= 0 ? v : slope * v; },
      [slope](double v, double) { return v >= 0 ? 1.0 : slope; });
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  const MatmulLayout l = matmul_layout(a, b);
  std::vector<double> out(shape_numel(l.out_shape), 0.0);
  const double* av = a.data().data();
  const double* bv = b.data().data();
  for (std::size_t k = 0; k < l.a_off.size(); ++k)
    kernels::parallel::gemm_nn(av + l.a_off[k], bv + l.b_off[k], out.data() + k * l.m * l.n, l.m, l.p, l.n);
  const bool track = tape.tracks({&a, &b});
  Tensor result = make_out(l.out_shape, std::move(out), track);
  if (track) {
    tape.record(result, {a, b}, [a, b, l](Tape& t, std::span<const double> g) {
      auto ga = t.grad_buffer(a);
      auto gb = t.grad_buffer(b);
      for (std::size_t k = 0; k < l.a_off.size(); ++k) {
        const double* gk = g.data() + k * l.m * l.n;
        if (!ga.empty()) kernels::parallel::gemm_nt(gk, b.data().data() + l.b_off[k], ga.data() + l.a_off[k], l.m, l.n, l.p);
        if (!gb.empty()) kernels::parallel::gemm_tn(a.data().data() + l.a_off[k], gk, gb.data() + l.b_off[k], l.p, l.m, l.n);
      }
    });
  }
  return result;
}

Tensor transpose(Tape& tape, const Tensor& x) {
  if (x.rank() < 2) throw DimensionError("transpose: need rank >= 2, got " + shape_str(x.shape()));
  const std::size_t r = x.dim(-2), c = x.dim(-1);
  const std::size_t batch = x.numel() / (r * c);
  Shape shape = x.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = xv[b * r * c + i * c + j];
  const bool track = tape.tracks({&x});
  Tensor result = make_out(std::move(shape), std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, r, c, batch](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gx[b * r * c + i * c + j] += g[b * r * c + j * r + i];
    });
  }
  return result;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  const bool track = tape.tracks({&x});
  Tensor result = make_out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), track);
  if (track) {
    tape.record(result, {x}, [x](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return result;
}

Tensor softmax_lastdim(Tape& tape, const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("softmax_lastdim: scalar input");
  require_finite(x, "softmax_lastdim");
  const std::size_t c = x.dim(-1);
  const std::size_t rows = x.numel() / c;
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * c;
    double* yr = out.data() + r * c;
    const double mx = *std::max_element(xr, xr + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < c; ++j) yr[j] /= s;
  }
  const bool track = tape.tracks({&x});
  Tensor result = make_out(x.shape(), std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, result, c, rows](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      const auto yv = result.data();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * yv[r * c + j];
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += yv[r * c + j] * (g[r * c + j] - dot);
      }
    });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const bool track = tape.tracks({&x});
  Tensor result = make_out({}, {s}, track);
  if (track) {
    tape.record(result, {x}, [x](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (auto& v : gx) v += g[0];
    });
  }
  return result;
}

Tensor sum_axis(Tape& tape, const Tensor& x, int axis) { return reduce_axis(tape, x, axis, 1.0); }

Tensor mean_axis(Tape& tape, const Tensor& x, int axis) {
  return reduce_axis(tape, x, axis, 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor concat_lastdim(Tape& tape, const Tensor& a, const Tensor& b) {
  Shape sa = a.shape(), sb = b.shape();
  if (sa.empty() || sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 1, sb.begin()))
    throw DimensionError("concat_lastdim: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
  const std::size_t ca = sa.back(), cb = sb.back(), rows = a.numel() / ca;
  std::vector<double> out(rows * (ca + cb));
  const auto av = a.data(), bv = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(bv.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  Shape so = sa;
  so.back() = ca + cb;
  const bool track = tape.tracks({&a, &b});
  Tensor result = make_out(std::move(so), std::move(out), track);
  if (track) {
    tape.record(result, {a, b}, [a, b, ca, cb, rows](Tape& t, std::span<const double> g) {
      auto ga = t.grad_buffer(a);
      auto gb = t.grad_buffer(b);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!ga.empty())
          for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
        if (!gb.empty())
          for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
      }
    });
  }
  return result;
}

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (w.rank() != 2 || x.rank() < 1 || x.dim(-1) != w.dim(0))
    throw DimensionError("affine: incompatible shapes " + shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const std::size_t in = w.dim(0), outw = w.dim(1), rows = x.numel() / in;
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != outw))
    throw DimensionError("affine: bias " + shape_str(bias.shape()) + " does not match weight " + shape_str(w.shape()));
  std::vector<double> out(rows * outw, 0.0);
  if (bias.defined()) {
    const auto bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), out.begin() + static_cast<long>(r * outw));
  }
  kernels::parallel::gemm_nn(x.data().data(), w.data().data(), out.data(), rows, in, outw);
  Shape so = x.shape();
  so.back() = outw;
  const bool track = tape.tracks({&x, &w, &bias});
  Tensor result = make_out(std::move(so), std::move(out), track);
  if (track) {
    std::vector<Tensor> inputs{x, w};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(result, std::move(inputs), [x, w, bias, rows, in, outw](Tape& t, std::span<const double> g) {
      if (auto gx = t.grad_buffer(x); !gx.empty())
        kernels::parallel::gemm_nt(g.data(), w.data().data(), gx.data(), rows, outw, in);
      if (auto gw = t.grad_buffer(w); !gw.empty())
        kernels::parallel::gemm_tn(x.data().data(), g.data(), gw.data(), in, rows, outw);
      if (bias.defined()) {
        if (auto gb = t.grad_buffer(bias); !gb.empty())
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < outw; ++j) gb[j] += g[r * outw + j];
      }
    });
  }
  return result;
}

Tensor dropout(Tape& tape, const Tensor& x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: rate must lie in [0,1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  const bool track = tape.tracks({&x});
  Tensor result = make_out(x.shape(), std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, mask = std::move(mask)](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return result;
}

Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index) {
  if (x.rank() != 2) throw DimensionError("gather_rows: need rank 2, got " + shape_str(x.shape()));
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  const std::size_t rows = x.dim(0), c = x.dim(1);
  for (auto i : index)
    if (i >= rows) throw DimensionError("gather_rows: index " + std::to_string(i) + " out of range");
  const auto xv = x.data();
  std::vector<double> out(index.size() * c);
  for (std::size_t r = 0; r < index.size(); ++r) std::copy_n(xv.data() + index[r] * c, c, out.data() + r * c);
  const bool track = tape.tracks({&x});
  Tensor result = make_out({index.size(), c}, std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, idx = std::vector<std::size_t>(index.begin(), index.end()), c](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < c; ++j) gx[idx[r] * c + j] += g[r * c + j];
    });
  }
  return result;
}

Tensor scatter_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index, std::size_t n_rows) {
  if (x.rank() != 2 || x.dim(0) != index.size())
    throw DimensionError("scatter_rows: index length does not match " + shape_str(x.shape()));
  const std::size_t c = x.dim(1);
  for (auto i : index)
    if (i >= n_rows) throw DimensionError("scatter_rows: index " + std::to_string(i) + " out of range");
  const auto xv = x.data();
  std::vector<double> out(n_rows * c, 0.0);
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t j = 0; j < c; ++j) out[index[r] * c + j] += xv[r * c + j];
  const bool track = tape.tracks({&x});
  Tensor result = make_out({n_rows, c}, std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, idx = std::vector<std::size_t>(index.begin(), index.end()), c](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += g[idx[r] * c + j];
    });
  }
  return result;
}

Tensor indexed_row_max(Tape& tape, const Tensor& x, std::span<const std::size_t> index, std::size_t k) {
  if (x.rank() != 2) throw DimensionError("indexed_row_max: need rank 2, got " + shape_str(x.shape()));
  if (k == 0 || index.size() % k != 0) throw DimensionError("indexed_row_max: index length not a multiple of k");
  const std::size_t rows = x.dim(0), c = x.dim(1), m = index.size() / k;
  for (auto i : index)
    if (i >= rows) throw DimensionError("indexed_row_max: index " + std::to_string(i) + " out of range");
  const auto xv = x.data();
  std::vector<double> out(m * c);
  std::vector<std::size_t> arg(m * c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = index[i * k];
      for (std::size_t q = 1; q < k; ++q) {
        const std::size_t cand = index[i * k + q];
        if (xv[cand * c + j] > xv[best * c + j]) best = cand;
      }
      arg[i * c + j] = best;
      out[i * c + j] = xv[best * c + j];
    }
  }
  const bool track = tape.tracks({&x});
  Tensor result = make_out({m, c}, std::move(out), track);
  if (track) {
    tape.record(result, {x}, [x, arg = std::move(arg), c](Tape& t, std::span<const double> g) {
      auto gx = t.grad_buffer(x);
      for (std::size_t e = 0; e < arg.size(); ++e) gx[arg[e] * c + e % c] += g[e];
    });
  }
  return result;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.dim(-1);
  if (gamma.numel() != d || beta.numel() != d)
    throw DimensionError("layer_norm: scale/shift " + shape_str(gamma.shape()) + " do not match " + shape_str(x.shape()));
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data(), gv = gamma.data(), bv = beta.data();
  std::vector<double> xhat(xv.size()), rstd(rows), out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mu) * rstd[r];
      out[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
    }
  }
  const bool track = tape.tracks({&x, &gamma, &beta});
  Tensor result = make_out(x.shape(), std::move(out), track);
  if (track) {
    tape.record(result, {x, gamma, beta},
                [x, gamma, beta, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, std::span<const double> g) {
                  auto gx = t.grad_buffer(x);
                  auto gg = t.grad_buffer(gamma);
                  auto gb = t.grad_buffer(beta);
                  const auto gv = gamma.data();
                  for (std::size_t r = 0; r < rows; ++r) {
                    double mean_g = 0.0, mean_gx = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double gh = g[r * d + j] * gv[j];
                      mean_g += gh;
                      mean_gx += gh * xhat[r * d + j];
                      if (!gg.empty()) gg[j] += g[r * d + j] * xhat[r * d + j];
                      if (!gb.empty()) gb[j] += g[r * d + j];
                    }
                    if (gx.empty()) continue;
                    mean_g /= static_cast<double>(d);
                    mean_gx /= static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j) {
                      const double gh = g[r * d + j] * gv[j];
                      gx[r * d + j] += rstd[r] * (gh - mean_g - xhat[r * d + j] * mean_gx);
                    }
                  }
                });
  }
  return result;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
  const std::size_t c = logits.numel();
  if (!(logits.rank() == 1 || (logits.rank() == 2 && logits.dim(0) == 1)))
    throw DimensionError("cross_entropy: expected one logits row, got " + shape_str(logits.shape()));
  if (label >= c) throw DataError("cross_entropy: label " + std::to_string(label) + " >= classes " + std::to_string(c));
  require_finite(logits, "cross_entropy");
  const auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  const bool track = tape.tracks({&logits});
  Tensor result = make_out({}, {lse - z[label]}, track);
  if (track) {
    tape.record(result, {logits}, [logits, label, lse](Tape& t, std::span<const double> g) {
      auto gz = t.grad_buffer(logits);
      const auto z = logits.data();
      for (std::size_t j = 0; j < z.size(); ++j) gz[j] += g[0] * (std::exp(z[j] - lse) - (j == label ? 1.0 : 0.0));
    });
  }
  return result;
}

}  // namespace hgfx::ops
