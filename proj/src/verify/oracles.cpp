#include <algorithm>
#include <cmath>
#include <numeric>

#include "hgfx/error.hpp"
#include "hgfx/verify.hpp"

namespace hgfx::verify {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

double tree_weight(const SimilarityGraph& g, std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  for (const auto& [a, b] : edges) total += g.at(a, b);
  return total;
}

bool is_spanning_tree(std::size_t n, std::span<const Edge> edges) {
  if (n == 0 || edges.size() != n - 1) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n || a == b) return false;
    const std::size_t ra = find_root(parent, a), rb = find_root(parent, b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

double exhaustive_max_spanning_weight(const SimilarityGraph& g) {
  const std::size_t n = g.n;
  if (n < 2) return 0.0;
  if (n > 7) throw ContractError("exhaustive_max_spanning_weight: n too large");
  std::vector<Edge> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
  const std::size_t e = all.size();
  double best = -1.0;
  bool found = false;
  std::vector<Edge> pick;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << e); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n - 1) continue;
    pick.clear();
    for (std::size_t b = 0; b < e; ++b)
      if (mask >> b & 1) pick.push_back(all[b]);
    if (!is_spanning_tree(n, pick)) continue;
    const double w = tree_weight(g, pick);
    if (!found || w > best) best = w;
    found = true;
  }
  return best;
}

ZohReference zoh_reference(long double a, long double delta, long double b) {
  const long double z = delta * a;
  const long double phi = z == 0.0L ? 1.0L : std::expm1(z) / z;
  return {std::exp(z), phi * delta * b};
}

std::vector<long double> ssm_convolution_reference(std::span<const double> x, std::span<const double> abar,
                                                   std::span<const double> bbar, std::span<const double> c,
                                                   std::size_t n, std::size_t d, std::size_t s) {
  std::vector<long double> y(n * d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t ch = 0; ch < d; ++ch) {
      long double acc = x[t * d + ch];
      for (std::size_t q = 0; q < s; ++q) {
        const std::size_t i = ch * s + q;
        long double conv = 0.0L;
        for (std::size_t tau = 0; tau <= t; ++tau)
          conv += std::pow(static_cast<long double>(abar[i]), static_cast<long double>(t - tau)) * bbar[i] *
                  x[tau * d + ch];
        acc += static_cast<long double>(c[i]) * conv;
      }
      y[t * d + ch] = acc;
    }
  }
  return y;
}

std::vector<std::size_t> ranked_selection_reference(std::span<const double> keys, std::size_t rows, std::size_t cols,
                                                    std::size_t k, std::size_t dilation) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::pair<double, std::size_t>> row;
    for (std::size_t j = 0; j < cols; ++j) row.emplace_back(keys[i * cols + j], j);
    std::sort(row.begin(), row.end());
    for (std::size_t r = 0; r < k; ++r) out.push_back(row[r * dilation].second);
  }
  return out;
}

std::vector<double> naive_distances(std::span<const double> a, std::span<const double> b, std::size_t n,
                                    std::size_t m, std::size_t d) {
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[i * d + c] - b[j * d + c];
        sq += diff * diff;
      }
      out[i * m + j] = std::sqrt(sq);
    }
  return out;
}

std::vector<long double> softmax_reference(std::span<const double> row) {
  std::vector<long double> out(row.size());
  long double total = 0.0L;
  for (std::size_t j = 0; j < row.size(); ++j) total += out[j] = std::exp(static_cast<long double>(row[j]));
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace hgfx::verify
