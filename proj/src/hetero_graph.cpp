#include "hgfx/hetero_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "hgfx/error.hpp"
#include "hgfx/kernels.hpp"

namespace hgfx {

namespace {

void check_nodes(const Tensor& centers, const Tensor& pool) {
  if (centers.rank() != 2 || pool.rank() != 2 || centers.dim(1) != pool.dim(1))
    throw DimensionError("adjacency: centers " + shape_str(centers.shape()) + " and pool " +
                         shape_str(pool.shape()) + " must share feature width");
}

void check_selection(std::size_t k, std::size_t dilation, std::size_t n) {
  if (k == 0 || dilation == 0) throw ConfigError("adjacency: k and dilation must be positive");
  if (k * dilation > n)
    throw ConfigError("adjacency: k*dilation = " + std::to_string(k * dilation) + " exceeds " + std::to_string(n) +
                      " candidate nodes");
}

// Rank candidates per row by key (smaller first, ties by index), then stride.
Adjacency select_ranked(const std::vector<double>& key, std::size_t n, std::size_t m, std::size_t k,
                        std::size_t dilation) {
  Adjacency adj;
  adj.k = k;
  adj.dilation = dilation;
  adj.centers = n;
  adj.idx.resize(n * k);
  std::vector<std::size_t> cand(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(cand.begin(), cand.end(), std::size_t{0});
    const double* row = key.data() + i * m;
    const std::size_t needed = (k - 1) * dilation + 1;
    std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(needed), cand.end(),
                      [row](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] < row[b] : a < b; });
    for (std::size_t r = 0; r < k; ++r) adj.idx[i * k + r] = cand[r * dilation];
  }
  return adj;
}

}  // namespace

std::size_t effective_dilation(std::size_t k, std::size_t dilation, std::size_t n) {
  return k * dilation <= n ? dilation : 1;
}

std::vector<double> euclidean_distances(const Tensor& centers, const Tensor& pool) {
  check_nodes(centers, pool);
  const std::size_t n = centers.dim(0), m = pool.dim(0), d = centers.dim(1);
  std::vector<double> dist(n * m);
  kernels::parallel::pairwise_sqdist(centers.data().data(), pool.data().data(), dist.data(), n, m, d);
  for (auto& v : dist) v = std::sqrt(v);
  return dist;
}

Adjacency knn_adjacency(const Tensor& centers, const Tensor& pool, std::size_t k, std::size_t dilation) {
  check_nodes(centers, pool);
  check_selection(k, dilation, pool.dim(0));
  if (!all_finite(centers.data()) || !all_finite(pool.data())) throw NumericError("knn_adjacency: non-finite nodes");
  return select_ranked(euclidean_distances(centers, pool), centers.dim(0), pool.dim(0), k, dilation);
}

Adjacency adaptive_adjacency(const Tensor& h, const Tensor& centers, const Tensor& pool, std::size_t k,
                             std::size_t dilation) {
  check_nodes(centers, pool);
  check_selection(k, dilation, pool.dim(0));
  const std::size_t n = centers.dim(0), m = pool.dim(0);
  if (h.rank() != 2 || h.dim(0) != n || h.dim(1) != m)
    throw DimensionError("adaptive_adjacency: correlation " + shape_str(h.shape()) + " does not match " +
                         std::to_string(n) + "x" + std::to_string(m));
  if (!all_finite(h.data())) throw NumericError("adaptive_adjacency: non-finite correlation");
  std::vector<double> key = euclidean_distances(centers, pool);
  const auto hv = h.data();
  // descending H*(-dist) == ascending H*dist
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = hv[i] * key[i];
  return select_ranked(key, n, m, k, dilation);
}

HeteroGraph build_hetero_graph(const Tensor& visual, const Tensor& semantic, const Tensor& h, std::size_t k,
                               std::size_t dilation) {
  if (visual.shape() != semantic.shape())
    throw DimensionError("build_hetero_graph: visual " + shape_str(visual.shape()) + " and semantic " +
                         shape_str(semantic.shape()) + " differ");
  HeteroGraph g;
  g.visual = visual;
  g.semantic = semantic;
  g.h = h;
  g.adj = h.defined() ? adaptive_adjacency(h, visual, semantic, k, dilation)
                      : knn_adjacency(visual, semantic, k, dilation);
  return g;
}

std::string adjacency_to_json(const Adjacency& adj) {
  nlohmann::json j;
  j["k"] = adj.k;
  j["dilation"] = adj.dilation;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < adj.centers; ++i) {
    const auto r = adj.row(i);
    rows.push_back(std::vector<std::size_t>(r.begin(), r.end()));
  }
  j["adj"] = std::move(rows);
  return j.dump();
}

Adjacency adjacency_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Adjacency adj;
    adj.k = j.at("k").get<std::size_t>();
    adj.dilation = j.at("dilation").get<std::size_t>();
    for (const auto& row : j.at("adj")) {
      const auto r = row.get<std::vector<std::size_t>>();
      if (r.size() != adj.k) throw DataError("adjacency JSON: row length differs from k");
      adj.idx.insert(adj.idx.end(), r.begin(), r.end());
      ++adj.centers;
    }
    return adj;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("adjacency JSON: ") + e.what());
  }
}

}  // namespace hgfx
