#include "hgfx/adaptive_scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "hgfx/error.hpp"
#include "hgfx/kernels.hpp"
#include "hgfx/ops.hpp"

namespace hgfx {

SimilarityGraph pairwise_similarity(const Tensor& nodes, double eps) {
  if (nodes.rank() != 2) throw DimensionError("pairwise_similarity: nodes must be [N,D], got " + shape_str(nodes.shape()));
  if (!(eps > 0.0)) throw ConfigError("pairwise_similarity: distance floor must be positive");
  if (!all_finite(nodes.data())) throw NumericError("pairwise_similarity: non-finite node features");
  const std::size_t n = nodes.dim(0), d = nodes.dim(1);
  SimilarityGraph g;
  g.n = n;
  g.weights.assign(n * n, 0.0);
  kernels::parallel::pairwise_sqdist(nodes.data().data(), nodes.data().data(), g.weights.data(), n, n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double& w = g.weights[i * n + j];
      w = i == j ? 0.0 : 1.0 / std::max(std::sqrt(w), eps);
    }
  }
  return g;
}

namespace {

// True when edge (w1, e1) should be preferred over (w2, e2).
bool better_edge(double w1, Edge e1, double w2, Edge e2) {
  if (w1 != w2) return w1 > w2;
  return e1 < e2;
}

Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

std::vector<Edge> max_spanning_tree(const SimilarityGraph& g) {
  const std::size_t n = g.n;
  if (n == 0) throw DataError("max_spanning_tree: empty graph");
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best_w(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_from(n, kNone);
  std::vector<Edge> edges;
  edges.reserve(n - 1);

  auto relax = [&](std::size_t u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = g.at(u, v);
      if (best_from[v] == kNone || better_edge(w, make_edge(u, v), best_w[v], make_edge(best_from[v], v))) {
        best_w[v] = w;
        best_from[v] = u;
      }
    }
  };

  in_tree[0] = true;
  relax(0);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = kNone;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      if (pick == kNone ||
          better_edge(best_w[v], make_edge(best_from[v], v), best_w[pick], make_edge(best_from[pick], pick)))
        pick = v;
    }
    in_tree[pick] = true;
    edges.push_back(make_edge(best_from[pick], pick));
    relax(pick);
  }
  return edges;
}

std::vector<std::size_t> scan_order(std::span<const Edge> tree, const SimilarityGraph& g) {
  const std::size_t n = g.n;
  if (n == 0) throw DataError("scan_order: empty graph");
  if (tree.size() != n - 1)
    throw StructureError("scan_order: " + std::to_string(tree.size()) + " edges cannot span " + std::to_string(n) +
                         " nodes");
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : tree) {
    if (a >= n || b >= n || a == b) throw StructureError("scan_order: invalid edge");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (std::size_t u = 0; u < n; ++u) {
    std::sort(adj[u].begin(), adj[u].end(), [&](std::size_t x, std::size_t y) {
      const double wx = g.at(u, x), wy = g.at(u, y);
      return wx != wy ? wx > wy : x < y;
    });
  }

  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<bool> seen(n, false);
  // explicit stack of (node, next child cursor) keeps deep trees off the call stack
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  seen[0] = true;
  order.push_back(0);
  while (!stack.empty()) {
    auto& [u, cursor] = stack.back();
    if (cursor == adj[u].size()) {
      stack.pop_back();
      continue;
    }
    const std::size_t v = adj[u][cursor++];
    if (seen[v]) continue;
    seen[v] = true;
    order.push_back(v);
    stack.emplace_back(v, 0);
  }
  if (order.size() != n) throw StructureError("scan_order: edge set is not connected");
  return order;
}

ScanPlan plan_scan(const Tensor& nodes, double eps) {
  const SimilarityGraph g = pairwise_similarity(nodes, eps);
  ScanPlan plan;
  plan.tree_edges = max_spanning_tree(g);
  plan.order = scan_order(plan.tree_edges, g);
  return plan;
}

std::vector<std::size_t> raster_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

std::vector<std::size_t> local_window_order(std::size_t grid_rows, std::size_t grid_cols, std::size_t window) {
  if (window == 0) throw ConfigError("local_window_order: window must be positive");
  std::vector<std::size_t> order;
  order.reserve(grid_rows * grid_cols);
  for (std::size_t tr = 0; tr < grid_rows; tr += window)
    for (std::size_t tc = 0; tc < grid_cols; tc += window)
      for (std::size_t r = tr; r < std::min(tr + window, grid_rows); ++r)
        for (std::size_t c = tc; c < std::min(tc + window, grid_cols); ++c) order.push_back(r * grid_cols + c);
  return order;
}

void validate_permutation(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n)
    throw StructureError("order has length " + std::to_string(order.size()) + ", expected " + std::to_string(n));
  std::vector<bool> seen(n, false);
  for (auto i : order) {
    if (i >= n || seen[i]) throw StructureError("order is not a permutation of 0.." + std::to_string(n - 1));
    seen[i] = true;
  }
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order) {
  validate_permutation(order, order.size());
  std::vector<std::size_t> inv(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) inv[order[j]] = j;
  return inv;
}

Tensor apply_order(Tape& tape, const Tensor& x, std::span<const std::size_t> order) {
  validate_permutation(order, x.dim(0));
  return ops::gather_rows(tape, x, order);
}

Tensor invert_order(Tape& tape, const Tensor& x, std::span<const std::size_t> order) {
  const auto inv = inverse_permutation(order);
  if (inv.size() != x.dim(0)) throw StructureError("invert_order: order length does not match rows");
  return ops::gather_rows(tape, x, inv);
}

double mean_consecutive_similarity(const SimilarityGraph& g, std::span<const std::size_t> order) {
  if (order.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 1; j < order.size(); ++j) s += g.at(order[j - 1], order[j]);
  return s / static_cast<double>(order.size() - 1);
}

std::string scan_plan_to_json(const ScanPlan& plan) {
  nlohmann::json j;
  j["order"] = plan.order;
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : plan.tree_edges) edges.push_back({a, b});
  j["tree_edges"] = std::move(edges);
  return j.dump();
}

ScanPlan scan_plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ScanPlan plan;
    plan.order = j.at("order").get<std::vector<std::size_t>>();
    for (const auto& e : j.at("tree_edges")) plan.tree_edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scan plan JSON: ") + e.what());
  }
}

}  // namespace hgfx
