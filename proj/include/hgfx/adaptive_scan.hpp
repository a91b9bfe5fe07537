#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

inline constexpr double kDefaultDistanceFloor = 1e-8;

// Symmetric matrix of reciprocal Euclidean distances between nodes.
// The diagonal is not used and holds zero.
struct SimilarityGraph {
  std::size_t n = 0;
  std::vector<double> weights;  // n*n, row-major

  double at(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
};

// Undirected tree edge stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

struct ScanPlan {
  std::vector<Edge> tree_edges;
  std::vector<std::size_t> order;  // order[j] = node visited at step j
};

// s_ij = 1 / max(d_ij, eps) over the rows of nodes [N,D].
SimilarityGraph pairwise_similarity(const Tensor& nodes, double eps = kDefaultDistanceFloor);

// Prim's algorithm for the maximum-weight spanning tree, started from node 0.
// Among equal-weight cut edges the lexicographically smallest (min,max) pair wins.
std::vector<Edge> max_spanning_tree(const SimilarityGraph& g);

// Depth-first preorder of the tree rooted at node 0; children are visited by
// descending edge weight, ties by ascending node index.
std::vector<std::size_t> scan_order(std::span<const Edge> tree, const SimilarityGraph& g);

// similarity -> tree -> order for one sample.
ScanPlan plan_scan(const Tensor& nodes, double eps = kDefaultDistanceFloor);

// Baseline orders kept for comparison.
std::vector<std::size_t> raster_order(std::size_t n);
// Visits window x window tiles in raster order, raster order inside each tile.
std::vector<std::size_t> local_window_order(std::size_t grid_rows, std::size_t grid_cols, std::size_t window);

void validate_permutation(std::span<const std::size_t> order, std::size_t n);
std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order);

// Rows of x in scan order, and back to spatial order.
Tensor apply_order(Tape& tape, const Tensor& x, std::span<const std::size_t> order);
Tensor invert_order(Tape& tape, const Tensor& x, std::span<const std::size_t> order);

double mean_consecutive_similarity(const SimilarityGraph& g, std::span<const std::size_t> order);

// {"order":[...],"tree_edges":[[i,j],...]}
std::string scan_plan_to_json(const ScanPlan& plan);
ScanPlan scan_plan_from_json(const std::string& text);

}  // namespace hgfx
