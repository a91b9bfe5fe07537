#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hgfx/tensor.hpp"

namespace hgfx {

// k neighbour indices (into the pool) for each center node.
struct Adjacency {
  std::size_t k = 0;
  std::size_t dilation = 1;
  std::size_t centers = 0;
  std::vector<std::size_t> idx;  // centers*k, row-major

  std::span<const std::size_t> row(std::size_t i) const { return {idx.data() + i * k, k}; }
  std::size_t edge_count() const { return idx.size(); }
  friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

// Dilation actually used for a pool of n nodes: the requested one when k*dilation
// fits, otherwise 1.
std::size_t effective_dilation(std::size_t k, std::size_t dilation, std::size_t n);

// Euclidean distances [N,M] between center rows and pool rows.
std::vector<double> euclidean_distances(const Tensor& centers, const Tensor& pool);

// For every center, pool nodes ranked by ascending distance (ties by index);
// ranks 0, d, 2d, ..., (k-1)d are kept.
Adjacency knn_adjacency(const Tensor& centers, const Tensor& pool, std::size_t k, std::size_t dilation);

// Same selection with pool nodes ranked by descending H_ij * (-dist_ij).
Adjacency adaptive_adjacency(const Tensor& h, const Tensor& centers, const Tensor& pool, std::size_t k,
                             std::size_t dilation);

struct HeteroGraph {
  Tensor visual;
  Tensor semantic;
  Tensor h;  // undefined when the plain distance graph is used
  Adjacency adj;
};

// Bundles nodes and correlation with the adaptive adjacency (or plain KNN when h
// is undefined).
HeteroGraph build_hetero_graph(const Tensor& visual, const Tensor& semantic, const Tensor& h, std::size_t k,
                               std::size_t dilation);

// {"k":..,"dilation":..,"adj":[[...],...]}
std::string adjacency_to_json(const Adjacency& adj);
Adjacency adjacency_from_json(const std::string& text);

}  // namespace hgfx
