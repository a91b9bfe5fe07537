#include "doctest.h"

#include <algorithm>

#include "hgfx/error.hpp"
#include "hgfx/hetero_graph.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/verify.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;

namespace {

Tape inference(Tape::Mode::kInference);

}  // namespace

TEST_CASE("knn examples") {
  const Adjacency a = knn_adjacency(Tensor::from({1, 1}, {0}), Tensor::from({3, 1}, {3, 1, 2}), 1, 1);
  CHECK(a.idx == std::vector<std::size_t>{1});
  Rng rng(1);
  const Tensor v = random_tensor({5, 3}, rng), s = random_tensor({5, 3}, rng);
  const Adjacency full = knn_adjacency(v, s, 5, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<std::size_t> row(full.row(i).begin(), full.row(i).end());
    std::sort(row.begin(), row.end());
    CHECK(row == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }
  CHECK(full.edge_count() == 25);
  CHECK_THROWS_AS(knn_adjacency(v, s, 3, 2), ConfigError);
}

TEST_CASE("dilation keeps every d-th ranked neighbour") {
  const Adjacency a = knn_adjacency(Tensor::from({1, 1}, {0}), Tensor::from({6, 1}, {5, 0.5, 3, 1.5, 4, 2.5}), 3, 2);
  CHECK(a.idx == std::vector<std::size_t>{1, 5, 4});
  CHECK(effective_dilation(9, 4, 16) == 1);
  CHECK(effective_dilation(3, 4, 16) == 4);
}

TEST_CASE("adaptive adjacency examples") {
  // distances 2 and 1, correlation 0.9 and 0.1: scores -1.8 and -0.1
  const Adjacency a = adaptive_adjacency(Tensor::from({1, 2}, {0.9, 0.1}), Tensor::from({1, 1}, {0}),
                                         Tensor::from({2, 1}, {2, 1}), 2, 1);
  CHECK(a.idx == std::vector<std::size_t>{1, 0});
  Rng rng(2);
  const Tensor v = random_tensor({7, 3}, rng), s = random_tensor({7, 3}, rng);
  CHECK(adaptive_adjacency(Tensor::full({7, 7}, 1.0 / 7), v, s, 3, 2) == knn_adjacency(v, s, 3, 2));
}

TEST_CASE("scaling H leaves the adaptive adjacency unchanged") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Tensor v = random_tensor({8, 3}, rng), s = random_tensor({8, 3}, rng);
    const Tensor h = ops::softmax_lastdim(inference, random_tensor({8, 8}, rng, -2, 2));
    const Tensor h2 = ops::scale(inference, h, rng.uniform(0.1, 10.0));
    CHECK(adaptive_adjacency(h, v, s, 3, 2) == adaptive_adjacency(h2, v, s, 3, 2));
  }
}

TEST_CASE("adjacency rows equal the full-sort oracles") {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(10), d = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(n), dil = 1 + rng.below(n / k);
    const Tensor v = random_tensor({n, d}, rng), s = random_tensor({n, d}, rng);
    std::vector<double> dist = verify::naive_distances(v.data(), s.data(), n, n, d);
    CHECK(knn_adjacency(v, s, k, dil).idx == verify::ranked_selection_reference(dist, n, n, k, dil));
    const Tensor h = ops::softmax_lastdim(inference, random_tensor({n, n}, rng, -3, 3));
    for (std::size_t i = 0; i < dist.size(); ++i) dist[i] *= h.at(i);
    const Adjacency a = adaptive_adjacency(h, v, s, k, dil);
    CHECK(a.idx == verify::ranked_selection_reference(dist, n, n, k, dil));
    CHECK(a.edge_count() == n * k);
    CHECK(adaptive_adjacency(h, v, s, k, dil) == a);
  }
}

TEST_CASE("identical node sets put each node first in its own row") {
  Rng rng(5);
  const Tensor v = random_tensor({6, 4}, rng);
  const HeteroGraph g = build_hetero_graph(v, v, Tensor::full({6, 6}, 1.0 / 6), 3, 1);
  for (std::size_t i = 0; i < 6; ++i) CHECK(g.adj.row(i)[0] == i);
  const HeteroGraph plain = build_hetero_graph(v, v, Tensor(), 3, 1);
  CHECK(plain.adj == g.adj);
}

TEST_CASE("adjacency JSON round trip") {
  Rng rng(6);
  const Adjacency a = knn_adjacency(random_tensor({6, 2}, rng), random_tensor({6, 2}, rng), 2, 3);
  const Adjacency b = adjacency_from_json(adjacency_to_json(a));
  CHECK(b == a);
  CHECK_THROWS_AS(adjacency_from_json("{\"k\":2,\"dilation\":1,\"adj\":[[1]]}"), DataError);
}
