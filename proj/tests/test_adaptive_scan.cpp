#include "doctest.h"

#include <cmath>

#include "hgfx/adaptive_scan.hpp"
#include "hgfx/dataset.hpp"
#include "hgfx/error.hpp"
#include "hgfx/verify.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;
using hgfx::testing::values;

namespace {

SimilarityGraph weights(std::size_t n, std::initializer_list<std::tuple<std::size_t, std::size_t, double>> edges) {
  SimilarityGraph g{n, std::vector<double>(n * n, 0.0)};
  for (const auto& [a, b, w] : edges) g.weights[a * n + b] = g.weights[b * n + a] = w;
  return g;
}

}  // namespace

TEST_CASE("similarity is the reciprocal distance") {
  const SimilarityGraph g = pairwise_similarity(Tensor::from({2, 2}, {0, 0, 0, 2}));
  CHECK(g.at(0, 1) == 0.5);
  CHECK(g.at(1, 0) == 0.5);
  CHECK(g.at(0, 0) == 0.0);
  const SimilarityGraph dup = pairwise_similarity(Tensor::from({2, 1}, {1, 1}), 1e-8);
  CHECK(dup.at(0, 1) == doctest::Approx(1e8));
  CHECK(std::isfinite(dup.at(0, 1)));
  CHECK_THROWS_AS(pairwise_similarity(Tensor::from({2, 1}, {1, NAN})), NumericError);
}

TEST_CASE("spanning tree examples") {
  CHECK(max_spanning_tree(SimilarityGraph{1, {0.0}}).empty());
  CHECK_THROWS_AS(max_spanning_tree(SimilarityGraph{}), DataError);
  const SimilarityGraph tri = weights(3, {{0, 1, 3.0}, {0, 2, 2.0}, {1, 2, 1.0}});
  const auto tree = max_spanning_tree(tri);
  CHECK(tree == std::vector<Edge>{{0, 1}, {0, 2}});
  CHECK(verify::tree_weight(tri, tree) == 5.0);
}

TEST_CASE("equal weights resolve to the lexicographically smallest edge") {
  const SimilarityGraph g = weights(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
  CHECK(max_spanning_tree(g) == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
}

TEST_CASE("scan order examples") {
  const SimilarityGraph path = weights(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 0.1}});
  const std::vector<Edge> chain{{0, 1}, {1, 2}};
  CHECK(scan_order(chain, path) == std::vector<std::size_t>{0, 1, 2});
  const SimilarityGraph star = weights(3, {{0, 1, 1.0}, {0, 2, 5.0}, {1, 2, 0.5}});
  const std::vector<Edge> st{{0, 1}, {0, 2}};
  CHECK(scan_order(st, star) == std::vector<std::size_t>{0, 2, 1});
  const std::vector<Edge> broken{{0, 1}, {0, 1}};
  CHECK_THROWS_AS(scan_order(broken, star), StructureError);
  const std::vector<Edge> too_few{{0, 1}};
  CHECK_THROWS_AS(scan_order(too_few, star), StructureError);
}

TEST_CASE("spanning tree weight matches exhaustive enumeration") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const SimilarityGraph g = pairwise_similarity(random_tensor({n, 3}, rng));
    const auto tree = max_spanning_tree(g);
    CHECK(verify::is_spanning_tree(n, tree));
    CHECK(verify::tree_weight(g, tree) == verify::exhaustive_max_spanning_weight(g));
  }
}

TEST_CASE("apply and invert order") {
  const Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  Tape tape(Tape::Mode::kInference);
  const std::vector<std::size_t> id{0, 1, 2}, perm{2, 0, 1};
  CHECK(values(apply_order(tape, x, id)) == values(x));
  const Tensor moved = apply_order(tape, x, perm);
  CHECK(values(moved) == std::vector<double>{5, 6, 1, 2, 3, 4});
  CHECK(values(invert_order(tape, moved, perm)) == values(x));
  const std::vector<std::size_t> bad{0, 0, 1};
  CHECK_THROWS_AS(apply_order(tape, x, bad), StructureError);
  CHECK(inverse_permutation(perm) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("baseline orders") {
  CHECK(raster_order(4) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(local_window_order(4, 4, 2) ==
        std::vector<std::size_t>{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15});
}

TEST_CASE("scan plan JSON round trip") {
  Rng rng(4);
  const ScanPlan plan = plan_scan(random_tensor({9, 4}, rng));
  const ScanPlan back = scan_plan_from_json(scan_plan_to_json(plan));
  CHECK(back.order == plan.order);
  CHECK(back.tree_edges == plan.tree_edges);
  CHECK_THROWS_AS(scan_plan_from_json("{\"order\": 3}"), DataError);
}

TEST_CASE("adaptive order keeps consecutive patches more similar than raster order") {
  const Dataset images = synth_dataset(30, 32, 77);
  std::size_t wins = 0;
  double adaptive_total = 0.0, raster_total = 0.0;
  for (const auto& img : images.samples) {
    const Tensor nodes = flatten_patches(img, 8);
    const SimilarityGraph g = pairwise_similarity(nodes);
    const ScanPlan plan = plan_scan(nodes);
    const double a = mean_consecutive_similarity(g, plan.order);
    const double r = mean_consecutive_similarity(g, raster_order(nodes.dim(0)));
    adaptive_total += a;
    raster_total += r;
    wins += a >= r;
  }
  MESSAGE("adaptive >= raster on " << wins << " of " << images.size() << " images");
  CHECK(images.size() >= 50);
  CHECK(adaptive_total >= raster_total);
  CHECK(wins * 10 >= images.size() * 9);
}
