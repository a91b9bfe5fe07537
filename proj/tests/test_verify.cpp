#include "doctest.h"

#include "hgfx/error.hpp"
#include "hgfx/verify.hpp"

using namespace hgfx;
using namespace hgfx::verify;

namespace {

void require_all(const std::vector<CheckResult>& results) {
  REQUIRE(!results.empty());
  for (const auto& r : results) {
    INFO(format_result(r));
    CHECK(r.pass);
  }
}

}  // namespace

TEST_CASE("exhaustive spanning tree oracle on small graphs") {
  SimilarityGraph g;
  g.n = 3;
  g.weights = {0, 2, 3, 2, 0, 1, 3, 1, 0};
  CHECK(exhaustive_max_spanning_weight(g) == 5.0);
  CHECK(is_spanning_tree(3, std::vector<Edge>{{0, 1}, {0, 2}}));
  CHECK(!is_spanning_tree(3, std::vector<Edge>{{0, 1}, {1, 0}}));
  CHECK(!is_spanning_tree(3, std::vector<Edge>{{0, 1}}));
  g.n = 8;
  g.weights.assign(64, 1.0);
  CHECK_THROWS_AS(exhaustive_max_spanning_weight(g), ContractError);
}

TEST_CASE("reference helpers") {
  const auto z = zoh_reference(0.0L, 0.5L, 2.0L);
  CHECK(z.a_bar == 1.0L);
  CHECK(z.b_bar == 1.0L);
  const std::vector<double> keys{3, 1, 2, 0};
  CHECK(ranked_selection_reference(keys, 1, 4, 2, 2) == std::vector<std::size_t>{3, 2});
  const auto s = softmax_reference(std::vector<double>{0.0, 0.0});
  CHECK(s[0] == 0.5L);
}

TEST_CASE("oracle suite") { require_all(oracle_checks(11)); }
TEST_CASE("normalization suite") { require_all(normalization_checks(12)); }
TEST_CASE("equivariance suite") { require_all(equivariance_checks(13)); }
TEST_CASE("determinism suite") { require_all(determinism_checks(14)); }
