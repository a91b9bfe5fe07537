#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "hgfx/dataset.hpp"
#include "hgfx/error.hpp"
#include "hgfx/model.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/verify.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;
using hgfx::testing::values;

namespace {

Tape inference(Tape::Mode::kInference);

ModelConfig small_config(const std::string& ablation = "full") {
  ModelConfig cfg;
  cfg.image_size = 16;
  cfg.patch_size = 4;
  cfg.dim = 12;
  cfg.mapped_dim = 10;
  cfg.state_dim = 4;
  cfg.k = 3;
  cfg.dilation = 2;
  cfg.blocks = 2;
  cfg.ablation = ablation_from_name(ablation);
  return cfg;
}

ImageSample image(std::size_t label, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return synth_image(label, size, rng);
}

}  // namespace

TEST_CASE("default configuration") {
  const ModelConfig cfg;
  CHECK(cfg.k == 9);
  CHECK(cfg.dilation == 4);
  CHECK(cfg.blocks == 16);
  CHECK(cfg.dropout == 0.1);
  CHECK(cfg.nodes() == 16);
  CHECK(cfg.patch_values() == 192);
  ModelConfig bad = cfg;
  bad.image_size = 30;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.k = 17;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ablation names") {
  CHECK(ablation_names() == std::vector<std::string>{"base", "hg", "hg+scan", "scan+hgl", "full"});
  for (const auto& n : ablation_names()) CHECK(ablation_name(ablation_from_name(n)) == n);
  CHECK_THROWS_AS(ablation_from_name("everything"), ConfigError);
}

TEST_CASE("forward gives one logits row and is deterministic") {
  const Model model(small_config(), 3);
  const ImageSample img = image(0, 16, 1);
  const Tensor a = model.forward(inference, img).logits;
  const Tensor b = model.forward(inference, img).logits;
  CHECK(a.shape() == Shape{1, 2});
  CHECK(values(a) == values(b));
  ImageSample wrong = image(0, 32, 1);
  CHECK_THROWS_AS(model.forward(inference, wrong), DataError);
}

TEST_CASE("single class head has zero loss") {
  ModelConfig cfg = small_config();
  cfg.classes = 1;
  const Model model(cfg, 4);
  CHECK(ops::cross_entropy(inference, model.forward(inference, image(1, 16, 2)).logits, 0).item() == 0.0);
}

TEST_CASE("ablation switches change the structure") {
  const ImageSample img = image(1, 16, 5);
  ForwardOptions opts;
  opts.keep_trace = true;
  for (const auto& name : ablation_names()) {
    CAPTURE(name);
    const ModelConfig cfg = small_config(name);
    const AblationFlags f = cfg.ablation;
    const Model model(cfg, 6);
    const ForwardResult r = model.forward(inference, img, opts);
    REQUIRE(r.trace.graphs.size() == 2);
    CHECK(r.trace.semantic.defined() == f.semantic_branch());
    if (f.semantic_branch()) {
      if (f.adaptive_scan) {
        CHECK(r.trace.order == r.trace.plan.order);
        CHECK(r.trace.plan.tree_edges.size() == 15);
      } else {
        CHECK(r.trace.order == raster_order(16));
      }
    }
    for (const auto& g : r.trace.graphs) {
      CHECK(g.h.defined() == f.hetero_learning);
      CHECK(g.semantic.same(r.trace.semantic) == f.hetero_graph);
      CHECK(g.adj.edge_count() == 16 * 3);
    }
    bool has_map = false, has_ssm = false;
    for (const auto& [n, t] : model.named_parameters()) {
      has_map = has_map || n.find(".map.") != std::string::npos;
      has_ssm = has_ssm || n.rfind("ssm.", 0) == 0;
    }
    CHECK(has_map == f.hetero_learning);
    CHECK(has_ssm == f.semantic_branch());
    CHECK(model.max_abs_a_bar().has_value() == f.semantic_branch());
  }
}

TEST_CASE("aggregate examples") {
  const Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  SUBCASE("neighbours equal to the center give zero differences") {
    HeteroGraph g{x, x, Tensor(), Adjacency{2, 1, 2, {0, 0, 1, 1}}};
    CHECK(values(aggregate(inference, g)) == std::vector<double>{1, 2, 0, 0, 3, 4, 0, 0});
  }
  SUBCASE("single neighbour gives the plain difference") {
    const Tensor s = Tensor::from({2, 2}, {0.5, 7, -1, 2});
    HeteroGraph g{x, s, Tensor(), Adjacency{1, 1, 2, {1, 0}}};
    CHECK(values(aggregate(inference, g)) == std::vector<double>{1, 2, -2, 0, 3, 4, -2.5, 3});
    g.h = Tensor::from({2, 2}, {0.3, 0.7, 0.6, 0.4});
    CHECK(values(aggregate(inference, g)) == std::vector<double>{1, 2, -2, 0, 3, 4, -2.5, 3});
  }
  SUBCASE("uniform correlation reduces to max-relative") {
    Rng rng(7);
    const Tensor v = random_tensor({6, 3}, rng), s = random_tensor({6, 3}, rng);
    const HeteroGraph plain = build_hetero_graph(v, s, Tensor(), 3, 1);
    HeteroGraph weighted = plain;
    weighted.h = Tensor::full({6, 6}, 1.0 / 6);
    const auto a = values(aggregate(inference, plain)), b = values(aggregate(inference, weighted));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-14));
  }
}

TEST_CASE("neighbour weights sum to k per row") {
  Rng rng(8);
  const Tensor h = ops::softmax_lastdim(inference, random_tensor({5, 5}, rng));
  const Adjacency adj = knn_adjacency(random_tensor({5, 2}, rng), random_tensor({5, 2}, rng), 3, 1);
  const Tensor w = neighbor_weights(inference, h, adj);
  for (std::size_t i = 0; i < 5; ++i) CHECK(w.at(i * 3) + w.at(i * 3 + 1) + w.at(i * 3 + 2) == doctest::Approx(3.0));
}

TEST_CASE("zero update and feed-forward output weights make a block the identity") {
  const ModelConfig cfg = small_config();
  Rng rng(9);
  ReasonBlockParams p = init_reason_block(cfg, rng);
  for (Tensor t : {p.w_update, p.b_update, p.ffn.w2, p.ffn.b2})
    for (double& v : t.mutable_data()) v = 0.0;
  const Tensor x = random_tensor({16, 12}, rng), sem = random_tensor({16, 12}, rng);
  Rng drop(1);
  const Tensor y = reason_block(inference, x, sem, p, cfg, BlockContext{true, &drop, nullptr});
  CHECK(values(y) == values(x));
  CHECK_THROWS_AS(reason_block(inference, x, sem, p, cfg, BlockContext{true, nullptr, nullptr}), ContractError);
  CHECK_THROWS_AS(reason_block(inference, x, Tensor(), p, cfg, BlockContext{}), ContractError);
}

TEST_CASE("parameters survive a checkpoint round trip") {
  const Model a(small_config(), 10);
  std::stringstream ss;
  write_checkpoint(ss, a.named_parameters());
  Model c(small_config(), 11);
  c.load_parameters(read_checkpoint(ss));
  const auto pa = a.named_parameters(), pc = c.named_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].second.numel(); ++j)
      CHECK(pc[i].second.at(j) == static_cast<double>(static_cast<float>(pa[i].second.at(j))));

  Model base(small_config("base"), 12);
  CHECK_THROWS_AS(base.load_parameters({}), DataError);
  Model other(small_config(), 13);
  CHECK_THROWS_AS(other.load_parameters(base.named_parameters()), DataError);
}

TEST_CASE("end-to-end gradients match finite differences") {
  for (const auto& r : verify::model_gradient_checks(5)) {
    INFO(verify::format_result(r));
    CHECK(r.pass);
  }
}
