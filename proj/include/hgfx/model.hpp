#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgfx/adaptive_scan.hpp"
#include "hgfx/checkpoint.hpp"
#include "hgfx/cross_modal.hpp"
#include "hgfx/hetero_graph.hpp"
#include "hgfx/patch_embed.hpp"
#include "hgfx/rng.hpp"
#include "hgfx/ssm.hpp"
#include "hgfx/tape.hpp"

namespace hgfx {

// Component switches matching the ablation rows.
struct AblationFlags {
  bool hetero_graph = true;     // neighbours drawn from semantic nodes instead of visual ones
  bool adaptive_scan = true;    // spanning-tree scan order instead of raster order
  bool hetero_learning = true;  // correlation-modulated adjacency and aggregation

  bool semantic_branch() const { return hetero_graph || hetero_learning; }
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

// "base", "hg", "hg+scan", "scan+hgl", "full"
AblationFlags ablation_from_name(const std::string& name);
std::string ablation_name(const AblationFlags& flags);
const std::vector<std::string>& ablation_names();

struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t patch_size = 8;
  std::size_t dim = 64;
  std::size_t mapped_dim = 64;
  std::size_t state_dim = 16;
  std::size_t k = 9;
  std::size_t dilation = 4;
  std::size_t blocks = 16;
  std::size_t classes = 2;
  double dropout = 0.1;
  double leaky_slope = 0.2;
  double distance_floor = kDefaultDistanceFloor;
  AblationFlags ablation;

  std::size_t nodes() const;
  std::size_t patch_values() const { return patch_vector_size(patch_size, channels); }
  std::size_t graph_dilation() const { return effective_dilation(k, dilation, nodes()); }
  void validate() const;
};

struct ReasonBlockParams {
  Tensor norm1_gamma, norm1_beta;
  MappingParams mapping;
  Tensor w_agg, b_agg;        // [2D,D], [D]
  Tensor w_update, b_update;  // [D,D], [D]
  Tensor norm2_gamma, norm2_beta;
  Mlp ffn;                    // D -> 4D -> D
};

ReasonBlockParams init_reason_block(const ModelConfig& cfg, Rng& rng);

// concat(x_i, max_j w_ij (pool_j - x_i)) over the graph's neighbours, [N,2D].
// Without a correlation matrix every w_ij is 1; with one,
// w_ij = k * H_ij / sum over the row's neighbours of H.
Tensor aggregate(Tape& tape, const HeteroGraph& graph);

// Row-normalised correlation weights of each center's selected neighbours, [N,k].
Tensor neighbor_weights(Tape& tape, const Tensor& h, const Adjacency& adj);

struct BlockContext {
  bool training = false;
  Rng* rng = nullptr;            // dropout masks; required when training with dropout
  HeteroGraph* graph = nullptr;  // receives the graph built by the block
};

// One aggregate/update layer followed by the feed-forward layer, both residual.
// semantic may be undefined when the configuration has no semantic branch.
Tensor reason_block(Tape& tape, const Tensor& x, const Tensor& semantic, const ReasonBlockParams& p,
                    const ModelConfig& cfg, const BlockContext& ctx);

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;
  bool keep_trace = false;
};

struct ForwardTrace {
  NodeSet visual;
  std::vector<std::size_t> order;
  ScanPlan plan;  // filled only with adaptive scanning
  Tensor semantic;
  std::vector<HeteroGraph> graphs;
};

struct ForwardResult {
  Tensor logits;  // [1,classes]
  ForwardTrace trace;
};

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  ForwardResult forward(Tape& tape, const ImageSample& img, const ForwardOptions& opts = {}) const;
  std::size_t predict(const ImageSample& img) const;

  // Parameters used by the configured components, in a fixed order.
  NamedTensors named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  // Copies values by name; every active parameter must be present with its shape.
  void load_parameters(const NamedTensors& tensors);

  // Largest |a_bar| of the state-space encoder, nullopt without a semantic branch.
  std::optional<double> max_abs_a_bar() const;

  const SSMParams& ssm() const { return ssm_; }
  const std::vector<ReasonBlockParams>& blocks() const { return blocks_; }

 private:
  ModelConfig cfg_;
  Tensor embed_proj_, embed_pos_;
  SSMParams ssm_;
  Tensor semantic_norm_gamma_, semantic_norm_beta_;
  std::vector<ReasonBlockParams> blocks_;
  Tensor final_norm_gamma_, final_norm_beta_;
  Tensor head_w_, head_b_;
};

}  // namespace hgfx
