#pragma once

#include <cstddef>
#include <vector>

#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

// Interleaved HWC pixels in [0,1].
struct ImageSample {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> pixels;
  std::size_t label = 0;
};

struct GridCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

// N node features of width D with the patch-grid position of every row.
struct NodeSet {
  Tensor features;  // [N,D]
  std::vector<GridCoord> coords;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;

  std::size_t size() const { return features.dim(0); }
  std::size_t dim() const { return features.dim(1); }
};

std::size_t patch_vector_size(std::size_t patch_size, std::size_t channels);

void validate_image(const ImageSample& img, std::size_t patch_size);

// Raster-ordered patch vectors [N, patch^2*channels]; each vector is the
// patch's pixels in row-major order with channels interleaved.
Tensor flatten_patches(const ImageSample& img, std::size_t patch_size);

// Node i = flatten(patch i) * proj + pos[i]. pos may be left undefined.
NodeSet patch_embed(Tape& tape, const ImageSample& img, std::size_t patch_size, const Tensor& proj,
                    const Tensor& pos);

}  // namespace hgfx
