#include "hgfx/patch_embed.hpp"

#include "hgfx/error.hpp"
#include "hgfx/ops.hpp"

namespace hgfx {

std::size_t patch_vector_size(std::size_t patch_size, std::size_t channels) {
  return patch_size * patch_size * channels;
}

void validate_image(const ImageSample& img, std::size_t patch_size) {
  if (patch_size == 0) throw ConfigError("patch size must be positive");
  if (img.channels != 1 && img.channels != 3)
    throw ConfigError("image must have 1 or 3 channels, got " + std::to_string(img.channels));
  if (img.height == 0 || img.width == 0 || img.height % patch_size || img.width % patch_size)
    throw ConfigError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                      " is not divisible into " + std::to_string(patch_size) + "-pixel patches");
  if (img.pixels.size() != img.height * img.width * img.channels)
    throw DataError("image pixel buffer has the wrong length");
}

Tensor flatten_patches(const ImageSample& img, std::size_t patch_size) {
  validate_image(img, patch_size);
  const std::size_t gr = img.height / patch_size, gc = img.width / patch_size;
  const std::size_t p = patch_vector_size(patch_size, img.channels);
  std::vector<double> out(gr * gc * p);
  for (std::size_t r = 0; r < gr; ++r) {
    for (std::size_t c = 0; c < gc; ++c) {
      double* dst = out.data() + (r * gc + c) * p;
      for (std::size_t y = 0; y < patch_size; ++y) {
        const std::size_t row = r * patch_size + y;
        const double* src = img.pixels.data() + (row * img.width + c * patch_size) * img.channels;
        std::copy_n(src, patch_size * img.channels, dst + y * patch_size * img.channels);
      }
    }
  }
  return Tensor::from({gr * gc, p}, std::move(out));
}

NodeSet patch_embed(Tape& tape, const ImageSample& img, std::size_t patch_size, const Tensor& proj,
                    const Tensor& pos) {
  const Tensor patches = flatten_patches(img, patch_size);
  const std::size_t n = patches.dim(0);
  if (proj.rank() != 2 || proj.dim(0) != patches.dim(1))
    throw ConfigError("patch projection " + shape_str(proj.shape()) + " does not accept " +
                      std::to_string(patches.dim(1)) + "-value patches");
  NodeSet nodes;
  nodes.grid_rows = img.height / patch_size;
  nodes.grid_cols = img.width / patch_size;
  nodes.features = ops::matmul(tape, patches, proj);
  if (pos.defined()) {
    if (pos.rank() != 2 || pos.dim(0) != n || pos.dim(1) != proj.dim(1))
      throw ConfigError("positional table " + shape_str(pos.shape()) + " does not match " + std::to_string(n) +
                        " nodes of width " + std::to_string(proj.dim(1)));
    nodes.features = ops::add(tape, nodes.features, pos);
  }
  nodes.coords.reserve(n);
  for (std::size_t r = 0; r < nodes.grid_rows; ++r)
    for (std::size_t c = 0; c < nodes.grid_cols; ++c) nodes.coords.push_back({r, c});
  return nodes;
}

}  // namespace hgfx
