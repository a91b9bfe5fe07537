#include "doctest.h"

#include "hgfx/error.hpp"
#include "hgfx/patch_embed.hpp"
#include "helpers.hpp"

using namespace hgfx;
using hgfx::testing::random_tensor;

namespace {

ImageSample random_image(std::size_t size, std::size_t channels, Rng& rng) {
  ImageSample img{size, size, channels, std::vector<double>(size * size * channels), 0};
  for (auto& v : img.pixels) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("32x32x3 image with patch 8 gives 16 nodes of 192 values") {
  Rng rng(1);
  const ImageSample img = random_image(32, 3, rng);
  const Tensor flat = flatten_patches(img, 8);
  CHECK(flat.shape() == Shape{16, 192});
  Tape tape(Tape::Mode::kInference);
  const NodeSet nodes = patch_embed(tape, img, 8, random_tensor({192, 64}, rng), random_tensor({16, 64}, rng));
  CHECK(nodes.size() == 16);
  CHECK(nodes.dim() == 64);
  CHECK(nodes.grid_rows == 4);
  CHECK(nodes.coords[5] == GridCoord{1, 1});
}

TEST_CASE("patch vectors are the patch pixels in raster order") {
  ImageSample img{4, 4, 1, {}, 0};
  for (int i = 0; i < 16; ++i) img.pixels.push_back(i);
  const Tensor flat = flatten_patches(img, 2);
  CHECK(std::vector<double>(flat.data().begin(), flat.data().begin() + 4) == std::vector<double>{0, 1, 4, 5});
  CHECK(std::vector<double>(flat.data().begin() + 12, flat.data().end()) == std::vector<double>{10, 11, 14, 15});
}

TEST_CASE("constant image without positional term gives identical nodes") {
  ImageSample img{16, 16, 3, std::vector<double>(16 * 16 * 3, 0.4), 0};
  Tensor proj = Tensor::zeros({48, 8});
  for (std::size_t i = 0; i < 8; ++i) proj.mutable_data()[i * 8 + i] = 1.0;
  Tape tape(Tape::Mode::kInference);
  const NodeSet nodes = patch_embed(tape, img, 4, proj, Tensor());
  for (std::size_t n = 1; n < nodes.size(); ++n)
    for (std::size_t c = 0; c < 8; ++c) CHECK(nodes.features.at(n * 8 + c) == nodes.features.at(c));
}

TEST_CASE("permuting pixels inside one patch changes only that node") {
  Rng rng(2);
  ImageSample img = random_image(16, 3, rng);
  const Tensor proj = random_tensor({48, 6}, rng);
  Tape tape(Tape::Mode::kInference);
  const Tensor before = patch_embed(tape, img, 4, proj, Tensor()).features;
  // swap two pixels of patch (1,2)
  auto px = [&](std::size_t y, std::size_t x, std::size_t c) -> double& { return img.pixels[(y * 16 + x) * 3 + c]; };
  for (std::size_t c = 0; c < 3; ++c) std::swap(px(4, 8, c), px(7, 10, c));
  const Tensor after = patch_embed(tape, img, 4, proj, Tensor()).features;
  const std::size_t changed = 1 * 4 + 2;
  bool other_same = true, target_differs = false;
  for (std::size_t n = 0; n < 16; ++n)
    for (std::size_t c = 0; c < 6; ++c) {
      if (n == changed)
        target_differs = target_differs || before.at(n * 6 + c) != after.at(n * 6 + c);
      else
        other_same = other_same && before.at(n * 6 + c) == after.at(n * 6 + c);
    }
  CHECK(other_same);
  CHECK(target_differs);
}

TEST_CASE("invalid images are configuration errors") {
  Rng rng(3);
  CHECK_THROWS_AS(validate_image(random_image(30, 3, rng), 8), ConfigError);
  CHECK_THROWS_AS(validate_image(random_image(32, 2, rng), 8), ConfigError);
  CHECK_NOTHROW(validate_image(random_image(32, 1, rng), 8));
  Tape tape(Tape::Mode::kInference);
  CHECK_THROWS_AS(patch_embed(tape, random_image(32, 3, rng), 8, Tensor::zeros({100, 4}), Tensor()), ConfigError);
}
