#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hgfx/dataset.hpp"
#include "hgfx/error.hpp"
#include "hgfx/image_io.hpp"

using namespace hgfx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hgfx_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1-nearest-neighbour on raw pixels.
double one_nn_accuracy(const Dataset& train, const Dataset& test) {
  std::size_t correct = 0;
  for (const auto& q : test.samples) {
    double best = 1e300;
    std::size_t label = 0;
    for (const auto& r : train.samples) {
      double d = 0.0;
      for (std::size_t i = 0; i < q.pixels.size(); ++i) d += (q.pixels[i] - r.pixels[i]) * (q.pixels[i] - r.pixels[i]);
      if (d < best) {
        best = d;
        label = r.label;
      }
    }
    correct += label == q.label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

TEST_CASE("pnm round trip") {
  const fs::path dir = scratch("pnm");
  Rng rng(1);
  const ImageSample img = synth_image(0, 8, rng);
  write_ppm(dir / "a.ppm", img);
  const ImageSample back = read_image(dir / "a.ppm");
  CHECK(back.width == 8);
  CHECK(back.channels == 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255 + 1e-12);

  std::ofstream(dir / "comment.pgm", std::ios::binary) << "P5\n# hi\n2 1\n255\n" << '\x00' << '\xff';
  const ImageSample g = read_pnm(dir / "comment.pgm");
  CHECK(g.channels == 1);
  CHECK(g.pixels == std::vector<double>{0.0, 1.0});

  std::ofstream(dir / "short.ppm", std::ios::binary) << "P6\n4 4\n255\nabc";
  CHECK_THROWS_AS(read_pnm(dir / "short.ppm"), DataError);
  std::ofstream(dir / "text.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_pnm(dir / "text.ppm"), DataError);
  CHECK_THROWS_AS(read_image(dir / "missing.ppm"), IoError);
  CHECK_THROWS_AS(read_image(dir / "x.bmp"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("visit order painting") {
  const std::vector<std::size_t> order{3, 0, 1, 2};
  const auto gray = paint_visit_order(order, 2, 2, 2);
  CHECK(gray.size() == 16);
  CHECK(gray[0] == 85);    // node 0 visited second
  CHECK(gray[2] == 170);   // node 1
  CHECK(gray[15] == 0);    // node 3 first
}

TEST_CASE("synthetic generator is deterministic") {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  synth_generate(a, 3, 32, 7);
  synth_generate(b, 3, 32, 7);
  for (const auto& cls : kSynthClasses)
    for (int i = 0; i < 3; ++i) {
      const std::string f = "img_000" + std::to_string(i) + ".ppm";
      CHECK(slurp(a / cls / f) == slurp(b / cls / f));
      CHECK(!slurp(a / cls / f).empty());
    }
  const Dataset loaded = load_image_folder(a);
  const Dataset memory = synth_dataset(3, 32, 7);
  CHECK(loaded.class_names == kSynthClasses);
  REQUIRE(loaded.size() == memory.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.samples[i].label == memory.samples[i].label);
    for (std::size_t j = 0; j < loaded.samples[i].pixels.size(); ++j)
      CHECK(std::abs(loaded.samples[i].pixels[j] - memory.samples[i].pixels[j]) < 1e-12);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("zero images per class leaves empty class folders") {
  const fs::path dir = scratch("empty");
  synth_generate(dir, 0, 32, 1);
  const Dataset d = load_image_folder(dir);
  CHECK(d.class_names.size() == 2);
  CHECK(d.empty());
  fs::remove_all(dir);
}

TEST_CASE("split is per class, deterministic and complete") {
  const Dataset d = synth_dataset(12, 16, 2);
  const DatasetSplit s1 = split_dataset(d, 0.75, 4), s2 = split_dataset(d, 0.75, 4);
  CHECK(s1.train.size() == 18);
  CHECK(s1.val.size() == 6);
  for (std::size_t i = 0; i < s1.train.size(); ++i) CHECK(s1.train.samples[i].pixels == s2.train.samples[i].pixels);
  std::size_t zeros = 0;
  for (const auto& s : s1.val.samples) zeros += s.label == 0;
  CHECK(zeros == 3);
  CHECK_THROWS_AS(split_dataset(d, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(load_image_folder("/nonexistent/hgfx"), DataError);
}

TEST_CASE("classes are separable by a pixel nearest-neighbour baseline") {
  const DatasetSplit s = split_dataset(synth_dataset(48, 32, 11), 2.0 / 3.0, 11);
  REQUIRE(s.train.size() == 64);
  const double acc = one_nn_accuracy(s.train, s.val);
  MESSAGE("1-NN pixel accuracy " << acc);
  CHECK(acc > 0.6);
}
