#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <sstream>

#include "hgfx/checkpoint.hpp"
#include "hgfx/error.hpp"

using namespace hgfx;

TEST_CASE("checkpoint round trip keeps names, shapes and f32 values") {
  const NamedTensors in{{"a", Tensor::from({2, 3}, {1, 2.5, -3, 0.125, 1e-3, 7})}, {"bias", Tensor::from({1}, {0.1})}};
  std::stringstream ss;
  write_checkpoint(ss, in);
  const NamedTensors out = read_checkpoint(ss);
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out[i].first == in[i].first);
    CHECK(out[i].second.shape() == in[i].second.shape());
    for (std::size_t j = 0; j < in[i].second.numel(); ++j)
      CHECK(out[i].second.at(j) == static_cast<double>(static_cast<float>(in[i].second.at(j))));
  }
}

TEST_CASE("checkpoint byte layout") {
  std::stringstream ss;
  write_checkpoint(ss, {{"w", Tensor::from({2}, {1.0, -2.0})}});
  const std::string b = ss.str();
  REQUIRE(b.size() == 4 + 4 + 4 + 2 + 1 + 1 + 8 + 2 * 4);
  CHECK(b.substr(0, 4) == "HGFX");
  CHECK(b[4] == 1);
  CHECK(b[8] == 1);
  CHECK(b[12] == 1);
  CHECK(b[13] == 0);
  CHECK(b[14] == 'w');
  CHECK(b[15] == 1);
  CHECK(b[16] == 2);
  float f;
  std::memcpy(&f, b.data() + 24, 4);
  CHECK(f == 1.0f);
  std::memcpy(&f, b.data() + 28, 4);
  CHECK(f == -2.0f);
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::stringstream bad_magic("NOPE\x01\x00\x00\x00");
  CHECK_THROWS_AS(read_checkpoint(bad_magic), DataError);
  std::stringstream ss;
  write_checkpoint(ss, {{"w", Tensor::from({4}, {1, 2, 3, 4})}});
  std::stringstream truncated(ss.str().substr(0, ss.str().size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/file.ckpt"), IoError);
}

TEST_CASE("checkpoint files") {
  const auto path = std::filesystem::temp_directory_path() / "hgfx_test.ckpt";
  save_checkpoint(path, {{"x", Tensor::from({1, 1}, {3.0})}});
  const auto back = load_checkpoint(path);
  CHECK(back.at(0).second.item() == 3.0);
  std::filesystem::remove(path);
}
