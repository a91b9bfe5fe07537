#include "hgfx/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "hgfx/error.hpp"

namespace hgfx {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t header_number(std::istream& is, const std::filesystem::path& path) {
  const std::string tok = header_token(is);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
    throw DataError("pnm: malformed header in " + path.string());
  return std::stoul(tok);
}

}  // namespace

ImageSample read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("pnm: cannot open " + path.string());
  const std::string magic = header_token(is);
  std::size_t channels;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw DataError("pnm: " + path.string() + " is not a binary PPM/PGM");
  ImageSample img;
  img.width = header_number(is, path);
  img.height = header_number(is, path);
  const std::size_t maxval = header_number(is, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255)
    throw DataError("pnm: unsupported dimensions or maxval in " + path.string());
  img.channels = channels;
  std::vector<unsigned char> raw(img.width * img.height * channels);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw DataError("pnm: truncated pixel data in " + path.string());
  img.pixels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<double>(raw[i]) / static_cast<double>(maxval);
  return img;
}

void write_ppm(const std::filesystem::path& path, const ImageSample& img) {
  if (img.channels != 3 && img.channels != 1) throw ContractError("write_ppm: 1 or 3 channels expected");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("pnm: cannot open " + path.string() + " for writing");
  os << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::vector<char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0)));
  os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError("pnm: write failed for " + path.string());
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& gray) {
  if (gray.size() != width * height) throw ContractError("write_pgm: buffer does not match dimensions");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("pgm: cannot open " + path.string() + " for writing");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!os) throw IoError("pgm: write failed for " + path.string());
}

ImageSample read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("png: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("png: cannot create info struct");
  }
  ImageSample img;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png: decode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_strip_alpha(png);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * img.height);
  rows.resize(img.height);
  for (std::size_t r = 0; r < img.height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (img.channels != 1 && img.channels != 3) throw DataError("png: unsupported channel count in " + path.string());
  img.pixels.resize(img.width * img.height * img.channels);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t i = 0; i < img.width * img.channels; ++i)
      img.pixels[r * img.width * img.channels + i] = static_cast<double>(buffer[r * stride + i]) / 255.0;
  return img;
}

ImageSample read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw DataError("unsupported image format: " + path.string());
}

std::vector<std::uint8_t> paint_visit_order(const std::vector<std::size_t>& order, std::size_t grid_rows,
                                            std::size_t grid_cols, std::size_t patch_size) {
  const std::size_t n = grid_rows * grid_cols;
  if (order.size() != n) throw ContractError("paint_visit_order: order length does not match the grid");
  const std::size_t w = grid_cols * patch_size, h = grid_rows * patch_size;
  std::vector<std::uint8_t> gray(w * h, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t node = order[rank];
    const auto level = static_cast<std::uint8_t>(n > 1 ? std::lround(255.0 * static_cast<double>(rank) / static_cast<double>(n - 1)) : 255);
    const std::size_t r0 = (node / grid_cols) * patch_size, c0 = (node % grid_cols) * patch_size;
    for (std::size_t y = 0; y < patch_size; ++y)
      for (std::size_t x = 0; x < patch_size; ++x) gray[(r0 + y) * w + c0 + x] = level;
  }
  return gray;
}

}  // namespace hgfx
