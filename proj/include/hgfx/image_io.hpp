#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgfx/patch_embed.hpp"

namespace hgfx {

// 8-bit binary PPM (P6) or PGM (P5); maxval up to 255.
ImageSample read_pnm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageSample& img);
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& gray);

// 8-bit PNG through libpng; gray, gray+alpha, RGB and RGBA inputs (alpha dropped).
ImageSample read_png(const std::filesystem::path& path);

// Dispatches on the file extension (.ppm/.pgm/.pnm or .png).
ImageSample read_image(const std::filesystem::path& path);

// Gray-level PGM of the patch grid, each patch painted with its visit rank in order.
std::vector<std::uint8_t> paint_visit_order(const std::vector<std::size_t>& order, std::size_t grid_rows,
                                            std::size_t grid_cols, std::size_t patch_size);

}  // namespace hgfx
