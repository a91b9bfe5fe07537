#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hgfx/tensor.hpp"

namespace hgfx {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary layout, all integers little-endian:
//   "HGFX" | u32 version (1) | u32 count |
//   count x { u16 name_len | name bytes | u8 rank | rank x u64 dim | numel x f32 }
// Values are narrowed to 32-bit floats on write.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const NamedTensors& tensors);
NamedTensors read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace hgfx
