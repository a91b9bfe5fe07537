#include "hgfx/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hgfx/error.hpp"

namespace hgfx {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_checkpoint(std::ostream& os, const NamedTensors& tensors) {
  os.write("HGFX", 4);
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > UINT16_MAX) throw ContractError("checkpoint: tensor name too long");
    if (t.rank() > UINT8_MAX) throw ContractError("checkpoint: tensor rank too large");
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.data()) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os) throw IoError("checkpoint: write failed");
}

NamedTensors read_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HGFX", 4) != 0) throw DataError("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(is);
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw DataError("checkpoint: truncated name");
    const auto rank = get_le<std::uint8_t>(is);
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint64_t>(is);
    const std::size_t n = shape_numel(shape);
    if (n > (std::size_t{1} << 32)) throw DataError("checkpoint: implausible tensor size");
    std::vector<double> values(n);
    for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(is)));
    out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(os, tensors);
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace hgfx
