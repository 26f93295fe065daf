#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "sealvox/grid/sparse_grid.hpp"

namespace sealvox {

static_assert(std::endian::native == std::endian::little, "grid dumps assume a little-endian host");

/// Payload kinds recorded in the USVG header.
enum class PayloadKind : std::uint8_t { Byte = 0, Label = 1, UInt32 = 2, Float32 = 3, Float64 = 4 };

template <class T>
constexpr PayloadKind payload_kind_of() {
  if constexpr (std::is_same_v<T, float>) {
    return PayloadKind::Float32;
  } else if constexpr (std::is_same_v<T, double>) {
    return PayloadKind::Float64;
  } else if constexpr (std::is_same_v<T, std::uint32_t>) {
    return PayloadKind::UInt32;
  } else if constexpr (std::is_enum_v<T>) {
    static_assert(sizeof(T) == 1);
    return PayloadKind::Label;
  } else {
    static_assert(std::is_same_v<T, std::uint8_t>, "unsupported payload type");
    return PayloadKind::Byte;
  }
}

inline constexpr char kGridMagic[4] = {'U', 'S', 'V', 'G'};
inline constexpr std::uint32_t kGridDumpVersion = 1;

namespace detail {
template <class V>
void put(std::ofstream& out, const V& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <class V>
V take(std::ifstream& in, const std::string& path) {
  V v{};
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(V))) throw ParseError("truncated grid dump " + path, offset);
  return v;
}
}  // namespace detail

/// Writes the grid as a flat binary dump. Tiles are expanded to dense
/// bricks; bricks are written in brick-key order.
template <class T>
void dump_grid(const SparseGrid<T>& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  std::vector<std::pair<std::uint64_t, std::int64_t>> entries;  // key, dense index or -1 for tile
  for (std::size_t i = 0; i < grid.active_brick_count(); ++i) {
    entries.emplace_back(brick_key(grid.brick_coord(i)), static_cast<std::int64_t>(i));
  }
  for (const auto& [b, v] : grid.sorted_tiles()) entries.emplace_back(brick_key(b), -1);
  std::sort(entries.begin(), entries.end());

  out.write(kGridMagic, 4);
  detail::put(out, kGridDumpVersion);
  detail::put(out, static_cast<std::uint32_t>(grid.extent()));
  detail::put(out, static_cast<std::uint32_t>(kBrickSize));
  detail::put(out, static_cast<std::uint8_t>(payload_kind_of<T>()));
  detail::put(out, static_cast<std::uint64_t>(entries.size()));
  typename SparseGrid<T>::Block tile_block;
  for (const auto& [key, index] : entries) {
    const Coord b = brick_from_key(key);
    detail::put(out, static_cast<std::int32_t>(b.x));
    detail::put(out, static_cast<std::int32_t>(b.y));
    detail::put(out, static_cast<std::int32_t>(b.z));
    const typename SparseGrid<T>::Block* block = nullptr;
    if (index >= 0) {
      block = &grid.brick(static_cast<std::size_t>(index));
    } else {
      tile_block.fill(*grid.tile(b));
      block = &tile_block;
    }
    out.write(reinterpret_cast<const char*>(block->data()), sizeof(T) * kBrickVolume);
  }
  if (!out) throw IoError("failed writing " + path);
}

/// Reads a dump written by dump_grid; absent bricks read as `background`.
template <class T>
SparseGrid<T> load_grid_dump(const std::string& path, T background) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kGridMagic, 4) != 0) throw ParseError("bad grid dump magic in " + path, 0);
  if (detail::take<std::uint32_t>(in, path) != kGridDumpVersion) throw ParseError("unsupported grid dump version in " + path, 4);
  const auto n = detail::take<std::uint32_t>(in, path);
  if (detail::take<std::uint32_t>(in, path) != static_cast<std::uint32_t>(kBrickSize)) {
    throw ParseError("unsupported brick size in " + path, 12);
  }
  if (detail::take<std::uint8_t>(in, path) != static_cast<std::uint8_t>(payload_kind_of<T>())) {
    throw ParseError("payload kind mismatch in " + path, 16);
  }
  const auto count = detail::take<std::uint64_t>(in, path);
  SparseGrid<T> grid(static_cast<int>(n), background);
  for (std::uint64_t i = 0; i < count; ++i) {
    Coord b;
    b.x = detail::take<std::int32_t>(in, path);
    b.y = detail::take<std::int32_t>(in, path);
    b.z = detail::take<std::int32_t>(in, path);
    if (!grid.brick_in_bounds(b)) {
      throw ParseError("brick coordinate out of range in " + path, static_cast<std::size_t>(in.tellg()) - 12);
    }
    auto& block = grid.brick(grid.ensure_brick(b));
    if (!in.read(reinterpret_cast<char*>(block.data()), sizeof(T) * kBrickVolume)) {
      throw ParseError("truncated grid dump " + path, static_cast<std::size_t>(i));
    }
  }
  return grid;
}

}  // namespace sealvox
