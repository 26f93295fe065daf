#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sealvox/core/error.hpp"
#include "sealvox/core/parallel.hpp"
#include "sealvox/core/vec.hpp"

namespace sealvox {

inline constexpr int kBrickSize = 8;
inline constexpr int kBrickShift = 3;
inline constexpr int kBrickVolume = kBrickSize * kBrickSize * kBrickSize;

/// Voxelization of the domain [-1, 1]^3 at `resolution` voxels per axis.
struct GridSpec {
  int resolution = 64;

  static constexpr int kMinResolution = 64;
  static constexpr int kMaxResolution = 2048;

  static GridSpec make(int n) {
    if (n < kMinResolution || n > kMaxResolution || !std::has_single_bit(static_cast<unsigned>(n))) {
      throw InvalidArgument("grid resolution must be a power of two in [64, 2048], got " + std::to_string(n));
    }
    if (n % kBrickSize != 0) throw InvalidArgument("grid resolution must be divisible by the brick size");
    return GridSpec{n};
  }

  double voxel_size() const { return 2.0 / resolution; }
  int bricks_per_axis() const { return resolution / kBrickSize; }

  /// Center of voxel (i, j, k).
  Vec3 voxel_center(const Coord& c) const {
    const double h = voxel_size();
    return {-1.0 + (c.x + 0.5) * h, -1.0 + (c.y + 0.5) * h, -1.0 + (c.z + 0.5) * h};
  }

  /// Lattice point (voxel corner) (i, j, k), i in [0, N].
  Vec3 corner(const Coord& c) const {
    const double h = voxel_size();
    return {-1.0 + c.x * h, -1.0 + c.y * h, -1.0 + c.z * h};
  }

  bool contains(const Coord& c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < resolution && c.y < resolution && c.z < resolution;
  }

  /// Voxel containing p, clamped to the grid.
  Coord voxel_of(const Vec3& p) const {
    const double inv_h = resolution / 2.0;
    Coord c;
    for (int a = 0; a < 3; ++a) {
      const int v = static_cast<int>(std::floor((p[a] + 1.0) * inv_h));
      c[a] = std::clamp(v, 0, resolution - 1);
    }
    return c;
  }

  bool operator==(const GridSpec&) const = default;
};

inline constexpr std::uint64_t brick_key(const Coord& b) {
  return static_cast<std::uint64_t>(b.x) | (static_cast<std::uint64_t>(b.y) << 20) |
         (static_cast<std::uint64_t>(b.z) << 40);
}
inline constexpr Coord brick_from_key(std::uint64_t key) {
  return {static_cast<int>(key & 0xfffff), static_cast<int>((key >> 20) & 0xfffff),
          static_cast<int>((key >> 40) & 0xfffff)};
}
inline constexpr Coord brick_of(const Coord& v) { return {v.x >> kBrickShift, v.y >> kBrickShift, v.z >> kBrickShift}; }
inline constexpr int local_index(const Coord& v) {
  return (v.x & (kBrickSize - 1)) | ((v.y & (kBrickSize - 1)) << kBrickShift) |
         ((v.z & (kBrickSize - 1)) << (2 * kBrickShift));
}
inline constexpr Coord local_coord(int i) { return {i & 7, (i >> 3) & 7, (i >> 6) & 7}; }
inline constexpr Coord brick_origin(const Coord& b) {
  return {b.x << kBrickShift, b.y << kBrickShift, b.z << kBrickShift};
}

/// Brick-hashed sparse voxel container over [0, extent)^3. Dense 8^3
/// bricks are allocated on write; whole bricks may instead hold a uniform
/// tile value. Anything else reads as the background.
///
/// Phase contract: writes (set, ensure_brick, set_tile, sort_bricks) are
/// single-threaded; reads and per-brick writes through brick(i) inside
/// for_each_brick_parallel may run concurrently.
template <class T>
class SparseGrid {
 public:
  using Block = std::array<T, kBrickVolume>;

  SparseGrid() = default;
  SparseGrid(int extent, T background)
      : extent_(extent), bricks_per_axis_((extent + kBrickSize - 1) / kBrickSize), background_(background) {
    if (extent <= 0 || extent > (1 << 20)) throw InvalidArgument("invalid sparse grid extent");
  }

  SparseGrid(const SparseGrid& o)
      : extent_(o.extent_),
        bricks_per_axis_(o.bricks_per_axis_),
        background_(o.background_),
        index_(o.index_),
        coords_(o.coords_),
        tiles_(o.tiles_) {
    blocks_.reserve(o.blocks_.size());
    for (const auto& b : o.blocks_) blocks_.push_back(std::make_unique<Block>(*b));
  }
  SparseGrid& operator=(const SparseGrid& o) {
    if (this != &o) {
      SparseGrid tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  SparseGrid(SparseGrid&&) noexcept = default;
  SparseGrid& operator=(SparseGrid&&) noexcept = default;

  int extent() const { return extent_; }
  int bricks_per_axis() const { return bricks_per_axis_; }
  T background() const { return background_; }

  bool in_bounds(const Coord& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < extent_ && v.y < extent_ && v.z < extent_;
  }
  bool brick_in_bounds(const Coord& b) const {
    return b.x >= 0 && b.y >= 0 && b.z >= 0 && b.x < bricks_per_axis_ && b.y < bricks_per_axis_ &&
           b.z < bricks_per_axis_;
  }

  std::size_t active_brick_count() const { return coords_.size(); }
  std::size_t tile_count() const { return tiles_.size(); }

  /// Bytes held by brick payloads, tiles and index structures.
  std::size_t allocated_bytes() const {
    return blocks_.size() * (sizeof(Block) + sizeof(std::unique_ptr<Block>) + sizeof(Coord)) +
           index_.size() * (sizeof(std::uint64_t) + sizeof(std::uint32_t) + 2 * sizeof(void*)) +
           tiles_.size() * (sizeof(std::uint64_t) + sizeof(T) + 2 * sizeof(void*));
  }

  /// Index of the dense brick at brick coordinate b, or -1.
  std::int64_t find_brick(const Coord& b) const {
    if (index_.empty()) return -1;
    const auto it = index_.find(brick_key(b));
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

  /// Index of the dense brick at b, allocating it (filled with the tile
  /// value if one exists, else the background) when absent.
  std::uint32_t ensure_brick(const Coord& b) {
    const std::uint64_t key = brick_key(b);
    const auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(blocks_.size()));
    if (inserted) {
      T fill = background_;
      if (const auto t = tiles_.find(key); t != tiles_.end()) {
        fill = t->second;
        tiles_.erase(t);
      }
      auto block = std::make_unique<Block>();
      block->fill(fill);
      blocks_.push_back(std::move(block));
      coords_.push_back(b);
    }
    return it->second;
  }

  Coord brick_coord(std::size_t i) const { return coords_[i]; }
  Block& brick(std::size_t i) { return *blocks_[i]; }
  const Block& brick(std::size_t i) const { return *blocks_[i]; }
  std::span<const Coord> brick_coords() const { return coords_; }

  /// Uniform value for an unallocated brick. Setting the background value
  /// clears the tile.
  void set_tile(const Coord& b, T value) {
    const std::uint64_t key = brick_key(b);
    if (index_.contains(key)) throw InvalidArgument("cannot tile a brick that is densely allocated");
    if (value == background_) {
      tiles_.erase(key);
    } else {
      tiles_[key] = value;
    }
  }

  std::optional<T> tile(const Coord& b) const {
    if (tiles_.empty()) return std::nullopt;
    const auto it = tiles_.find(brick_key(b));
    if (it == tiles_.end()) return std::nullopt;
    return it->second;
  }

  /// Tiles sorted by brick key.
  std::vector<std::pair<Coord, T>> sorted_tiles() const {
    std::vector<std::pair<std::uint64_t, T>> raw(tiles_.begin(), tiles_.end());
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Coord, T>> out;
    out.reserve(raw.size());
    for (const auto& [k, v] : raw) out.emplace_back(brick_from_key(k), v);
    return out;
  }

  /// Value of the brick-level region containing b: dense bricks return
  /// nullopt, otherwise the tile or background value.
  std::optional<T> uniform_value(const Coord& b) const {
    if (find_brick(b) >= 0) return std::nullopt;
    if (const auto t = tile(b)) return t;
    return background_;
  }

  /// Read; never allocates. Out-of-range coordinates read as background.
  T get(const Coord& v) const {
    if (!in_bounds(v)) return background_;
    const Coord b = brick_of(v);
    const std::int64_t i = find_brick(b);
    if (i >= 0) return (*blocks_[static_cast<std::size_t>(i)])[static_cast<std::size_t>(local_index(v))];
    if (const auto t = tile(b)) return *t;
    return background_;
  }

  void set(const Coord& v, T value) {
    if (!in_bounds(v)) {
      throw InvalidArgument("voxel (" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " +
                            std::to_string(v.z) + ") is outside the grid");
    }
    const std::uint32_t i = ensure_brick(brick_of(v));
    (*blocks_[i])[static_cast<std::size_t>(local_index(v))] = value;
  }

  /// Writes a batch of values; all coordinates are validated before any write.
  void set_voxels(std::span<const std::pair<Coord, T>> entries) {
    for (const auto& [c, v] : entries) {
      if (!in_bounds(c)) {
        throw InvalidArgument("voxel (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", " +
                              std::to_string(c.z) + ") is outside the grid");
      }
    }
    for (const auto& [c, v] : entries) set(c, v);
  }

  /// Visits every dense brick exactly once: fn(index, brick coord, block).
  /// Bricks are independent work items; visitors must not touch other bricks
  /// except by reading.
  template <class Fn>
  void for_each_brick_parallel(Fn&& fn) {
    parallel_for(blocks_.size(), [&](std::size_t i) { fn(i, coords_[i], *blocks_[i]); }, 1);
  }
  template <class Fn>
  void for_each_brick_parallel(Fn&& fn) const {
    parallel_for(blocks_.size(), [&](std::size_t i) { fn(i, coords_[i], std::as_const(*blocks_[i])); }, 1);
  }

  /// Reorders dense bricks by brick key (z, then y, then x).
  void sort_bricks() {
    std::vector<std::uint32_t> perm(blocks_.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::sort(perm.begin(), perm.end(),
              [&](std::uint32_t a, std::uint32_t b) { return brick_key(coords_[a]) < brick_key(coords_[b]); });
    std::vector<std::unique_ptr<Block>> blocks(blocks_.size());
    std::vector<Coord> coords(coords_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      blocks[i] = std::move(blocks_[perm[i]]);
      coords[i] = coords_[perm[i]];
      index_[brick_key(coords[i])] = static_cast<std::uint32_t>(i);
    }
    blocks_ = std::move(blocks);
    coords_ = std::move(coords);
  }

  /// Drops dense bricks for which keep(block) is false; preserves order.
  template <class Pred>
  void retain_bricks(Pred&& keep) {
    std::size_t w = 0;
    index_.clear();
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (!keep(*blocks_[i])) continue;
      blocks_[w] = std::move(blocks_[i]);
      coords_[w] = coords_[i];
      index_[brick_key(coords_[w])] = static_cast<std::uint32_t>(w);
      ++w;
    }
    blocks_.resize(w);
    coords_.resize(w);
  }

  /// Reserves index capacity for n bricks.
  void reserve(std::size_t n) {
    index_.reserve(n);
    blocks_.reserve(n);
    coords_.reserve(n);
  }

 private:
  int extent_ = 0;
  int bricks_per_axis_ = 0;
  T background_{};
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<Coord> coords_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::unordered_map<std::uint64_t, T> tiles_;
};

/// Grid of another payload type with the same dense bricks in the same
/// order (so brick indices coincide), every voxel set to `fill`.
template <class U, class T>
SparseGrid<U> grid_with_same_bricks(const SparseGrid<T>& src, U fill, U background) {
  SparseGrid<U> out(src.extent(), background);
  out.reserve(src.active_brick_count());
  for (std::size_t i = 0; i < src.active_brick_count(); ++i) {
    out.brick(out.ensure_brick(src.brick_coord(i))).fill(fill);
  }
  return out;
}

/// Read-only accessor that caches the last brick looked up. One per thread.
template <class T>
class GridReader {
 public:
  explicit GridReader(const SparseGrid<T>& grid) : grid_(&grid) {}

  T get(const Coord& v) {
    if (!grid_->in_bounds(v)) return grid_->background();
    const Coord b = brick_of(v);
    const std::uint64_t key = brick_key(b);
    if (key != key_) {
      key_ = key;
      const std::int64_t i = grid_->find_brick(b);
      block_ = i >= 0 ? &grid_->brick(static_cast<std::size_t>(i)) : nullptr;
      if (!block_) uniform_ = *grid_->uniform_value(b);
    }
    return block_ ? (*block_)[static_cast<std::size_t>(local_index(v))] : uniform_;
  }

 private:
  const SparseGrid<T>* grid_;
  std::uint64_t key_ = UINT64_MAX;
  const typename SparseGrid<T>::Block* block_ = nullptr;
  T uniform_{};
};

template <class T>
SparseGrid<T> create_grid(const GridSpec& spec, T background) {
  const GridSpec checked = GridSpec::make(spec.resolution);
  return SparseGrid<T>(checked.resolution, background);
}

/// Neighbor lookup for dense bricks: entry [i][d] is the dense index of the
/// brick at offset d (d = (dx+1) + 3(dy+1) + 9(dz+1)) from brick i, kEmpty
/// when that brick is unallocated, or kOutside past the grid boundary.
class BrickNeighbors {
 public:
  static constexpr std::int32_t kEmpty = -1;
  static constexpr std::int32_t kOutside = -2;

  template <class T>
  explicit BrickNeighbors(const SparseGrid<T>& grid) : table_(grid.active_brick_count()) {
    parallel_for(table_.size(), [&](std::size_t i) {
      const Coord b = grid.brick_coord(i);
      for (int d = 0; d < 27; ++d) {
        const Coord nb = b + Coord{d % 3 - 1, (d / 3) % 3 - 1, d / 9 - 1};
        if (!grid.brick_in_bounds(nb)) {
          table_[i][static_cast<std::size_t>(d)] = kOutside;
        } else {
          const std::int64_t k = grid.find_brick(nb);
          table_[i][static_cast<std::size_t>(d)] = k >= 0 ? static_cast<std::int32_t>(k) : kEmpty;
        }
      }
    });
  }

  static constexpr int offset_index(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

  std::int32_t at(std::size_t brick, int offset) const { return table_[brick][static_cast<std::size_t>(offset)]; }

  /// Resolves voxel-local coordinate `local` (each axis in [-8, 15]) relative
  /// to brick `brick` into (brick index or sentinel, local index).
  std::pair<std::int32_t, int> resolve(std::size_t brick, const Coord& local) const {
    int off[3];
    Coord l = local;
    for (int a = 0; a < 3; ++a) {
      off[a] = l[a] < 0 ? -1 : (l[a] >= kBrickSize ? 1 : 0);
      l[a] -= off[a] * kBrickSize;
    }
    return {at(brick, offset_index(off[0], off[1], off[2])), local_index(l)};
  }

 private:
  std::vector<std::array<std::int32_t, 27>> table_;
};

/// Sum of every voxel value (tiles expanded, background excluded). Bricks
/// are reduced in brick-key order with a fixed pairwise tree, so the result
/// does not depend on thread count or insertion order.
template <class T>
double deterministic_sum(const SparseGrid<T>& grid) {
  std::vector<std::uint32_t> order(grid.active_brick_count());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return brick_key(grid.brick_coord(a)) < brick_key(grid.brick_coord(b));
  });
  std::vector<double> partial(order.size());
  parallel_for(order.size(), [&](std::size_t i) {
    const auto& block = grid.brick(order[i]);
    std::array<double, kBrickVolume> values;
    for (int k = 0; k < kBrickVolume; ++k) values[static_cast<std::size_t>(k)] = static_cast<double>(block[static_cast<std::size_t>(k)]);
    partial[i] = pairwise_sum(values);
  }, 1);
  for (const auto& [b, v] : grid.sorted_tiles()) partial.push_back(static_cast<double>(v) * kBrickVolume);
  return pairwise_sum(partial);
}

}  // namespace sealvox
