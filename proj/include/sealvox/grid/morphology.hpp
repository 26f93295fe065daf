#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sealvox/grid/sparse_grid.hpp"

namespace sealvox {

using MaskGrid = SparseGrid<std::uint8_t>;

namespace detail {

// Source brick along a line: either a dense block or a uniform value.
struct BrickView {
  const MaskGrid::Block* block = nullptr;
  std::uint8_t uniform = 0;
  std::uint8_t at(int local) const { return block ? (*block)[static_cast<std::size_t>(local)] : uniform; }
};

inline BrickView view_brick(const MaskGrid& g, const Coord& b) {
  if (!g.brick_in_bounds(b)) return {nullptr, 0};
  const std::int64_t i = g.find_brick(b);
  if (i >= 0) return {&g.brick(static_cast<std::size_t>(i)), 0};
  if (const auto t = g.tile(b)) return {nullptr, static_cast<std::uint8_t>(*t != 0)};
  return {nullptr, static_cast<std::uint8_t>(g.background() != 0)};
}

inline bool block_any(const MaskGrid::Block& b) {
  return std::any_of(b.begin(), b.end(), [](std::uint8_t v) { return v != 0; });
}

// One separable pass: out(v) = OR of src over [v - r, v + r] along `axis`.
inline MaskGrid dilate_axis(const MaskGrid& src, int axis, int r) {
  MaskGrid out(src.extent(), 0);
  const int reach = (r + kBrickSize - 1) / kBrickSize;

  std::vector<std::uint64_t> keys;
  auto add_span = [&](const Coord& b) {
    for (int t = -reach; t <= reach; ++t) {
      Coord nb = b;
      nb[axis] += t;
      if (src.brick_in_bounds(nb)) keys.push_back(brick_key(nb));
    }
  };
  for (std::size_t i = 0; i < src.active_brick_count(); ++i) {
    if (block_any(src.brick(i))) add_span(src.brick_coord(i));
  }
  for (const auto& [b, v] : src.sorted_tiles()) {
    if (v != 0) add_span(b);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  out.reserve(keys.size());
  for (const std::uint64_t k : keys) out.ensure_brick(brick_from_key(k));

  const int u_axis = (axis + 1) % 3;
  const int v_axis = (axis + 2) % 3;
  const int span = 2 * reach + 1;
  out.for_each_brick_parallel([&](std::size_t, const Coord& b, MaskGrid::Block& block) {
    std::vector<BrickView> views(static_cast<std::size_t>(span));
    for (int t = -reach; t <= reach; ++t) {
      Coord nb = b;
      nb[axis] += t;
      views[static_cast<std::size_t>(t + reach)] = view_brick(src, nb);
    }
    // line holds src values at brick-relative axis positions [-8*reach, 8*(reach+1)).
    std::vector<int> prefix(static_cast<std::size_t>(span * kBrickSize + 1));
    for (int u = 0; u < kBrickSize; ++u) {
      for (int v = 0; v < kBrickSize; ++v) {
        Coord l;
        l[u_axis] = u;
        l[v_axis] = v;
        prefix[0] = 0;
        for (int p = 0; p < span * kBrickSize; ++p) {
          l[axis] = p % kBrickSize;
          prefix[static_cast<std::size_t>(p + 1)] =
              prefix[static_cast<std::size_t>(p)] + views[static_cast<std::size_t>(p / kBrickSize)].at(local_index(l));
        }
        for (int a = 0; a < kBrickSize; ++a) {
          const int center = a + reach * kBrickSize;
          const int lo = std::max(0, center - r);
          const int hi = std::min(span * kBrickSize, center + r + 1);
          l[axis] = a;
          block[static_cast<std::size_t>(local_index(l))] =
              prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)] > 0 ? 1 : 0;
        }
      }
    }
  });
  return out;
}

}  // namespace detail

/// Chebyshev dilation: output holds every voxel within distance r of a set
/// input voxel, clipped to the grid. Bricks with no set voxel are dropped
/// and the rest are sorted by brick key.
inline MaskGrid dilate_mask(const MaskGrid& mask, int r) {
  if (r < 0) throw InvalidArgument("dilation radius must be non-negative");
  if (mask.background() != 0) throw InvalidArgument("dilate_mask expects a zero background");
  MaskGrid a = detail::dilate_axis(mask, 0, r);
  MaskGrid b = detail::dilate_axis(a, 1, r);
  a = MaskGrid();
  MaskGrid c = detail::dilate_axis(b, 2, r);
  c.retain_bricks([](const MaskGrid::Block& blk) { return detail::block_any(blk); });
  c.sort_bricks();
  return c;
}

/// Number of set voxels, tiles included.
inline std::uint64_t count_set(const MaskGrid& mask) {
  std::vector<std::uint64_t> per_brick(mask.active_brick_count());
  mask.for_each_brick_parallel([&](std::size_t i, const Coord&, const MaskGrid::Block& b) {
    per_brick[i] = static_cast<std::uint64_t>(std::count_if(b.begin(), b.end(), [](std::uint8_t v) { return v != 0; }));
  });
  std::uint64_t total = 0;
  for (const std::uint64_t c : per_brick) total += c;
  for (const auto& [b, v] : mask.sorted_tiles()) {
    if (v != 0) total += kBrickVolume;
  }
  return total;
}

}  // namespace sealvox
