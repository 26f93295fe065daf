#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sealvox/grid/morphology.hpp"
#include "sealvox/grid/sparse_grid.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

/// Half-width added to every voxel box before the overlap test, so faces
/// that exactly touch a voxel still mark it.
inline constexpr double kBoxInflation = 1e-9;

/// Separating-axis test between a triangle and the axis-aligned box with
/// the given center and half extents (Akenine-Moeller's 13 axes).
inline bool triangle_box_overlap(const Vec3& center, const Vec3& half, const std::array<Vec3, 3>& tri) {
  const Vec3 v[3] = {tri[0] - center, tri[1] - center, tri[2] - center};

  for (int a = 0; a < 3; ++a) {
    const double lo = std::min(v[0][a], std::min(v[1][a], v[2][a]));
    const double hi = std::max(v[0][a], std::max(v[1][a], v[2][a]));
    if (lo > half[a] || hi < -half[a]) return false;
  }

  const Vec3 f[3] = {v[1] - v[0], v[2] - v[1], v[0] - v[2]};
  for (int i = 0; i < 3; ++i) {
    Vec3 e{};
    e[i] = 1.0;
    for (const Vec3& edge : f) {
      const Vec3 axis = cross(e, edge);
      const double p0 = dot(v[0], axis);
      const double p1 = dot(v[1], axis);
      const double p2 = dot(v[2], axis);
      const double r = half.x * std::abs(axis.x) + half.y * std::abs(axis.y) + half.z * std::abs(axis.z);
      if (std::min(p0, std::min(p1, p2)) > r || std::max(p0, std::max(p1, p2)) < -r) return false;
    }
  }

  const Vec3 n = cross(f[0], f[1]);
  const double d = dot(n, v[0]);
  const double r = half.x * std::abs(n.x) + half.y * std::abs(n.y) + half.z * std::abs(n.z);
  return std::abs(d) <= r;
}

/// Voxels touched by the surface, with the faces touching each voxel.
/// Face lists are stored CSR-style: voxel v's faces are
/// faces[offsets[s] .. offsets[s + 1]) where s = slot.get(v).
struct OccupancyGrid {
  static constexpr std::uint32_t kNoSlot = UINT32_MAX;

  GridSpec spec;
  MaskGrid mask;
  SparseGrid<std::uint32_t> slot;
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> faces;
  std::vector<Coord> slot_voxels;  // voxel of each slot, in z-major order

  std::size_t occupied_count() const { return slot_voxels.size(); }
  bool occupied(const Coord& v) const { return mask.get(v) != 0; }

  std::span<const std::uint32_t> faces_at(const Coord& v) const {
    const std::uint32_t s = slot.get(v);
    if (s == kNoSlot) return {};
    return faces_in_slot(s);
  }
  std::span<const std::uint32_t> faces_in_slot(std::uint32_t s) const {
    return std::span<const std::uint32_t>(faces).subspan(offsets[s], offsets[s + 1] - offsets[s]);
  }
};

namespace detail {

struct VoxelRange {
  int lo[3];
  int hi[3];  // inclusive
};

// Emits every voxel in `range` whose (inflated) cube overlaps `tri` by
// recursive halving, so cost follows the triangle's area, not its box.
template <class Emit>
void rasterize_range(const GridSpec& spec, const std::array<Vec3, 3>& tri, const VoxelRange& range, Emit&& emit) {
  const double h = spec.voxel_size();
  Vec3 center;
  Vec3 half;
  for (int a = 0; a < 3; ++a) {
    const double lo = -1.0 + range.lo[a] * h;
    const double hi = -1.0 + (range.hi[a] + 1) * h;
    center[a] = 0.5 * (lo + hi);
    half[a] = 0.5 * (hi - lo) + kBoxInflation;
  }
  if (!triangle_box_overlap(center, half, tri)) return;
  int axis = 0;
  int widest = -1;
  for (int a = 0; a < 3; ++a) {
    const int w = range.hi[a] - range.lo[a];
    if (w > widest) {
      widest = w;
      axis = a;
    }
  }
  if (widest == 0) {
    emit(Coord{range.lo[0], range.lo[1], range.lo[2]});
    return;
  }
  const int mid = (range.lo[axis] + range.hi[axis]) / 2;
  VoxelRange left = range;
  VoxelRange right = range;
  left.hi[axis] = mid;
  right.lo[axis] = mid + 1;
  rasterize_range(spec, tri, left, emit);
  rasterize_range(spec, tri, right, emit);
}

inline void check_inside_domain(const TriangleMesh& mesh) {
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    if (!(std::abs(p.x) <= 1.0 && std::abs(p.y) <= 1.0 && std::abs(p.z) <= 1.0)) {
      throw InvalidArgument("vertex " + std::to_string(i) + " at (" + std::to_string(p.x) + ", " +
                            std::to_string(p.y) + ", " + std::to_string(p.z) + ") lies outside [-1, 1]^3");
    }
  }
}

}  // namespace detail

/// Conservative surface voxelization: a voxel is occupied iff some face
/// overlaps its closed cube (inflated by kBoxInflation).
inline OccupancyGrid voxelize_surface(const TriangleMesh& mesh, const GridSpec& spec_in) {
  const GridSpec spec = GridSpec::make(spec_in.resolution);
  detail::check_inside_domain(mesh);
  if (mesh.faces.size() >= (1u << 31)) throw InvalidArgument("too many faces");

  const int n = spec.resolution;
  const double inv_h = n / 2.0;
  // (linear voxel index << 31 | face), sorted, identifies every overlap.
  constexpr std::size_t kGrain = 256;
  const std::size_t chunks = (mesh.faces.size() + kGrain - 1) / kGrain;
  std::vector<std::vector<std::uint64_t>> per_chunk(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto& out = per_chunk[c];
    const std::size_t end = std::min(mesh.faces.size(), (c + 1) * kGrain);
    for (std::size_t f = c * kGrain; f < end; ++f) {
      const auto tri = mesh.triangle(f);
      detail::VoxelRange range;
      for (int a = 0; a < 3; ++a) {
        const double lo = std::min(tri[0][a], std::min(tri[1][a], tri[2][a]));
        const double hi = std::max(tri[0][a], std::max(tri[1][a], tri[2][a]));
        range.lo[a] = std::clamp(static_cast<int>(std::floor((lo + 1.0 - kBoxInflation) * inv_h)), 0, n - 1);
        range.hi[a] = std::clamp(static_cast<int>(std::floor((hi + 1.0 + kBoxInflation) * inv_h)), 0, n - 1);
      }
      detail::rasterize_range(spec, tri, range, [&](const Coord& v) {
        const std::uint64_t linear =
            static_cast<std::uint64_t>(v.x) +
            static_cast<std::uint64_t>(n) * (static_cast<std::uint64_t>(v.y) + static_cast<std::uint64_t>(n) * v.z);
        out.push_back((linear << 31) | f);
      });
    }
  }, 1);

  std::size_t total = 0;
  for (const auto& v : per_chunk) total += v.size();
  std::vector<std::uint64_t> pairs;
  pairs.reserve(total);
  for (auto& v : per_chunk) {
    pairs.insert(pairs.end(), v.begin(), v.end());
    std::vector<std::uint64_t>().swap(v);
  }
  std::sort(pairs.begin(), pairs.end());

  OccupancyGrid occ;
  occ.spec = spec;
  occ.mask = create_grid<std::uint8_t>(spec, 0);
  occ.slot = create_grid<std::uint32_t>(spec, OccupancyGrid::kNoSlot);
  occ.faces.reserve(pairs.size());
  std::uint64_t current = UINT64_MAX;
  for (const std::uint64_t p : pairs) {
    const std::uint64_t linear = p >> 31;
    if (linear != current) {
      current = linear;
      const Coord v{static_cast<int>(linear % static_cast<std::uint64_t>(n)),
                    static_cast<int>((linear / static_cast<std::uint64_t>(n)) % static_cast<std::uint64_t>(n)),
                    static_cast<int>(linear / (static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n)))};
      if (occ.faces.size() > 0) occ.offsets.push_back(static_cast<std::uint32_t>(occ.faces.size()));
      occ.mask.set(v, 1);
      occ.slot.set(v, static_cast<std::uint32_t>(occ.slot_voxels.size()));
      occ.slot_voxels.push_back(v);
    }
    occ.faces.push_back(static_cast<std::uint32_t>(p & 0x7fffffffu));
  }
  if (!occ.faces.empty()) occ.offsets.push_back(static_cast<std::uint32_t>(occ.faces.size()));
  occ.mask.sort_bricks();
  occ.slot.sort_bricks();
  return occ;
}

}  // namespace sealvox
