#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sealvox/grid/morphology.hpp"
#include "sealvox/mesh/bvh.hpp"
#include "sealvox/voxelize/voxelize.hpp"

namespace sealvox {

/// Exact unsigned distance at voxel centers within Chebyshev distance
/// `band` of the occupancy; kFar elsewhere. Dense bricks cover every voxel
/// within band + 1 of the occupancy, so each banded voxel's 6-neighbors
/// live in allocated bricks.
struct DistanceField {
  static constexpr float kFar = std::numeric_limits<float>::infinity();

  GridSpec spec;
  int band = 0;
  SparseGrid<float> values;

  float at(const Coord& v) const { return values.get(v); }
  bool banded(const Coord& v) const { return at(v) != kFar; }
};

/// Band width (voxels) large enough for closing radius tau and thickening
/// half-width delta.
inline int band_for(double tau_close, double thicken_delta) {
  if (!(tau_close >= 0.0) || !(thicken_delta >= 0.0)) throw InvalidArgument("band parameters must be non-negative");
  return std::max({3, static_cast<int>(std::ceil(tau_close)) + 2, static_cast<int>(std::ceil(thicken_delta)) + 2});
}

namespace detail {

// Bricks containing a voxel within Chebyshev distance 1 of a set voxel of
// `mask`, sorted by key.
inline std::vector<Coord> bricks_touching_dilated(const MaskGrid& mask) {
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i < mask.active_brick_count(); ++i) {
    const auto& block = mask.brick(i);
    const Coord b = mask.brick_coord(i);
    // Which brick-boundary layers hold a set voxel, per axis: bit0 low, bit1 high.
    int layers[3] = {0, 0, 0};
    bool any = false;
    for (int l = 0; l < kBrickVolume; ++l) {
      if (!block[static_cast<std::size_t>(l)]) continue;
      any = true;
      const Coord c = local_coord(l);
      for (int a = 0; a < 3; ++a) {
        if (c[a] == 0) layers[a] |= 1;
        if (c[a] == kBrickSize - 1) layers[a] |= 2;
      }
    }
    if (!any) continue;
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int d[3] = {dx, dy, dz};
          bool reach = true;
          for (int a = 0; a < 3 && reach; ++a) {
            if (d[a] == -1) reach = (layers[a] & 1) != 0;
            if (d[a] == 1) reach = (layers[a] & 2) != 0;
          }
          // Per-axis flags over-approximate diagonal reach; extra bricks hold only kFar.
          const Coord nb = b + Coord{dx, dy, dz};
          if (reach && mask.brick_in_bounds(nb)) keys.push_back(brick_key(nb));
        }
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Coord> out;
  out.reserve(keys.size());
  for (const std::uint64_t k : keys) out.push_back(brick_from_key(k));
  return out;
}

}  // namespace detail

/// Exact narrow-band UDF via BVH closest-point queries.
inline DistanceField compute_udf(const TriangleBVH& bvh, const OccupancyGrid& occ, int band) {
  if (band < 2) throw InvalidArgument("UDF band must be at least 2 voxels");
  const GridSpec& spec = occ.spec;
  const double h = spec.voxel_size();

  const MaskGrid near = dilate_mask(occ.mask, band);
  const std::vector<Coord> bricks = detail::bricks_touching_dilated(near);

  DistanceField df;
  df.spec = spec;
  df.band = band;
  df.values = SparseGrid<float>(spec.resolution, DistanceField::kFar);
  df.values.reserve(bricks.size());
  for (const Coord& b : bricks) df.values.ensure_brick(b);

  const double max_distance = (band + 1) * h * std::sqrt(3.0);
  df.values.for_each_brick_parallel([&](std::size_t, const Coord& b, SparseGrid<float>::Block& block) {
    const std::int64_t ni = near.find_brick(b);
    if (ni < 0) return;
    const auto& near_block = near.brick(static_cast<std::size_t>(ni));
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      if (!near_block[static_cast<std::size_t>(l)]) continue;
      const ClosestHit hit = bvh.closest_point(spec.voxel_center(origin + local_coord(l)), max_distance);
      block[static_cast<std::size_t>(l)] = hit.found() ? static_cast<float>(hit.distance) : DistanceField::kFar;
    }
  });
  return df;
}

inline DistanceField compute_udf(const TriangleMesh& mesh, const OccupancyGrid& occ, int band) {
  return compute_udf(TriangleBVH(mesh), occ, band);
}

}  // namespace sealvox
