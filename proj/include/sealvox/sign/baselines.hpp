#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <vector>

#include "sealvox/extract/scalar_sdf.hpp"
#include "sealvox/mesh/bvh.hpp"
#include "sealvox/sign/flood_fill.hpp"

namespace sealvox {

/// Pseudo-SDF on the voxel-center lattice: UDF - epsilon*h on banded
/// voxels, +infinity elsewhere. Exact zeros become +1e-9*h, and lattice
/// points on the grid boundary are clamped to that value when negative so
/// every extracted surface closes.
inline ScalarSdf baseline_pseudo_sdf(const DistanceField& dist, double epsilon) {
  if (!(epsilon > 0.0) || epsilon > dist.band - 1) {
    throw InvalidArgument("pseudo-SDF offset must lie in (0, band - 1]");
  }
  const double h = dist.spec.voxel_size();
  const double offset = epsilon * h;
  const double nudge = 1e-9 * h;
  ScalarSdf sdf = ScalarSdf::centers(dist.spec);
  sdf.values = grid_with_same_bricks<float>(dist.values, ScalarSdf::kPositive, ScalarSdf::kPositive);
  sdf.values.for_each_brick_parallel([&](std::size_t i, const Coord& b, SparseGrid<float>::Block& block) {
    const auto& d = dist.values.brick(i);
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      const auto s = static_cast<std::size_t>(l);
      if (d[s] == DistanceField::kFar) continue;
      double v = static_cast<double>(d[s]) - offset;
      if (v == 0.0 || (v < 0.0 && sdf.on_boundary(origin + local_coord(l)))) v = nudge;
      block[s] = static_cast<float>(v);
    }
  });
  return sdf;
}

/// Fixed ray directions for visibility voting: the 6 axis directions, the
/// 20 vertices of a regular dodecahedron (icosahedron face directions),
/// then a Fibonacci spiral for counts beyond 26.
inline std::vector<Vec3> visibility_directions(int k) {
  std::vector<Vec3> dirs = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  const double phi = std::numbers::phi;
  for (const int sx : {1, -1}) {
    for (const int sy : {1, -1}) {
      for (const int sz : {1, -1}) dirs.push_back(normalized(Vec3{double(sx), double(sy), double(sz)}));
    }
  }
  for (const int s1 : {1, -1}) {
    for (const int s2 : {1, -1}) {
      dirs.push_back(normalized(Vec3{0.0, s1 / phi, s2 * phi}));
      dirs.push_back(normalized(Vec3{s1 / phi, s2 * phi, 0.0}));
      dirs.push_back(normalized(Vec3{s1 * phi, 0.0, s2 / phi}));
    }
  }
  const int extra = k - static_cast<int>(dirs.size());
  for (int i = 0; i < extra; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / extra;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = 2.0 * std::numbers::pi * i / (phi * phi);
    dirs.push_back({r * std::cos(theta), r * std::sin(theta), z});
  }
  dirs.resize(static_cast<std::size_t>(k));
  return dirs;
}

/// Ray-parity visibility labels. Each banded non-occupied voxel casts the
/// K fixed rays and is Interior iff more than K/2 rays cross the surface an
/// odd number of times. Each 6-connected region of FAR voxels and
/// unallocated bricks takes the vote of its first node in scan order.
inline SignField baseline_visibility_signs(const TriangleBVH& bvh, const OccupancyGrid& occ,
                                           const DistanceField& dist, int k) {
  if (k < 6) throw InvalidArgument("visibility needs at least 6 rays");
  const std::vector<Vec3> dirs = visibility_directions(k);
  const GridSpec& spec = dist.spec;
  const detail::BandTopology topo(dist, occ);
  SignField sf = detail::initial_labels(dist, occ, topo, Label::Unknown);
  auto& labels = sf.labels;

  auto vote = [&](const Vec3& p) { return bvh.inside_by_parity(p, dirs) ? Label::Interior : Label::Exterior; };

  labels.for_each_brick_parallel([&](std::size_t i, const Coord& b, SparseGrid<Label>::Block& block) {
    const auto& d = dist.values.brick(i);
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      const auto s = static_cast<std::size_t>(l);
      if (block[s] == Label::Occupied || d[s] == DistanceField::kFar) continue;
      block[s] = vote(spec.voxel_center(origin + local_coord(l)));
    }
  });

  // Far regions: FAR voxels (still Unknown) and unallocated bricks.
  detail::CoarseBrickState coarse(dist.values);
  std::deque<std::uint64_t> queue;
  auto flood = [&](Label label) {
    while (!queue.empty()) {
      const std::uint64_t node = queue.front();
      queue.pop_front();
      if (node & detail::kBrickNodeFlag) {
        const Coord b = coarse.coord(static_cast<std::size_t>(node & ~detail::kBrickNodeFlag));
        if (label != Label::Exterior) labels.set_tile(b, label);
        for (int dir = 0; dir < 6; ++dir) {
          const Coord n = b + kFaceNeighbors[static_cast<std::size_t>(dir)];
          if (!coarse.in_bounds(n)) continue;
          const std::size_t ci = coarse.index(n);
          if (coarse[ci] == detail::CoarseBrickState::kEmpty) {
            coarse[ci] = detail::CoarseBrickState::kReached;
            queue.push_back(detail::kBrickNodeFlag | ci);
          } else if (coarse[ci] == detail::CoarseBrickState::kDense) {
            const auto j = static_cast<std::size_t>(dist.values.find_brick(n));
            for (const int l : detail::face_layer(dir / 2, dir % 2 == 0 ? 1 : 0)) {
              auto& lab = labels.brick(j)[static_cast<std::size_t>(l)];
              if (lab != Label::Unknown) continue;
              lab = label;
              queue.push_back(detail::pack_voxel(j, l));
            }
          }
        }
        continue;
      }
      const std::size_t bi = detail::voxel_brick(node);
      const Coord lc = local_coord(detail::voxel_local(node));
      for (const Coord& off : kFaceNeighbors) {
        const auto [j, nl] = topo.neighbors.resolve(bi, lc + off);
        if (j == BrickNeighbors::kOutside) continue;
        if (j == BrickNeighbors::kEmpty) {
          const std::size_t ci = coarse.index(labels.brick_coord(bi) + off);
          if (coarse[ci] != detail::CoarseBrickState::kEmpty) continue;
          coarse[ci] = detail::CoarseBrickState::kReached;
          queue.push_back(detail::kBrickNodeFlag | ci);
          continue;
        }
        auto& lab = labels.brick(static_cast<std::size_t>(j))[static_cast<std::size_t>(nl)];
        if (lab != Label::Unknown) continue;
        lab = label;
        queue.push_back(detail::pack_voxel(static_cast<std::size_t>(j), nl));
      }
    }
  };

  for (std::size_t i = 0; i < labels.active_brick_count(); ++i) {
    const Coord origin = brick_origin(labels.brick_coord(i));
    for (int l = 0; l < kBrickVolume; ++l) {
      auto& lab = labels.brick(i)[static_cast<std::size_t>(l)];
      if (lab != Label::Unknown) continue;
      lab = vote(spec.voxel_center(origin + local_coord(l)));
      queue.push_back(detail::pack_voxel(i, l));
      flood(lab);
    }
  }
  for (std::size_t ci = 0; ci < coarse.size(); ++ci) {
    if (coarse[ci] != detail::CoarseBrickState::kEmpty) continue;
    coarse[ci] = detail::CoarseBrickState::kReached;
    const Label label = vote(spec.voxel_center(brick_origin(coarse.coord(ci)) + Coord{4, 4, 4}));
    queue.push_back(detail::kBrickNodeFlag | ci);
    flood(label);
  }
  return sf;
}

}  // namespace sealvox
