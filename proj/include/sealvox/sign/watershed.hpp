#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sealvox/sign/flood_fill.hpp"

namespace sealvox {

/// Distance quantum of the watershed buckets, as a fraction of h.
inline constexpr int kWatershedBucketsPerVoxel = 16;

/// Completes a partial labeling from flood_fill_exterior. Unknown voxels
/// with UDF >= tau*h (or FAR) become Interior seeds. The remaining moat is
/// flooded bucket by bucket in decreasing UDF: within a bucket, rounds
/// label every Unknown voxel adjacent to an already-labeled one, Exterior
/// if any labeled 6-neighbor is Exterior, else Interior. Each round reads
/// only labels committed before it. Moat voxels never reached are Interior.
inline SignField watershed_assign(const DistanceField& dist, const SignField& partial, double tau) {
  const GridSpec& spec = dist.spec;
  const double h = spec.voxel_size();
  const double threshold = tau * h;
  const double quantum = h / kWatershedBucketsPerVoxel;
  SignField sf = partial;
  auto& labels = sf.labels;
  if (labels.active_brick_count() != dist.values.active_brick_count()) {
    throw InvalidArgument("sign field does not match the distance field layout");
  }
  const BrickNeighbors neighbors(labels);

  for (const auto& [b, l] : labels.sorted_tiles()) {
    if (l == Label::Unknown) labels.set_tile(b, Label::Interior);
  }

  auto bucket_of = [&](float d) { return static_cast<int>(std::floor(static_cast<double>(d) / quantum)); };

  // Seeds, then moat voxels grouped by bucket.
  std::vector<std::vector<std::uint64_t>> moat_per_brick(labels.active_brick_count());
  labels.for_each_brick_parallel([&](std::size_t i, const Coord&, SparseGrid<Label>::Block& block) {
    const auto& d = dist.values.brick(i);
    for (int l = 0; l < kBrickVolume; ++l) {
      const auto s = static_cast<std::size_t>(l);
      if (block[s] != Label::Unknown) continue;
      if (static_cast<double>(d[s]) >= threshold) {
        block[s] = Label::Interior;
      } else {
        moat_per_brick[i].push_back(detail::pack_voxel(i, l));
      }
    }
  });
  int max_bucket = -1;
  for (const auto& v : moat_per_brick) {
    for (const std::uint64_t m : v) {
      max_bucket = std::max(max_bucket, bucket_of(dist.values.brick(detail::voxel_brick(m))[static_cast<std::size_t>(detail::voxel_local(m))]));
    }
  }
  std::vector<std::vector<std::uint64_t>> buckets(static_cast<std::size_t>(max_bucket + 1));
  for (const auto& v : moat_per_brick) {
    for (const std::uint64_t m : v) {
      const float d = dist.values.brick(detail::voxel_brick(m))[static_cast<std::size_t>(detail::voxel_local(m))];
      buckets[static_cast<std::size_t>(bucket_of(d))].push_back(m);
    }
  }
  moat_per_brick.clear();

  auto label_at = [&](std::size_t brick, int local) { return labels.brick(brick)[static_cast<std::size_t>(local)]; };

  // Decision for an Unknown voxel from its committed neighbors; Unknown if
  // no neighbor is labeled yet.
  auto decide = [&](std::uint64_t m) {
    const std::size_t bi = detail::voxel_brick(m);
    const Coord lc = local_coord(detail::voxel_local(m));
    bool interior = false;
    for (const Coord& off : kFaceNeighbors) {
      const auto [j, nl] = neighbors.resolve(bi, lc + off);
      Label nlab;
      if (j == BrickNeighbors::kOutside) {
        continue;
      } else if (j == BrickNeighbors::kEmpty) {
        nlab = *labels.uniform_value(labels.brick_coord(bi) + off);
      } else {
        nlab = label_at(static_cast<std::size_t>(j), nl);
      }
      if (nlab == Label::Exterior) return Label::Exterior;
      if (nlab == Label::Interior) interior = true;
    }
    return interior ? Label::Interior : Label::Unknown;
  };

  std::vector<Label> decisions;
  std::vector<std::uint64_t> frontier;
  std::vector<std::uint64_t> next;
  for (int b = max_bucket; b >= 0; --b) {
    frontier = std::move(buckets[static_cast<std::size_t>(b)]);
    while (!frontier.empty()) {
      decisions.assign(frontier.size(), Label::Unknown);
      parallel_for(frontier.size(), [&](std::size_t k) {
        if (label_at(detail::voxel_brick(frontier[k]), detail::voxel_local(frontier[k])) == Label::Unknown) {
          decisions[k] = decide(frontier[k]);
        }
      }, 1024);
      next.clear();
      for (std::size_t k = 0; k < frontier.size(); ++k) {
        if (decisions[k] == Label::Unknown) continue;
        const std::uint64_t m = frontier[k];
        const std::size_t bi = detail::voxel_brick(m);
        labels.brick(bi)[static_cast<std::size_t>(detail::voxel_local(m))] = decisions[k];
        const Coord lc = local_coord(detail::voxel_local(m));
        for (const Coord& off : kFaceNeighbors) {
          const auto [j, nl] = neighbors.resolve(bi, lc + off);
          if (j < 0) continue;
          const auto jb = static_cast<std::size_t>(j);
          if (label_at(jb, nl) != Label::Unknown) continue;
          if (bucket_of(dist.values.brick(jb)[static_cast<std::size_t>(nl)]) < b) continue;
          next.push_back(detail::pack_voxel(jb, nl));
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      frontier.swap(next);
    }
  }

  labels.for_each_brick_parallel([&](std::size_t, const Coord&, SparseGrid<Label>::Block& block) {
    for (Label& l : block) {
      if (l == Label::Unknown) l = Label::Interior;
    }
  });
  return sf;
}

}  // namespace sealvox
