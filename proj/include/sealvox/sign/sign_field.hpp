#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sealvox/grid/sparse_grid.hpp"
#include "sealvox/voxelize/udf.hpp"
#include "sealvox/voxelize/voxelize.hpp"

namespace sealvox {

enum class Label : std::uint8_t { Exterior = 0, Interior = 1, Occupied = 2, Unknown = 3 };

inline std::string_view label_name(Label l) {
  switch (l) {
    case Label::Exterior: return "exterior";
    case Label::Interior: return "interior";
    case Label::Occupied: return "occupied";
    case Label::Unknown: return "unknown";
  }
  return "?";
}

/// Per-voxel inside/outside labels. Dense bricks mirror the DistanceField
/// bricks (same coordinates, same order); other bricks are uniform tiles or
/// the Exterior background.
struct SignField {
  GridSpec spec;
  SparseGrid<Label> labels;

  Label at(const Coord& v) const { return labels.get(v); }

  /// Voxel count per label (tiles expanded, background counted as Exterior).
  std::array<std::uint64_t, 4> histogram() const {
    std::vector<std::array<std::uint64_t, 4>> per(labels.active_brick_count());
    labels.for_each_brick_parallel([&](std::size_t i, const Coord&, const SparseGrid<Label>::Block& b) {
      per[i] = {0, 0, 0, 0};
      for (const Label l : b) ++per[i][static_cast<std::size_t>(l)];
    });
    std::array<std::uint64_t, 4> out{0, 0, 0, 0};
    for (const auto& p : per) {
      for (std::size_t k = 0; k < 4; ++k) out[k] += p[k];
    }
    std::uint64_t tiled = 0;
    for (const auto& [b, l] : labels.sorted_tiles()) {
      out[static_cast<std::size_t>(l)] += kBrickVolume;
      tiled += kBrickVolume;
    }
    const auto n = static_cast<std::uint64_t>(spec.resolution);
    out[0] += n * n * n - tiled - static_cast<std::uint64_t>(labels.active_brick_count()) * kBrickVolume;
    return out;
  }

  std::uint64_t count(Label l) const { return histogram()[static_cast<std::size_t>(l)]; }
};

namespace detail {

// Dense-brick adjacency for a DistanceField plus, per brick, the index of
// the matching occupancy-mask brick (or -1).
struct BandTopology {
  BrickNeighbors neighbors;
  std::vector<std::int64_t> occ_brick;

  BandTopology(const DistanceField& df, const OccupancyGrid& occ) : neighbors(df.values) {
    occ_brick.resize(df.values.active_brick_count());
    for (std::size_t i = 0; i < occ_brick.size(); ++i) occ_brick[i] = occ.mask.find_brick(df.values.brick_coord(i));
  }
};

// (brick index << 9 | local index) handle for a voxel in a dense brick.
inline constexpr std::uint64_t pack_voxel(std::size_t brick, int local) {
  return (static_cast<std::uint64_t>(brick) << 9) | static_cast<std::uint64_t>(local);
}
inline constexpr std::size_t voxel_brick(std::uint64_t h) { return static_cast<std::size_t>(h >> 9); }
inline constexpr int voxel_local(std::uint64_t h) { return static_cast<int>(h & 511u); }

inline SignField initial_labels(const DistanceField& df, const OccupancyGrid& occ, const BandTopology& topo,
                                Label free_label) {
  SignField sf;
  sf.spec = df.spec;
  sf.labels = grid_with_same_bricks<Label>(df.values, free_label, Label::Exterior);
  sf.labels.for_each_brick_parallel([&](std::size_t i, const Coord&, SparseGrid<Label>::Block& block) {
    if (topo.occ_brick[i] < 0) return;
    const auto& m = occ.mask.brick(static_cast<std::size_t>(topo.occ_brick[i]));
    for (int l = 0; l < kBrickVolume; ++l) {
      if (m[static_cast<std::size_t>(l)]) block[static_cast<std::size_t>(l)] = Label::Occupied;
    }
  });
  return sf;
}

}  // namespace detail

}  // namespace sealvox
