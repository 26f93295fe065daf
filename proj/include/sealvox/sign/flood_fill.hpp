#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "sealvox/sign/sign_field.hpp"

namespace sealvox {

namespace detail {

// Traversal state of whole bricks for region growing across unallocated
// space. One byte per brick of the grid, i.e. (N/8)^3 bytes.
class CoarseBrickState {
 public:
  static constexpr std::uint8_t kEmpty = 0;
  static constexpr std::uint8_t kDense = 1;
  static constexpr std::uint8_t kReached = 2;

  template <class T>
  explicit CoarseBrickState(const SparseGrid<T>& grid)
      : n_(grid.bricks_per_axis()), state_(static_cast<std::size_t>(n_) * n_ * n_, kEmpty) {
    for (const Coord& b : grid.brick_coords()) state_[index(b)] = kDense;
  }

  int bricks_per_axis() const { return n_; }
  std::size_t index(const Coord& b) const {
    return static_cast<std::size_t>(b.x) + static_cast<std::size_t>(n_) * (static_cast<std::size_t>(b.y) + static_cast<std::size_t>(n_) * static_cast<std::size_t>(b.z));
  }
  Coord coord(std::size_t i) const {
    const auto n = static_cast<std::size_t>(n_);
    return {static_cast<int>(i % n), static_cast<int>((i / n) % n), static_cast<int>(i / (n * n))};
  }
  bool in_bounds(const Coord& b) const {
    return b.x >= 0 && b.y >= 0 && b.z >= 0 && b.x < n_ && b.y < n_ && b.z < n_;
  }
  std::uint8_t& operator[](std::size_t i) { return state_[i]; }
  std::uint8_t operator[](std::size_t i) const { return state_[i]; }
  std::size_t size() const { return state_.size(); }

 private:
  int n_;
  std::vector<std::uint8_t> state_;
};

inline constexpr std::uint64_t kBrickNodeFlag = 1ULL << 63;

// Local indices of the 64 voxels on the face of a brick selected by
// (axis, side); side 0 is the low face.
inline std::array<int, 64> face_layer(int axis, int side) {
  std::array<int, 64> out{};
  int k = 0;
  const int u = (axis + 1) % 3;
  const int w = (axis + 2) % 3;
  for (int a = 0; a < kBrickSize; ++a) {
    for (int b = 0; b < kBrickSize; ++b) {
      Coord c;
      c[axis] = side == 0 ? 0 : kBrickSize - 1;
      c[u] = a;
      c[w] = b;
      out[static_cast<std::size_t>(k++)] = local_index(c);
    }
  }
  return out;
}

}  // namespace detail

/// Labels every voxel reachable from the domain boundary through
/// traversable voxels (not occupied, and UDF >= tau*h or FAR) as Exterior,
/// occupied voxels as Occupied, and everything else as Unknown.
inline SignField flood_fill_exterior(const DistanceField& dist, const OccupancyGrid& occ, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("closing radius must be non-negative");
  if (tau > dist.band - 2) throw InvalidArgument("closing radius exceeds the distance band capacity");
  const GridSpec& spec = dist.spec;
  const double threshold = tau * spec.voxel_size();
  const detail::BandTopology topo(dist, occ);
  SignField sf = detail::initial_labels(dist, occ, topo, Label::Unknown);
  auto& labels = sf.labels;
  detail::CoarseBrickState coarse(dist.values);
  const int nb = coarse.bricks_per_axis();

  auto passable = [&](std::size_t brick, int local) {
    return labels.brick(brick)[static_cast<std::size_t>(local)] == Label::Unknown &&
           static_cast<double>(dist.values.brick(brick)[static_cast<std::size_t>(local)]) >= threshold;
  };

  std::deque<std::uint64_t> queue;
  auto reach_voxel = [&](std::size_t brick, int local) {
    if (!passable(brick, local)) return;
    labels.brick(brick)[static_cast<std::size_t>(local)] = Label::Exterior;
    queue.push_back(detail::pack_voxel(brick, local));
  };
  auto reach_brick = [&](const Coord& b) {
    const std::size_t ci = coarse.index(b);
    if (coarse[ci] != detail::CoarseBrickState::kEmpty) return;
    coarse[ci] = detail::CoarseBrickState::kReached;
    queue.push_back(detail::kBrickNodeFlag | ci);
  };

  std::array<std::array<std::array<int, 64>, 2>, 3> layers;
  for (int a = 0; a < 3; ++a) {
    for (int s = 0; s < 2; ++s) layers[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] = detail::face_layer(a, s);
  }

  // Seeds: traversable voxels on the domain faces, and boundary bricks
  // holding no dense data.
  for (std::size_t i = 0; i < labels.active_brick_count(); ++i) {
    const Coord b = labels.brick_coord(i);
    for (int a = 0; a < 3; ++a) {
      if (b[a] == 0) {
        for (const int l : layers[static_cast<std::size_t>(a)][0]) reach_voxel(i, l);
      }
      if (b[a] == nb - 1) {
        for (const int l : layers[static_cast<std::size_t>(a)][1]) reach_voxel(i, l);
      }
    }
  }
  for (int u = 0; u < nb; ++u) {
    for (int w = 0; w < nb; ++w) {
      for (int a = 0; a < 3; ++a) {
        for (const int side : {0, nb - 1}) {
          Coord b;
          b[a] = side;
          b[(a + 1) % 3] = u;
          b[(a + 2) % 3] = w;
          reach_brick(b);
        }
      }
    }
  }
  if (queue.empty()) {
    throw InvalidArgument(
        "no traversable voxel on the domain boundary (the surface or its closing band reaches every boundary "
        "voxel; a larger margin or resolution leaves room)");
  }

  while (!queue.empty()) {
    const std::uint64_t node = queue.front();
    queue.pop_front();
    if (node & detail::kBrickNodeFlag) {
      const Coord b = coarse.coord(static_cast<std::size_t>(node & ~detail::kBrickNodeFlag));
      for (int d = 0; d < 6; ++d) {
        const Coord off = kFaceNeighbors[static_cast<std::size_t>(d)];
        const Coord n = b + off;
        if (!coarse.in_bounds(n)) continue;
        const std::uint8_t st = coarse[coarse.index(n)];
        if (st == detail::CoarseBrickState::kEmpty) {
          reach_brick(n);
        } else if (st == detail::CoarseBrickState::kDense) {
          const auto j = static_cast<std::size_t>(dist.values.find_brick(n));
          const int axis = d / 2;
          // Entering from the low side of n means its low face, and vice versa.
          const int side = (d % 2 == 0) ? 1 : 0;
          for (const int l : layers[static_cast<std::size_t>(axis)][static_cast<std::size_t>(side)]) reach_voxel(j, l);
        }
      }
      continue;
    }
    const std::size_t bi = detail::voxel_brick(node);
    const Coord lc = local_coord(detail::voxel_local(node));
    for (int d = 0; d < 6; ++d) {
      const Coord off = kFaceNeighbors[static_cast<std::size_t>(d)];
      const auto [j, nl] = topo.neighbors.resolve(bi, lc + off);
      if (j == BrickNeighbors::kOutside) continue;
      if (j == BrickNeighbors::kEmpty) {
        reach_brick(labels.brick_coord(bi) + off);
      } else {
        reach_voxel(static_cast<std::size_t>(j), nl);
      }
    }
  }

  for (std::size_t ci = 0; ci < coarse.size(); ++ci) {
    if (coarse[ci] == detail::CoarseBrickState::kEmpty) labels.set_tile(coarse.coord(ci), Label::Unknown);
  }
  return sf;
}

}  // namespace sealvox
