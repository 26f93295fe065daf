#pragma once

#include <cmath>
#include <limits>

#include "sealvox/grid/sparse_grid.hpp"

namespace sealvox {

/// Signed values on a cubic lattice over [-1, 1]^3. Lattice point c sits at
/// origin + c * spacing on each axis. Finite values are exact signed
/// distances (or offsets of them); +/-infinity records only the sign.
/// Unallocated bricks read as their tile or the background (+infinity).
struct ScalarSdf {
  static constexpr float kPositive = std::numeric_limits<float>::infinity();
  static constexpr float kNegative = -std::numeric_limits<float>::infinity();

  int points = 0;
  double origin = -1.0;
  double spacing = 0.0;
  SparseGrid<float> values;

  /// Lattice of voxel corners at `resolution` cells per axis.
  static ScalarSdf corners(int resolution) {
    ScalarSdf s;
    s.points = resolution + 1;
    s.origin = -1.0;
    s.spacing = 2.0 / resolution;
    s.values = SparseGrid<float>(s.points, kPositive);
    return s;
  }

  /// Lattice of voxel centers of an N^3 grid.
  static ScalarSdf centers(const GridSpec& spec) {
    ScalarSdf s;
    s.points = spec.resolution;
    s.spacing = spec.voxel_size();
    s.origin = -1.0 + 0.5 * s.spacing;
    s.values = SparseGrid<float>(s.points, kPositive);
    return s;
  }

  int cells() const { return points - 1; }
  Vec3 position(const Coord& c) const {
    return {origin + c.x * spacing, origin + c.y * spacing, origin + c.z * spacing};
  }
  float at(const Coord& c) const { return values.get(c); }
  bool on_boundary(const Coord& c) const {
    for (int a = 0; a < 3; ++a) {
      if (c[a] == 0 || c[a] == points - 1) return true;
    }
    return false;
  }
};

}  // namespace sealvox
