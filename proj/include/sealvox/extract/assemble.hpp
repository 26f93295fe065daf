#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sealvox/extract/scalar_sdf.hpp"
#include "sealvox/mesh/bvh.hpp"
#include "sealvox/sign/open_surface.hpp"
#include "sealvox/sign/sign_field.hpp"

namespace sealvox {

struct AssembleParams {
  double thicken_delta = 1.5;  // voxels; offset applied around open components
  int extract_resolution = 0;  // cells per axis of the output lattice; 0 = grid resolution
};

namespace detail {

inline bool sign_negative(float v) { return v < 0.0f; }

// Region (Exterior or Interior) of the fine lattice corner f, from its 8
// adjacent voxels. Corners touching occupied voxels take the majority label
// of the adjacent free voxels whose centers they can see (the segment to the
// center crosses no face), widening to the surrounding 4^3 block if none is
// visible, and to the plain majority of that block if still none is. Ties
// go to Exterior.
class CornerClassifier {
 public:
  CornerClassifier(const SignField& sign, const TriangleBVH& bvh) : spec_(sign.spec), labels_(sign.labels), bvh_(&bvh) {}

  Label classify(const Coord& f) {
    const int n = spec_.resolution;
    for (int a = 0; a < 3; ++a) {
      if (f[a] <= 0 || f[a] >= n) return Label::Exterior;
    }
    std::array<Coord, 8> vox;
    std::array<Label, 8> lab;
    int exterior = 0;
    int interior = 0;
    int occupied = 0;
    for (int i = 0; i < 8; ++i) {
      vox[static_cast<std::size_t>(i)] = f + Coord{(i & 1) - 1, ((i >> 1) & 1) - 1, ((i >> 2) & 1) - 1};
      const Label l = labels_.get(vox[static_cast<std::size_t>(i)]);
      lab[static_cast<std::size_t>(i)] = l;
      if (l == Label::Exterior) ++exterior;
      if (l == Label::Interior) ++interior;
      if (l == Label::Occupied) ++occupied;
      if (l == Label::Unknown) throw InvalidArgument("sign field still holds Unknown voxels");
    }
    if (occupied == 0) return interior > exterior ? Label::Interior : Label::Exterior;

    const Vec3 p = spec_.corner(f);
    candidates_.clear();
    for (std::size_t i = 0; i < 8; ++i) {
      if (lab[i] != Label::Occupied) candidates_.push_back({vox[i], lab[i]});
    }
    if (auto r = vote(p)) return *r;
    candidates_.clear();
    for (int dz = -2; dz <= 1; ++dz) {
      for (int dy = -2; dy <= 1; ++dy) {
        for (int dx = -2; dx <= 1; ++dx) {
          if (dx >= -1 && dx <= 0 && dy >= -1 && dy <= 0 && dz >= -1 && dz <= 0) continue;
          const Coord v = f + Coord{dx, dy, dz};
          if (!spec_.contains(v)) continue;
          const Label l = labels_.get(v);
          if (l == Label::Exterior || l == Label::Interior) candidates_.push_back({v, l});
        }
      }
    }
    if (auto r = vote(p)) return *r;
    // Nothing visible, e.g. between interpenetrating surfaces: plain majority.
    int in = 0;
    for (const Candidate& c : candidates_) in += c.label == Label::Interior ? 1 : 0;
    return 2 * in > static_cast<int>(candidates_.size()) ? Label::Interior : Label::Exterior;
  }

 private:
  struct Candidate {
    Coord voxel;
    Label label;
  };

  std::optional<Label> vote(const Vec3& p) {
    if (candidates_.empty()) return std::nullopt;
    const bool uniform = std::all_of(candidates_.begin(), candidates_.end(),
                                     [&](const Candidate& c) { return c.label == candidates_.front().label; });
    int ext = 0;
    int in = 0;
    for (const Candidate& c : candidates_) {
      if (bvh_->segment_hits(p, spec_.voxel_center(c.voxel))) continue;
      if (uniform) return c.label;
      (c.label == Label::Interior ? in : ext) += 1;
    }
    if (ext + in == 0) return std::nullopt;
    return in > ext ? Label::Interior : Label::Exterior;
  }

  GridSpec spec_;
  GridReader<Label> labels_;
  const TriangleBVH* bvh_;
  std::vector<Candidate> candidates_;
};

struct CornerRange {
  int lo;
  int hi;
};

// Lattice corners (at stride k) touched by fine voxels [v0, v1] on one axis.
inline CornerRange corners_of_voxels(int v0, int v1, int k, int m) {
  return {std::max(0, v0 / k), std::min(m, v1 / k + 1)};
}

}  // namespace detail

/// Signed field on the voxel-corner lattice at the extraction resolution M
/// (M must divide N). Every corner gets a sign from the labels; corners on
/// sign-change lattice edges get exact values: +/- BVH distance, or
/// distance - delta*h next to open components. Other corners store only
/// their sign as +/-infinity. Domain-boundary corners are positive.
inline ScalarSdf assemble_sdf(const DistanceField& dist, const SignField& sign, const OpenComponentSet& open,
                              const TriangleBVH& bvh, const AssembleParams& params = {}) {
  const GridSpec& spec = dist.spec;
  const int n = spec.resolution;
  const int m = params.extract_resolution == 0 ? n : params.extract_resolution;
  if (m < 2 || m > n || n % m != 0) {
    throw InvalidArgument("extraction resolution must divide the grid resolution (got " + std::to_string(m) +
                          " for N=" + std::to_string(n) + ")");
  }
  if (sign.labels.active_brick_count() != dist.values.active_brick_count()) {
    throw InvalidArgument("sign field does not match the distance field layout");
  }
  for (const auto& [b, l] : sign.labels.sorted_tiles()) {
    if (l == Label::Unknown) throw InvalidArgument("sign field still holds Unknown voxels");
  }
  const int k = n / m;
  const double h = spec.voxel_size();
  const double nudge = 1e-9 * h;
  const double delta_h = params.thicken_delta * h;
  const bool has_open = open.open_count() > 0;
  const double open_reach = delta_h + 0.5 * std::sqrt(3.0) * h + 1e-12;

  ScalarSdf sdf = ScalarSdf::corners(m);
  auto& values = sdf.values;

  // Corner bricks touched by any dense voxel brick.
  {
    std::vector<std::uint64_t> keys;
    for (const Coord& b : dist.values.brick_coords()) {
      detail::CornerRange r[3];
      for (int a = 0; a < 3; ++a) r[a] = detail::corners_of_voxels(b[a] * kBrickSize, b[a] * kBrickSize + kBrickSize - 1, k, m);
      for (int z = r[2].lo >> kBrickShift; z <= r[2].hi >> kBrickShift; ++z) {
        for (int y = r[1].lo >> kBrickShift; y <= r[1].hi >> kBrickShift; ++y) {
          for (int x = r[0].lo >> kBrickShift; x <= r[0].hi >> kBrickShift; ++x) keys.push_back(brick_key({x, y, z}));
        }
      }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    values.reserve(keys.size());
    for (const std::uint64_t key : keys) values.ensure_brick(brick_from_key(key));
  }
  // Unallocated corner bricks lie in one far region each; Interior regions
  // are recorded as negative tiles.
  for (const auto& [b, l] : sign.labels.sorted_tiles()) {
    if (l != Label::Interior) continue;
    detail::CornerRange r[3];
    for (int a = 0; a < 3; ++a) r[a] = detail::corners_of_voxels(b[a] * kBrickSize, b[a] * kBrickSize + kBrickSize - 1, k, m);
    for (int z = r[2].lo >> kBrickShift; z <= r[2].hi >> kBrickShift; ++z) {
      for (int y = r[1].lo >> kBrickShift; y <= r[1].hi >> kBrickShift; ++y) {
        for (int x = r[0].lo >> kBrickShift; x <= r[0].hi >> kBrickShift; ++x) {
          if (values.find_brick({x, y, z}) < 0) values.set_tile({x, y, z}, ScalarSdf::kNegative);
        }
      }
    }
  }

  // Exact value at p keeping the sign already decided for that corner.
  auto exact_value = [&](const Vec3& p, bool negative) {
    const ClosestHit hit = bvh.closest_point(p);
    const double v = has_open && open.face_open(hit.face) ? hit.distance - delta_h : hit.distance;
    const double mag = std::max(std::abs(v), nudge);
    return static_cast<float>(negative ? -mag : mag);
  };

  // Signs, plus exact values where the open-surface offset decides the sign.
  values.for_each_brick_parallel([&](std::size_t, const Coord& b, SparseGrid<float>::Block& block) {
    detail::CornerClassifier classify(sign, bvh);
    GridReader<float> udf(dist.values);
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      const Coord c = origin + local_coord(l);
      if (c.x > m || c.y > m || c.z > m) continue;
      const Coord f{c.x * k, c.y * k, c.z * k};
      const Vec3 p = spec.corner(f);
      float& out = block[static_cast<std::size_t>(l)];
      bool boundary = false;
      for (int a = 0; a < 3; ++a) boundary = boundary || f[a] == 0 || f[a] == n;
      if (boundary) {
        out = ScalarSdf::kPositive;
        continue;
      }
      if (has_open) {
        float dmin = DistanceField::kFar;
        for (int i = 0; i < 8; ++i) dmin = std::min(dmin, udf.get(f + Coord{(i & 1) - 1, ((i >> 1) & 1) - 1, ((i >> 2) & 1) - 1}));
        if (static_cast<double>(dmin) < open_reach) {
          const ClosestHit hit = bvh.closest_point(p);
          if (open.face_open(hit.face)) {
            const double v = hit.distance - delta_h;
            const double mag = std::max(std::abs(v), nudge);
            out = static_cast<float>(v < 0.0 ? -mag : mag);
            continue;
          }
        }
      }
      out = classify.classify(f) == Label::Interior ? ScalarSdf::kNegative : ScalarSdf::kPositive;
    }
  });

  // Endpoints of sign-change lattice edges need exact values.
  std::vector<std::vector<std::uint64_t>> pending(values.active_brick_count());
  const auto pts = static_cast<std::uint64_t>(sdf.points);
  auto linear = [&](const Coord& c) {
    return static_cast<std::uint64_t>(c.x) + pts * (static_cast<std::uint64_t>(c.y) + pts * static_cast<std::uint64_t>(c.z));
  };
  values.for_each_brick_parallel([&](std::size_t i, const Coord& b, const SparseGrid<float>::Block& block) {
    GridReader<float> reader(values);
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      const Coord c = origin + local_coord(l);
      if (c.x > m || c.y > m || c.z > m) continue;
      const bool neg = detail::sign_negative(block[static_cast<std::size_t>(l)]);
      bool mark = false;
      for (const Coord& off : kFaceNeighbors) {
        const Coord nb = c + off;
        if (nb.x < 0 || nb.y < 0 || nb.z < 0 || nb.x > m || nb.y > m || nb.z > m) continue;
        if (detail::sign_negative(reader.get(nb)) == neg) continue;
        if (values.find_brick(brick_of(nb)) < 0) {
          throw std::logic_error("sign change reaches an unallocated corner brick");
        }
        mark = true;
      }
      if (mark && std::isinf(block[static_cast<std::size_t>(l)])) pending[i].push_back(linear(c));
    }
  });
  std::vector<std::uint64_t> todo;
  for (auto& v : pending) {
    todo.insert(todo.end(), v.begin(), v.end());
    std::vector<std::uint64_t>().swap(v);
  }
  parallel_for(todo.size(), [&](std::size_t t) {
    const std::uint64_t key = todo[t];
    const Coord c{static_cast<int>(key % pts), static_cast<int>((key / pts) % pts), static_cast<int>(key / (pts * pts))};
    auto& block = values.brick(static_cast<std::size_t>(values.find_brick(brick_of(c))));
    float& out = block[static_cast<std::size_t>(local_index(c))];
    out = exact_value(spec.corner({c.x * k, c.y * k, c.z * k}), out < 0.0f);
  }, 256);
  return sdf;
}

}  // namespace sealvox
