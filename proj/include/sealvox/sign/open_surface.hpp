#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sealvox/mesh/bvh.hpp"
#include "sealvox/sign/sign_field.hpp"

namespace sealvox {

/// 26-connected components of occupied voxels. Components are numbered in
/// order of their first voxel (z-major), which is also slot order.
struct OpenComponentSet {
  struct Component {
    std::uint64_t voxel_count = 0;
    Coord first_voxel;
    bool open = false;
    std::vector<std::int32_t> source_tags;  // sorted, distinct
  };

  std::vector<Component> components;
  std::vector<std::uint32_t> slot_component;  // component of each occupancy slot
  std::vector<std::uint32_t> face_component;  // component of each mesh face (UINT32_MAX if untouched)

  std::size_t open_count() const {
    return static_cast<std::size_t>(std::count_if(components.begin(), components.end(), [](const Component& c) { return c.open; }));
  }
  bool face_open(std::uint32_t f) const {
    return f < face_component.size() && face_component[f] != UINT32_MAX && components[face_component[f]].open;
  }
  std::uint32_t component_at(const OccupancyGrid& occ, const Coord& v) const {
    const std::uint32_t s = occ.slot.get(v);
    return s == OccupancyGrid::kNoSlot ? UINT32_MAX : slot_component[s];
  }
};

/// Occupied-voxel components; a component is open iff none of its voxels
/// has a 6-adjacent Interior voxel. Face tags come from `mesh`.
inline OpenComponentSet identify_open_components(const OccupancyGrid& occ, const SignField& sign,
                                                 const TriangleMesh& mesh) {
  const std::size_t n = occ.occupied_count();
  UnionFind uf(n);
  GridReader<std::uint32_t> slots(occ.slot);
  // Slots are in z-major order, so uniting with the 13 lexicographically
  // earlier neighbors covers all 26 adjacencies.
  for (std::size_t s = 0; s < n; ++s) {
    const Coord v = occ.slot_voxels[s];
    for (int dz = -1; dz <= 0; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
          const std::uint32_t o = slots.get(v + Coord{dx, dy, dz});
          if (o != OccupancyGrid::kNoSlot) uf.unite(static_cast<std::uint32_t>(s), o);
        }
      }
    }
  }

  OpenComponentSet out;
  out.slot_component.assign(n, UINT32_MAX);
  std::vector<std::uint32_t> root_to_id(n, UINT32_MAX);
  for (std::size_t s = 0; s < n; ++s) {
    const std::uint32_t r = uf.find(static_cast<std::uint32_t>(s));
    if (root_to_id[r] == UINT32_MAX) {
      root_to_id[r] = static_cast<std::uint32_t>(out.components.size());
      out.components.emplace_back();
      out.components.back().first_voxel = occ.slot_voxels[s];
    }
    out.slot_component[s] = root_to_id[r];
    ++out.components[root_to_id[r]].voxel_count;
  }

  std::vector<std::uint8_t> touches_interior(out.components.size(), 0);
  {
    GridReader<Label> reader(sign.labels);
    for (std::size_t s = 0; s < n; ++s) {
      const std::uint32_t c = out.slot_component[s];
      if (touches_interior[c]) continue;
      for (const Coord& off : kFaceNeighbors) {
        if (reader.get(occ.slot_voxels[s] + off) == Label::Interior) {
          touches_interior[c] = 1;
          break;
        }
      }
    }
  }
  for (std::size_t c = 0; c < out.components.size(); ++c) out.components[c].open = !touches_interior[c];

  out.face_component.assign(mesh.faces.size(), UINT32_MAX);
  for (std::size_t s = 0; s < n; ++s) {
    for (const std::uint32_t f : occ.faces_in_slot(static_cast<std::uint32_t>(s))) {
      if (out.face_component[f] == UINT32_MAX) out.face_component[f] = out.slot_component[s];
    }
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const std::uint32_t c = out.face_component[f];
    if (c == UINT32_MAX) continue;
    out.components[c].source_tags.push_back(mesh.face_tags.empty() ? 0 : mesh.face_tags[f]);
  }
  for (auto& comp : out.components) {
    std::sort(comp.source_tags.begin(), comp.source_tags.end());
    comp.source_tags.erase(std::unique(comp.source_tags.begin(), comp.source_tags.end()), comp.source_tags.end());
  }
  return out;
}

/// Relabels Interior every non-occupied voxel with UDF < delta*h whose
/// nearest face (lowest index among ties) belongs to an open component.
inline SignField thicken_open_components(const DistanceField& dist, const SignField& sign,
                                         const OpenComponentSet& open, const TriangleBVH& bvh, double delta) {
  if (!(delta >= 0.5)) throw InvalidArgument("thickening half-width must be at least 0.5 voxels");
  if (delta > dist.band - 2) throw InvalidArgument("thickening half-width exceeds the distance band capacity");
  SignField out = sign;
  if (open.open_count() == 0) return out;
  const GridSpec& spec = dist.spec;
  const double threshold = delta * spec.voxel_size();
  out.labels.for_each_brick_parallel([&](std::size_t i, const Coord& b, SparseGrid<Label>::Block& block) {
    const auto& d = dist.values.brick(i);
    const Coord origin = brick_origin(b);
    for (int l = 0; l < kBrickVolume; ++l) {
      const auto s = static_cast<std::size_t>(l);
      if (block[s] == Label::Occupied || block[s] == Label::Interior) continue;
      if (!(static_cast<double>(d[s]) < threshold)) continue;
      const ClosestHit hit = bvh.closest_point(spec.voxel_center(origin + local_coord(l)), threshold);
      if (hit.found() && open.face_open(hit.face)) block[s] = Label::Interior;
    }
  });
  return out;
}

}  // namespace sealvox
