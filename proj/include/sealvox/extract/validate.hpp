#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "sealvox/core/parallel.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

struct ComponentTopology {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::int64_t euler = 0;
  double genus = 0.0;  // (2 - euler) / 2; integral only for closed components
  double signed_volume = 0.0;
};

struct WatertightReport {
  std::size_t vertices = 0;
  std::size_t faces = 0;
  std::size_t edges = 0;
  std::size_t boundary_edges = 0;     // used by one face
  std::size_t nonmanifold_edges = 0;  // used by more than two faces
  std::size_t misoriented_edges = 0;  // used twice in the same direction
  std::vector<ComponentTopology> components;
  double signed_volume = 0.0;

  bool orientation_consistent() const { return misoriented_edges == 0; }
  bool is_watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0; }
  std::size_t component_count() const { return components.size(); }
};

namespace detail {

inline double tetra_volume(const TriangleMesh& mesh, std::size_t f) {
  const auto [a, b, c] = mesh.triangle(f);
  return dot(a, cross(b, c)) / 6.0;
}

// Face components through shared vertices; ids ordered by first face.
inline std::vector<std::uint32_t> face_components(const TriangleMesh& mesh, std::size_t& count) {
  UnionFind uf(mesh.vertices.size());
  for (const Face& t : mesh.faces) {
    uf.unite(t[0], t[1]);
    uf.unite(t[0], t[2]);
  }
  std::vector<std::uint32_t> root_id(mesh.vertices.size(), UINT32_MAX);
  std::vector<std::uint32_t> comp(mesh.faces.size());
  count = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const std::uint32_t r = uf.find(mesh.faces[f][0]);
    if (root_id[r] == UINT32_MAX) root_id[r] = static_cast<std::uint32_t>(count++);
    comp[f] = root_id[r];
  }
  return comp;
}

}  // namespace detail

/// Edge census, orientation check and per-component Euler characteristic
/// of a welded mesh (vertices are identified by index only).
inline WatertightReport validate_watertight(const TriangleMesh& mesh) {
  check_mesh_invariants(mesh);
  WatertightReport r;
  r.vertices = mesh.vertices.size();
  r.faces = mesh.faces.size();

  struct HalfEdge {
    std::uint64_t key;  // undirected (min << 32 | max)
    bool forward;       // traversed min -> max
    std::uint32_t face;
  };
  std::vector<HalfEdge> half;
  half.reserve(mesh.faces.size() * 3);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = t[static_cast<std::size_t>(k)];
      const std::uint32_t b = t[static_cast<std::size_t>((k + 1) % 3)];
      const std::uint64_t lo = std::min(a, b);
      const std::uint64_t hi = std::max(a, b);
      half.push_back({lo << 32 | hi, a < b, static_cast<std::uint32_t>(f)});
    }
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& x, const HalfEdge& y) {
    return x.key < y.key || (x.key == y.key && x.face < y.face);
  });

  std::size_t ncomp = 0;
  const std::vector<std::uint32_t> comp = detail::face_components(mesh, ncomp);
  r.components.resize(ncomp);
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    const std::size_t uses = j - i;
    ++r.edges;
    ++r.components[comp[half[i].face]].edges;
    if (uses == 1) ++r.boundary_edges;
    if (uses > 2) ++r.nonmanifold_edges;
    if (uses == 2 && half[i].forward == half[i + 1].forward) ++r.misoriented_edges;
    i = j;
  }

  std::vector<std::uint32_t> vertex_comp(mesh.vertices.size(), UINT32_MAX);
  std::vector<std::vector<double>> volumes(ncomp);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    auto& c = r.components[comp[f]];
    ++c.faces;
    for (const std::uint32_t v : mesh.faces[f]) {
      if (vertex_comp[v] == UINT32_MAX) {
        vertex_comp[v] = comp[f];
        ++c.vertices;
      }
    }
    volumes[comp[f]].push_back(detail::tetra_volume(mesh, f));
  }
  std::vector<double> all(mesh.faces.size());
  parallel_for(mesh.faces.size(), [&](std::size_t f) { all[f] = detail::tetra_volume(mesh, f); }, 4096);
  r.signed_volume = pairwise_sum(all);
  for (std::size_t c = 0; c < ncomp; ++c) {
    auto& t = r.components[c];
    t.euler = static_cast<std::int64_t>(t.vertices) - static_cast<std::int64_t>(t.edges) + static_cast<std::int64_t>(t.faces);
    t.genus = (2.0 - static_cast<double>(t.euler)) / 2.0;
    t.signed_volume = pairwise_sum(volumes[c]);
  }
  return r;
}

/// Keeps the connected component with the largest |signed volume| (ties
/// go to the lowest component id) and drops unreferenced vertices.
inline TriangleMesh keep_largest_component(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw InvalidArgument("keep_largest_component needs a non-empty mesh");
  std::size_t ncomp = 0;
  const std::vector<std::uint32_t> comp = detail::face_components(mesh, ncomp);
  std::vector<std::vector<double>> volumes(ncomp);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) volumes[comp[f]].push_back(detail::tetra_volume(mesh, f));
  std::size_t best = 0;
  double best_vol = -1.0;
  for (std::size_t c = 0; c < ncomp; ++c) {
    const double v = std::abs(pairwise_sum(volumes[c]));
    if (v > best_vol) {
      best_vol = v;
      best = c;
    }
  }
  TriangleMesh out;
  out.vertices = mesh.vertices;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (comp[f] != best) continue;
    out.faces.push_back(mesh.faces[f]);
    if (!mesh.face_tags.empty()) out.face_tags.push_back(mesh.face_tags[f]);
  }
  return remove_unreferenced_vertices(out);
}

}  // namespace sealvox
