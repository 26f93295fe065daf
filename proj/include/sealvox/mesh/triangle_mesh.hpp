#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sealvox/core/error.hpp"
#include "sealvox/core/vec.hpp"

namespace sealvox {

using Face = std::array<std::uint32_t, 3>;

/// Indexed triangle soup. `face_tags` is either empty or holds one source
/// component id per face.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::int32_t> face_tags;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_faces() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  std::array<Vec3, 3> triangle(std::size_t f) const {
    const Face& t = faces[f];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }

  /// Unnormalized face normal (length = 2 * area).
  Vec3 face_cross(std::size_t f) const {
    const auto [a, b, c] = triangle(f);
    return cross(b - a, c - a);
  }

  double face_area(std::size_t f) const { return 0.5 * norm(face_cross(f)); }

  Aabb bounds() const {
    Aabb box;
    for (const Vec3& v : vertices) box.expand(v);
    return box;
  }
};

/// Throws if any invariant of TriangleMesh is violated.
inline void check_mesh_invariants(const TriangleMesh& mesh) {
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!is_finite(mesh.vertices[i])) {
      throw InvalidArgument("vertex " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (std::uint32_t idx : t) {
      if (idx >= mesh.vertices.size()) {
        throw InvalidArgument("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                              " out of range");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw InvalidArgument("face " + std::to_string(f) + " is degenerate");
    }
  }
  if (!mesh.face_tags.empty() && mesh.face_tags.size() != mesh.faces.size()) {
    throw InvalidArgument("face tag count does not match face count");
  }
}

/// Maps original coordinates to normalized ones: p' = scale * p + translation.
struct NormalizationTransform {
  double scale = 1.0;
  Vec3 translation{};

  Vec3 apply(const Vec3& p) const { return p * scale + translation; }
  Vec3 invert(const Vec3& p) const { return (p - translation) / scale; }
};

inline TriangleMesh transformed(const TriangleMesh& mesh, const NormalizationTransform& t) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = t.apply(v);
  return out;
}

inline TriangleMesh inverse_transformed(const TriangleMesh& mesh, const NormalizationTransform& t) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = t.invert(v);
  return out;
}

inline constexpr double kDefaultMargin = 0.03;

/// Transform that fits the longest bounding-box axis into [-(1-m), 1-m],
/// centered at the origin, preserving aspect ratio.
inline NormalizationTransform normalization_for(const Aabb& box, double margin = kDefaultMargin) {
  if (!(margin >= 0.0 && margin < 0.2)) throw InvalidArgument("margin must lie in [0, 0.2)");
  if (box.empty()) throw InvalidArgument("cannot normalize an empty mesh");
  const Vec3 ext = box.extent();
  const double longest = std::max(ext.x, std::max(ext.y, ext.z));
  if (!(longest > 0.0)) throw InvalidArgument("cannot normalize a zero-extent mesh");
  NormalizationTransform t;
  t.scale = 2.0 * (1.0 - margin) / longest;
  t.translation = -(box.center() * t.scale);
  return t;
}

inline std::pair<TriangleMesh, NormalizationTransform> normalize_to_unit_cube(const TriangleMesh& mesh,
                                                                              double margin = kDefaultMargin) {
  const NormalizationTransform t = normalization_for(mesh.bounds(), margin);
  return {transformed(mesh, t), t};
}

/// Removes faces with repeated indices or area below `min_area`.
inline TriangleMesh drop_degenerate_faces(const TriangleMesh& mesh, double min_area) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  const bool tagged = !mesh.face_tags.empty();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (!(mesh.face_area(f) >= min_area)) continue;
    out.faces.push_back(t);
    if (tagged) out.face_tags.push_back(mesh.face_tags[f]);
  }
  return out;
}

/// Drops vertices no face references and compacts indices.
inline TriangleMesh remove_unreferenced_vertices(const TriangleMesh& mesh) {
  std::vector<std::uint32_t> remap(mesh.vertices.size(), UINT32_MAX);
  TriangleMesh out;
  out.face_tags = mesh.face_tags;
  out.faces.reserve(mesh.faces.size());
  for (const Face& t : mesh.faces) {
    Face nt;
    for (int k = 0; k < 3; ++k) {
      std::uint32_t& r = remap[t[k]];
      if (r == UINT32_MAX) {
        r = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[t[k]]);
      }
      nt[k] = r;
    }
    out.faces.push_back(nt);
  }
  return out;
}

namespace detail {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xc2b2ae3d27d4eb4fULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667b19e3779f9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct ExactKeyHash {
  std::size_t operator()(const Vec3& v) const {
    const auto bits = [](double d) {
      if (d == 0.0) d = 0.0;  // fold -0 onto +0
      std::uint64_t b;
      static_assert(sizeof(b) == sizeof(d));
      __builtin_memcpy(&b, &d, sizeof(b));
      return b;
    };
    return CellKeyHash{}(CellKey{static_cast<std::int64_t>(bits(v.x)), static_cast<std::int64_t>(bits(v.y)),
                                 static_cast<std::int64_t>(bits(v.z))});
  }
};

}  // namespace detail

/// Merges vertices that snap to the same grid cell of size `eps` (exact
/// coordinate equality when eps == 0). The first vertex of a cell keeps its
/// position. Faces that collapse are dropped.
inline TriangleMesh weld_vertices(const TriangleMesh& mesh, double eps) {
  if (eps < 0.0) throw InvalidArgument("weld epsilon must be non-negative");
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  TriangleMesh out;
  if (eps == 0.0) {
    std::unordered_map<Vec3, std::uint32_t, detail::ExactKeyHash> index;
    index.reserve(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const auto [it, inserted] = index.try_emplace(mesh.vertices[i], static_cast<std::uint32_t>(out.vertices.size()));
      if (inserted) out.vertices.push_back(mesh.vertices[i]);
      remap[i] = it->second;
    }
  } else {
    std::unordered_map<detail::CellKey, std::uint32_t, detail::CellKeyHash> index;
    index.reserve(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3& p = mesh.vertices[i];
      const detail::CellKey key{static_cast<std::int64_t>(std::floor(p.x / eps)),
                                static_cast<std::int64_t>(std::floor(p.y / eps)),
                                static_cast<std::int64_t>(std::floor(p.z / eps))};
      const auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(out.vertices.size()));
      if (inserted) out.vertices.push_back(p);
      remap[i] = it->second;
    }
  }
  const bool tagged = !mesh.face_tags.empty();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    const Face nt{remap[t[0]], remap[t[1]], remap[t[2]]};
    if (nt[0] == nt[1] || nt[1] == nt[2] || nt[0] == nt[2]) continue;
    out.faces.push_back(nt);
    if (tagged) out.face_tags.push_back(mesh.face_tags[f]);
  }
  return out;
}

/// Disjoint-set forest with path halving and union by index (smaller root wins),
/// so the representative of a set is always its smallest member.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<std::uint32_t> parent_;
};

/// Connected components of faces that share a vertex position exactly.
/// Component ids are dense and ordered by first face.
inline std::vector<std::int32_t> connected_component_tags(const TriangleMesh& mesh) {
  std::unordered_map<Vec3, std::uint32_t, detail::ExactKeyHash> index;
  index.reserve(mesh.vertices.size());
  std::vector<std::uint32_t> canon(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    canon[i] = index.try_emplace(mesh.vertices[i], static_cast<std::uint32_t>(index.size())).first->second;
  }
  UnionFind uf(index.size());
  for (const Face& t : mesh.faces) {
    uf.unite(canon[t[0]], canon[t[1]]);
    uf.unite(canon[t[0]], canon[t[2]]);
  }
  std::unordered_map<std::uint32_t, std::int32_t> dense;
  std::vector<std::int32_t> tags(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const std::uint32_t root = uf.find(canon[mesh.faces[f][0]]);
    tags[f] = dense.try_emplace(root, static_cast<std::int32_t>(dense.size())).first->second;
  }
  return tags;
}

/// Concatenates meshes. Untagged inputs count as a single component; the
/// tags of `b` are offset past those of `a`.
inline TriangleMesh concatenate(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out;
  out.vertices = a.vertices;
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  out.faces = a.faces;
  out.face_tags = a.face_tags.empty() ? std::vector<std::int32_t>(a.faces.size(), 0) : a.face_tags;
  std::int32_t tag_offset = 0;
  for (std::int32_t t : out.face_tags) tag_offset = std::max(tag_offset, t + 1);
  const auto offset = static_cast<std::uint32_t>(a.vertices.size());
  for (std::size_t f = 0; f < b.faces.size(); ++f) {
    const Face& t = b.faces[f];
    out.faces.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    out.face_tags.push_back(tag_offset + (b.face_tags.empty() ? 0 : b.face_tags[f]));
  }
  return out;
}

/// 64-bit FNV-1a over vertex coordinates and face indices.
inline std::uint64_t mesh_hash(const TriangleMesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(mesh.vertices.data(), mesh.vertices.size() * sizeof(Vec3));
  feed(mesh.faces.data(), mesh.faces.size() * sizeof(Face));
  return h;
}

}  // namespace sealvox
