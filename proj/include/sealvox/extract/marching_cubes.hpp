#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sealvox/core/parallel.hpp"
#include "sealvox/extract/scalar_sdf.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

namespace detail {

// Cube corner i sits at offset (i & 1, (i >> 1) & 1, (i >> 2) & 1). Edge ids
// are axis * 4 + (bit on axis+1) + 2 * (bit on axis+2) of the lower corner.
inline constexpr int cube_edge(int lo, int hi) {
  const int axis = (lo ^ hi) == 1 ? 0 : ((lo ^ hi) == 2 ? 1 : 2);
  const int c = std::min(lo, hi);
  return axis * 4 + ((c >> ((axis + 1) % 3)) & 1) + 2 * ((c >> ((axis + 2) % 3)) & 1);
}

inline constexpr int edge_axis(int e) { return e / 4; }

inline constexpr int edge_lower_corner(int e) {
  const int axis = e / 4;
  return (((e & 1) << ((axis + 1) % 3)) | (((e >> 1) & 1) << ((axis + 2) % 3)));
}

// Face ids are axis * 2 + side; each edge lies on two faces.
inline constexpr std::array<int, 2> edge_faces(int e) {
  const int axis = e / 4;
  return {((axis + 1) % 3) * 2 + (e & 1), ((axis + 2) % 3) * 2 + ((e >> 1) & 1)};
}

inline bool edges_share_face(int a, int b) {
  const auto fa = edge_faces(a);
  const auto fb = edge_faces(b);
  return fa[0] == fb[0] || fa[0] == fb[1] || fa[1] == fb[0] || fa[1] == fb[1];
}

struct McCase {
  std::vector<std::vector<int>> loops;  // edge ids per closed loop, facing the positive side
  // Per loop of four: bit 0 if diagonal 0-2 lies in no cube face, bit 1 for
  // diagonal 1-3.
  std::vector<std::uint8_t> diagonals;
};

// Builds the case for one sign pattern (bit i = corner i negative). On each
// cube face the crossing points are joined so that every run of negative
// corners is cut off on its own; on faces with two diagonal negatives this
// separates them. The segments of the six faces chain into loops.
inline McCase build_mc_case(int mask) {
  McCase out;
  auto neg = [&](int c) { return ((mask >> c) & 1) != 0; };
  std::array<int, 12> next;
  next.fill(-1);
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int w = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      // Corners counter-clockwise about the outward normal.
      std::array<std::array<int, 2>, 4> uv = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
      if (side == 0) std::swap(uv[1], uv[3]);
      std::array<int, 4> c{};
      for (int k = 0; k < 4; ++k) c[static_cast<std::size_t>(k)] = (side << axis) | (uv[static_cast<std::size_t>(k)][0] << u) | (uv[static_cast<std::size_t>(k)][1] << w);
      auto at = [&](int k) { return c[static_cast<std::size_t>((k % 4 + 4) % 4)]; };
      for (int k = 0; k < 4; ++k) {
        if (!(neg(at(k)) && !neg(at(k + 1)))) continue;
        int j = k - 1;
        while (!(!neg(at(j)) && neg(at(j + 1)))) --j;
        next[static_cast<std::size_t>(cube_edge(at(k), at(k + 1)))] = cube_edge(at(j), at(j + 1));
      }
    }
  }
  std::array<bool, 12> seen{};
  for (int e = 0; e < 12; ++e) {
    if (next[static_cast<std::size_t>(e)] < 0 || seen[static_cast<std::size_t>(e)]) continue;
    std::vector<int> loop;
    for (int cur = e; !seen[static_cast<std::size_t>(cur)]; cur = next[static_cast<std::size_t>(cur)]) {
      seen[static_cast<std::size_t>(cur)] = true;
      loop.push_back(cur);
    }
    // Segments keep the negative side on their left; reversing the loop
    // makes triangle normals point toward the positive side.
    std::reverse(loop.begin(), loop.end());
    std::uint8_t diagonals = 0;
    if (loop.size() == 4) {
      if (!edges_share_face(loop[0], loop[2])) diagonals |= 1;
      if (!edges_share_face(loop[1], loop[3])) diagonals |= 2;
    }
    out.diagonals.push_back(diagonals);
    out.loops.push_back(std::move(loop));
  }
  return out;
}

inline const std::array<McCase, 256>& mc_table() {
  static const std::array<McCase, 256> table = [] {
    std::array<McCase, 256> t;
    for (int mask = 0; mask < 256; ++mask) t[static_cast<std::size_t>(mask)] = build_mc_case(mask);
    return t;
  }();
  return table;
}

inline constexpr std::uint64_t kCentroidKeyBit = std::uint64_t{1} << 63;

}  // namespace detail

/// Edge vertices stay this fraction of an edge away from lattice points, so
/// no face falls below the loader's degenerate-area cutoff at N <= 2048.
inline constexpr double kEdgeClamp = 0.01;

/// Zero level set of `sdf` as a welded triangle mesh. Vertices sit on
/// sign-change lattice edges (linear interpolation of the endpoint values,
/// clamped to [kEdgeClamp, 1 - kEdgeClamp]) and are keyed by edge, so cells
/// sharing an edge share the vertex. Values equal to zero count as
/// +1e-9 * spacing. Triangles face the positive side.
/// Throws std::logic_error if a sign-change edge has an infinite endpoint.
inline TriangleMesh marching_cubes(const ScalarSdf& sdf) {
  const auto& table = detail::mc_table();
  const int cells = sdf.cells();
  const auto pts = static_cast<std::uint64_t>(sdf.points);
  const float zero_nudge = static_cast<float>(1e-9 * sdf.spacing);

  // Cell bricks: every brick whose cells may touch an allocated corner.
  std::vector<std::uint64_t> keys;
  const int cell_bricks = (cells + kBrickSize - 1) / kBrickSize;
  for (const Coord& b : sdf.values.brick_coords()) {
    for (int i = 0; i < 8; ++i) {
      const Coord cb = b - Coord{i & 1, (i >> 1) & 1, (i >> 2) & 1};
      if (cb.x < 0 || cb.y < 0 || cb.z < 0 || cb.x >= cell_bricks || cb.y >= cell_bricks || cb.z >= cell_bricks) continue;
      keys.push_back(brick_key(cb));
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  struct Piece {
    std::vector<std::array<std::uint64_t, 3>> triangles;
    std::vector<std::pair<std::uint64_t, Vec3>> vertices;
  };
  std::vector<Piece> pieces(keys.size());

  parallel_for(keys.size(), [&](std::size_t bi) {
    const Coord cb = brick_from_key(keys[bi]);
    const Coord origin = brick_origin(cb);
    constexpr int kS = kBrickSize + 1;
    std::array<float, kS * kS * kS> v;
    GridReader<float> reader(sdf.values);
    for (int z = 0; z < kS; ++z) {
      for (int y = 0; y < kS; ++y) {
        for (int x = 0; x < kS; ++x) {
          const Coord c = origin + Coord{x, y, z};
          float val = c.x <= cells && c.y <= cells && c.z <= cells ? reader.get(c) : ScalarSdf::kPositive;
          if (val == 0.0f) val = zero_nudge;
          v[static_cast<std::size_t>(x + kS * (y + kS * z))] = val;
        }
      }
    }
    auto val_at = [&](const Coord& l) { return v[static_cast<std::size_t>(l.x + kS * (l.y + kS * l.z))]; };
    Piece& piece = pieces[bi];
    std::array<std::uint64_t, 12> vkey{};
    std::array<Vec3, 12> vpos{};
    for (int z = 0; z < kBrickSize; ++z) {
      for (int y = 0; y < kBrickSize; ++y) {
        for (int x = 0; x < kBrickSize; ++x) {
          const Coord cell = origin + Coord{x, y, z};
          if (cell.x >= cells || cell.y >= cells || cell.z >= cells) continue;
          int mask = 0;
          for (int i = 0; i < 8; ++i) {
            if (val_at(Coord{x + (i & 1), y + ((i >> 1) & 1), z + ((i >> 2) & 1)}) < 0.0f) mask |= 1 << i;
          }
          if (mask == 0 || mask == 255) continue;
          const detail::McCase& mc = table[static_cast<std::size_t>(mask)];
          for (const auto& loop : mc.loops) {
            for (const int e : loop) {
              const int lc = detail::edge_lower_corner(e);
              const int axis = detail::edge_axis(e);
              const Coord d{lc & 1, (lc >> 1) & 1, (lc >> 2) & 1};
              Coord up = d;
              up[axis] += 1;
              const float v0 = val_at(Coord{x, y, z} + d);
              const float v1 = val_at(Coord{x, y, z} + up);
              if (std::isinf(v0) || std::isinf(v1)) {
                throw std::logic_error("sign-change edge without exact endpoint values");
              }
              const Coord g = cell + d;
              const double t = std::clamp(static_cast<double>(v0) / (static_cast<double>(v0) - static_cast<double>(v1)),
                                          kEdgeClamp, 1.0 - kEdgeClamp);
              Vec3 p = sdf.position(g);
              p[axis] += t * sdf.spacing;
              const auto ue = static_cast<std::size_t>(e);
              vkey[ue] = (static_cast<std::uint64_t>(g.x) + pts * (static_cast<std::uint64_t>(g.y) + pts * static_cast<std::uint64_t>(g.z))) * 3 +
                         static_cast<std::uint64_t>(axis);
              vpos[ue] = p;
            }
          }
          const std::uint64_t cell_linear = static_cast<std::uint64_t>(cell.x) +
              pts * (static_cast<std::uint64_t>(cell.y) + pts * static_cast<std::uint64_t>(cell.z));
          for (std::size_t li = 0; li < mc.loops.size(); ++li) {
            for (const int e : mc.loops[li]) piece.vertices.emplace_back(vkey[static_cast<std::size_t>(e)], vpos[static_cast<std::size_t>(e)]);
          }
          for (std::size_t li = 0; li < mc.loops.size(); ++li) {
            const std::vector<int>& loop = mc.loops[li];
            auto key = [&](std::size_t k) { return vkey[static_cast<std::size_t>(loop[k % loop.size()])]; };
            auto pos = [&](std::size_t k) { return vpos[static_cast<std::size_t>(loop[k % loop.size()])]; };
            if (loop.size() == 3) {
              piece.triangles.push_back({key(0), key(1), key(2)});
              continue;
            }
            // Quads split along the shorter admissible diagonal; near ties,
            // larger loops and quads without an admissible diagonal get a
            // centroid fan. Every choice is invariant under lattice symmetries.
            if (loop.size() == 4 && mc.diagonals[li] != 0) {
              int pick = mc.diagonals[li] == 1 ? 0 : (mc.diagonals[li] == 2 ? 1 : -1);
              if (pick < 0) {
                const double d0 = dot(pos(0) - pos(2), pos(0) - pos(2));
                const double d1 = dot(pos(1) - pos(3), pos(1) - pos(3));
                const double tol = 1e-9 * sdf.spacing * sdf.spacing;
                if (d0 + tol < d1) pick = 0;
                if (d1 + tol < d0) pick = 1;
              }
              if (pick >= 0) {
                const auto s = static_cast<std::size_t>(pick);
                piece.triangles.push_back({key(s), key(s + 1), key(s + 2)});
                piece.triangles.push_back({key(s), key(s + 2), key(s + 3)});
                continue;
              }
            }
            const std::uint64_t ckey = detail::kCentroidKeyBit | (cell_linear * 4 + li);
            Vec3 c{};
            for (std::size_t k = 0; k < loop.size(); ++k) c += pos(k);
            piece.vertices.emplace_back(ckey, c / static_cast<double>(loop.size()));
            for (std::size_t k = 0; k < loop.size(); ++k) piece.triangles.push_back({ckey, key(k), key(k + 1)});
          }
        }
      }
    }
    auto by_key = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::sort(piece.vertices.begin(), piece.vertices.end(), by_key);
    piece.vertices.erase(std::unique(piece.vertices.begin(), piece.vertices.end(),
                                     [](const auto& a, const auto& b) { return a.first == b.first; }),
                         piece.vertices.end());
  }, 1);

  std::vector<std::pair<std::uint64_t, Vec3>> verts;
  std::size_t tri_count = 0;
  for (Piece& p : pieces) {
    verts.insert(verts.end(), p.vertices.begin(), p.vertices.end());
    std::vector<std::pair<std::uint64_t, Vec3>>().swap(p.vertices);
    tri_count += p.triangles.size();
  }
  std::sort(verts.begin(), verts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  verts.erase(std::unique(verts.begin(), verts.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
              verts.end());

  TriangleMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const auto& kv : verts) mesh.vertices.push_back(kv.second);
  mesh.faces.reserve(tri_count);
  auto index_of = [&](std::uint64_t key) {
    const auto it = std::lower_bound(verts.begin(), verts.end(), key, [](const auto& a, std::uint64_t k) { return a.first < k; });
    return static_cast<std::uint32_t>(it - verts.begin());
  };
  for (Piece& p : pieces) {
    for (const auto& t : p.triangles) mesh.faces.push_back({index_of(t[0]), index_of(t[1]), index_of(t[2])});
    std::vector<std::array<std::uint64_t, 3>>().swap(p.triangles);
  }
  return mesh;
}

}  // namespace sealvox
