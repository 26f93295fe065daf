#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sealvox/core/vec.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

/// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision
/// Detection, 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + ab * v;
  }
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + ac * w;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + ab * v + ac * w;
}

inline double point_triangle_squared_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return squared_norm(p - closest_point_on_triangle(p, a, b, c));
}

struct RayHit {
  double t = 0.0;
  std::uint32_t face = 0;
  bool grazing = false;  // hit lies on an edge/vertex or the ray is coplanar
};

struct ClosestHit {
  double distance = std::numeric_limits<double>::infinity();
  std::uint32_t face = UINT32_MAX;
  Vec3 point{};
  bool found() const { return face != UINT32_MAX; }
};

/// Bounding-volume hierarchy over the faces of a mesh. Immutable after
/// construction; all queries are safe to run concurrently.
class TriangleBVH {
 public:
  static constexpr int kLeafSize = 4;
  static constexpr double kGrazingEps = 1e-9;
  static constexpr int kJitterRetries = 3;
  static constexpr double kJitterAngle = 1e-5;

  TriangleBVH() = default;

  explicit TriangleBVH(const TriangleMesh& mesh) {
    const std::size_t n = mesh.faces.size();
    tris_.resize(n);
    for (std::size_t f = 0; f < n; ++f) tris_[f] = mesh.triangle(f);
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    if (n == 0) return;
    std::vector<Vec3> centroids(n);
    std::vector<Aabb> boxes(n);
    for (std::size_t f = 0; f < n; ++f) {
      centroids[f] = (tris_[f][0] + tris_[f][1] + tris_[f][2]) / 3.0;
      for (const Vec3& v : tris_[f]) boxes[f].expand(v);
    }
    nodes_.reserve(2 * n / kLeafSize + 2);
    nodes_.emplace_back();
    build_into(0, 0, static_cast<std::uint32_t>(n), centroids, boxes);
  }

  std::size_t num_faces() const { return tris_.size(); }
  const std::array<Vec3, 3>& triangle(std::uint32_t f) const { return tris_[f]; }
  Aabb bounds() const { return nodes_.empty() ? Aabb{} : nodes_[0].box; }

  /// Exact closest point on the mesh. Among faces at equal distance the
  /// lowest face index wins. Faces farther than `max_distance` are ignored.
  ClosestHit closest_point(const Vec3& q, double max_distance = std::numeric_limits<double>::infinity()) const {
    ClosestHit best;
    if (nodes_.empty()) return best;
    double best_d2 = max_distance == std::numeric_limits<double>::infinity()
                         ? std::numeric_limits<double>::infinity()
                         : max_distance * max_distance;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squared_distance(q) > best_d2) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const std::uint32_t f = order_[i];
          const auto& t = tris_[f];
          const Vec3 c = closest_point_on_triangle(q, t[0], t[1], t[2]);
          const double d2 = squared_norm(q - c);
          if (d2 < best_d2 || (d2 == best_d2 && f < best.face)) {
            best_d2 = d2;
            best.face = f;
            best.point = c;
          }
        }
        continue;
      }
      const Node& l = nodes_[node.first];
      const Node& r = nodes_[node.first + 1];
      const double dl = l.box.squared_distance(q);
      const double dr = r.box.squared_distance(q);
      // Push the farther child first so the nearer one is visited next.
      if (dl <= dr) {
        if (dr <= best_d2) stack[top++] = node.first + 1;
        if (dl <= best_d2) stack[top++] = node.first;
      } else {
        if (dl <= best_d2) stack[top++] = node.first;
        if (dr <= best_d2) stack[top++] = node.first + 1;
      }
    }
    if (best.found()) best.distance = std::sqrt(best_d2);
    return best;
  }

  double distance(const Vec3& q) const { return closest_point(q).distance; }

  /// Every intersection of the ray origin + t*dir with t in (0, t_max],
  /// sorted by t then face.
  std::vector<RayHit> intersect_ray(const Vec3& origin, const Vec3& dir,
                                    double t_max = std::numeric_limits<double>::infinity()) const {
    std::vector<RayHit> hits;
    visit_ray(origin, dir, t_max, [&](const RayHit& h) {
      hits.push_back(h);
      return true;
    });
    std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
      return a.t < b.t || (a.t == b.t && a.face < b.face);
    });
    return hits;
  }

  /// True if the closed segment [a, b] touches any face.
  bool segment_hits(const Vec3& a, const Vec3& b) const {
    bool hit = false;
    visit_ray(a, b - a, 1.0, [&](const RayHit&) {
      hit = true;
      return false;
    }, /*include_origin=*/true);
    return hit;
  }

  /// Parity of the number of surface crossings along a ray. Grazing hits
  /// trigger a deterministic jitter of the direction; if every retry still
  /// grazes, hits at coincident t are counted once.
  int crossing_parity(const Vec3& origin, const Vec3& dir) const {
    std::vector<RayHit> hits;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
      const Vec3 d = jittered(dir, attempt);
      hits = intersect_ray(origin, d);
      const bool grazing = std::any_of(hits.begin(), hits.end(), [](const RayHit& h) { return h.grazing; });
      if (!grazing) return static_cast<int>(hits.size() & 1u);
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (i == 0 || std::abs(hits[i].t - hits[i - 1].t) > 1e-9) ++count;
    }
    return static_cast<int>(count & 1u);
  }

  /// Majority vote of ray parity over `directions`.
  bool inside_by_parity(const Vec3& p, std::span<const Vec3> directions) const {
    std::size_t inside = 0;
    for (const Vec3& d : directions) inside += static_cast<std::size_t>(crossing_parity(p, d));
    return 2 * inside > directions.size();
  }

  /// Direction rotated by attempt * kJitterAngle about a fixed perpendicular axis.
  static Vec3 jittered(const Vec3& dir, int attempt) {
    if (attempt == 0) return dir;
    static constexpr std::array<Vec3, 3> kHelpers = {Vec3{0.267, 0.534, 0.802}, Vec3{0.802, -0.267, 0.534},
                                                     Vec3{-0.534, 0.802, 0.267}};
    const Vec3 d = normalized(dir);
    Vec3 axis = cross(d, kHelpers[static_cast<std::size_t>(attempt - 1) % 3]);
    if (squared_norm(axis) < 1e-12) axis = cross(d, kHelpers[static_cast<std::size_t>(attempt) % 3]);
    axis = normalized(axis);
    const double angle = kJitterAngle * attempt;
    // Rodrigues rotation of d about axis (axis is perpendicular to d).
    return d * std::cos(angle) + cross(axis, d) * std::sin(angle);
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // child index (inner) or first primitive (leaf)
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  void build_into(std::uint32_t slot, std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& centroids,
                  const std::vector<Aabb>& boxes) {
    Aabb box;
    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i) {
      box.expand(boxes[order_[i]]);
      cbox.expand(centroids[order_[i]]);
    }
    nodes_[slot].box = box;
    if (end - begin <= static_cast<std::uint32_t>(kLeafSize)) {
      nodes_[slot].first = begin;
      nodes_[slot].count = end - begin;
      return;
    }
    const Vec3 ext = cbox.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroids[a][axis];
                       const double cb = centroids[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const auto children = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[slot].first = children;
    nodes_[slot].count = 0;
    build_into(children, begin, mid, centroids, boxes);
    build_into(children + 1, mid, end, centroids, boxes);
  }

  static bool ray_box(const Vec3& o, const Vec3& inv, const Aabb& box, double t_max) {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double ta = (box.lo[a] - o[a]) * inv[a];
      double tb = (box.hi[a] - o[a]) * inv[a];
      if (ta > tb) std::swap(ta, tb);
      if (std::isnan(ta) || std::isnan(tb)) {
        // Ray parallel to the slab with the origin on its plane.
        if (o[a] < box.lo[a] || o[a] > box.hi[a]) return false;
        continue;
      }
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1 * (1.0 + 1e-12) + 1e-15) return false;
    }
    return true;
  }

  /// Calls visitor(hit) for each face hit with t in (0, t_max] (or [0, t_max]
  /// when include_origin); stops early if the visitor returns false.
  template <class Visitor>
  void visit_ray(const Vec3& o, const Vec3& d, double t_max, Visitor&& visitor, bool include_origin = false) const {
    if (nodes_.empty()) return;
    const Vec3 inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!ray_box(o, inv, node.box, t_max)) continue;
      if (node.count == 0) {
        stack[top++] = node.first;
        stack[top++] = node.first + 1;
        continue;
      }
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t f = order_[i];
        RayHit hit;
        if (intersect_triangle(o, d, tris_[f], hit)) {
          if (hit.t > t_max) continue;
          if (hit.t < 0.0 || (hit.t == 0.0 && !include_origin)) continue;
          hit.face = f;
          if (!visitor(hit)) return;
        }
      }
    }
  }

  /// Moeller-Trumbore with inclusive edges. Coplanar rays report a grazing
  /// hit at the nearest point where the ray enters the triangle's plane
  /// region only if the origin lies in the plane; otherwise they miss.
  static bool intersect_triangle(const Vec3& o, const Vec3& d, const std::array<Vec3, 3>& tri, RayHit& hit) {
    const Vec3 e1 = tri[1] - tri[0];
    const Vec3 e2 = tri[2] - tri[0];
    const Vec3 p = cross(d, e2);
    const double det = dot(e1, p);
    const double scale = norm(e1) * norm(e2) * norm(d);
    if (std::abs(det) <= 1e-14 * scale) {
      // Parallel: report a grazing hit only when the ray lies in the plane
      // and passes through the triangle.
      const Vec3 n = cross(e1, e2);
      if (std::abs(dot(n, o - tri[0])) > 1e-12 * norm(n) * (1.0 + norm(o - tri[0]))) return false;
      return coplanar_hit(o, d, tri, hit);
    }
    const double inv_det = 1.0 / det;
    const Vec3 s = o - tri[0];
    const double u = dot(s, p) * inv_det;
    if (u < -kGrazingEps || u > 1.0 + kGrazingEps) return false;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) * inv_det;
    if (v < -kGrazingEps || u + v > 1.0 + kGrazingEps) return false;
    hit.t = dot(e2, q) * inv_det;
    hit.grazing = u <= kGrazingEps || v <= kGrazingEps || u + v >= 1.0 - kGrazingEps;
    return true;
  }

  static bool coplanar_hit(const Vec3& o, const Vec3& d, const std::array<Vec3, 3>& tri, RayHit& hit) {
    // Clip the ray against the three edge half-planes within the plane.
    const Vec3 n = cross(tri[1] - tri[0], tri[2] - tri[0]);
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Vec3& a = tri[static_cast<std::size_t>(k)];
      const Vec3& b = tri[static_cast<std::size_t>((k + 1) % 3)];
      const Vec3 inward = cross(n, b - a);
      const double num = dot(inward, o - a);
      const double den = dot(inward, d);
      if (den == 0.0) {
        if (num < 0.0) return false;
        continue;
      }
      const double t = -num / den;
      if (den > 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
    }
    if (t0 > t1) return false;
    hit.t = t0;
    hit.grazing = true;
    return true;
  }

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace sealvox
