#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "sealvox/curation/sample_set.hpp"
#include "sealvox/extract/validate.hpp"
#include "sealvox/mesh/bvh.hpp"
#include "sealvox/mesh/surface_sampling.hpp"

namespace sealvox {

/// Fixed ray set for parity signs. Generic directions, so axis-aligned
/// geometry is never grazed along a face.
inline constexpr std::array<Vec3, 3> kSignRays = {Vec3{0.8234, 0.4315, 0.3687}, Vec3{-0.2791, 0.8811, -0.3817},
                                                  Vec3{-0.4523, -0.3217, 0.8319}};

/// Signed distance to a watertight mesh: BVH distance with the sign of a
/// majority ray-parity vote (negative inside).
inline double signed_distance(const TriangleBVH& bvh, const Vec3& p, std::span<const Vec3> rays = kSignRays) {
  const double d = bvh.distance(p);
  return bvh.inside_by_parity(p, rays) ? -d : d;
}

struct SharpEdge {
  std::uint32_t a;
  std::uint32_t b;
  Vec3 normal;  // normalized sum of the two face normals
};

/// Manifold edges whose adjacent face normals differ by more than
/// `angle_deg`, sorted by vertex pair.
inline std::vector<SharpEdge> sharp_edges(const TriangleMesh& mesh, double angle_deg) {
  struct Use {
    std::uint64_t key;
    std::uint32_t face;
  };
  std::vector<Use> uses;
  uses.reserve(mesh.faces.size() * 3);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t a = mesh.faces[f][static_cast<std::size_t>(k)];
      const std::uint64_t b = mesh.faces[f][static_cast<std::size_t>((k + 1) % 3)];
      uses.push_back({std::min(a, b) << 32 | std::max(a, b), static_cast<std::uint32_t>(f)});
    }
  }
  std::sort(uses.begin(), uses.end(), [](const Use& x, const Use& y) { return x.key < y.key || (x.key == y.key && x.face < y.face); });
  const double cos_limit = std::cos(angle_deg * std::numbers::pi / 180.0);
  std::vector<SharpEdge> out;
  for (std::size_t i = 0; i < uses.size();) {
    std::size_t j = i;
    while (j < uses.size() && uses[j].key == uses[i].key) ++j;
    if (j - i == 2) {
      const Vec3 n1 = normalized(mesh.face_cross(uses[i].face));
      const Vec3 n2 = normalized(mesh.face_cross(uses[i + 1].face));
      if (dot(n1, n2) < cos_limit) {
        out.push_back({static_cast<std::uint32_t>(uses[i].key >> 32), static_cast<std::uint32_t>(uses[i].key & 0xffffffffu),
                       normalized(n1 + n2)});
      }
    }
    i = j;
  }
  return out;
}

namespace detail {

inline std::array<float, 3> to_float(const Vec3& v) {
  return {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
}

inline void require_watertight(const TriangleMesh& mesh) {
  if (!validate_watertight(mesh).is_watertight()) throw InvalidArgument("mesh is not watertight");
}

}  // namespace detail

/// Area-weighted surface points with face normals plus points spread
/// uniformly by length over sharp edges. Without sharp edges the sharp
/// budget goes to the uniform samples.
inline SampleSet sample_surface(const TriangleMesh& mesh, std::size_t n_uniform, std::size_t n_sharp,
                                double sharp_angle_deg, std::uint64_t seed) {
  if (!(sharp_angle_deg > 0.0 && sharp_angle_deg <= 180.0)) throw InvalidArgument("sharp angle must lie in (0, 180]");
  const std::vector<SharpEdge> edges = sharp_edges(mesh, sharp_angle_deg);
  if (edges.empty()) {
    n_uniform += n_sharp;
    n_sharp = 0;
  }
  SampleSet set;
  set.has_normal = true;
  set.seed = seed;
  set.mesh_hash = mesh_hash(mesh);
  set.records.resize(n_uniform + n_sharp);

  const AreaSampler area(mesh);
  const CounterRng uniform_rng(seed, 1);
  parallel_for(n_uniform, [&](std::size_t i) {
    const SurfaceSample s = area.sample(uniform_rng, i);
    set.records[i] = {detail::to_float(s.position), 0.0f, detail::to_float(normalized(mesh.face_cross(s.face))),
                      SampleKind::SurfaceUniform};
  }, 1024);

  if (n_sharp > 0) {
    std::vector<double> cdf(edges.size());
    double acc = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      acc += norm(mesh.vertices[edges[e].b] - mesh.vertices[edges[e].a]);
      cdf[e] = acc;
    }
    const CounterRng sharp_rng(seed, 2);
    parallel_for(n_sharp, [&](std::size_t i) {
      const double target = sharp_rng.uniform(i, 0) * acc;
      const auto e = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
      const double t = sharp_rng.uniform(i, 1);
      const Vec3& a = mesh.vertices[edges[e].a];
      const Vec3& b = mesh.vertices[edges[e].b];
      set.records[n_uniform + i] = {detail::to_float(a + (b - a) * t), 0.0f, detail::to_float(edges[e].normal),
                                    SampleKind::SurfaceSharp};
    }, 1024);
  }
  return set;
}

/// Near-surface points (surface samples offset by isotropic Gaussian noise
/// with sigma drawn uniformly from `sigmas`) and free-space points uniform
/// in [-1, 1]^3, all labelled with exact signed distance.
inline SampleSet sample_supervision(const TriangleMesh& mesh, const TriangleBVH& bvh, std::size_t n_near,
                                    std::span<const double> sigmas, std::size_t n_free, std::uint64_t seed) {
  if (n_near > 0 && sigmas.empty()) throw InvalidArgument("near-surface sampling needs at least one sigma");
  for (const double s : sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("near-surface sigmas must be positive");
  }
  detail::require_watertight(mesh);
  SampleSet set;
  set.has_sdf = true;
  set.seed = seed;
  set.mesh_hash = mesh_hash(mesh);
  set.records.resize(n_near + n_free);

  const AreaSampler area(mesh);
  const CounterRng near_rng(seed, 3);
  parallel_for(n_near, [&](std::size_t i) {
    const SurfaceSample s = area.sample(near_rng, i);
    const auto pick = std::min(sigmas.size() - 1, static_cast<std::size_t>(near_rng.uniform(i, 3) * static_cast<double>(sigmas.size())));
    const double sigma = sigmas[pick];
    const Vec3 p = s.position + Vec3{near_rng.normal(i, 4), near_rng.normal(i, 6), near_rng.normal(i, 8)} * sigma;
    set.records[i].position = detail::to_float(p);
    set.records[i].kind = SampleKind::NearSurface;
  }, 1024);
  const CounterRng free_rng(seed, 4);
  parallel_for(n_free, [&](std::size_t i) {
    const Vec3 p{2.0 * free_rng.uniform(i, 0) - 1.0, 2.0 * free_rng.uniform(i, 1) - 1.0, 2.0 * free_rng.uniform(i, 2) - 1.0};
    set.records[n_near + i].position = detail::to_float(p);
    set.records[n_near + i].kind = SampleKind::FreeSpace;
  }, 1024);
  // Labels use the stored float position so the file is self-consistent.
  parallel_for(set.records.size(), [&](std::size_t i) {
    SampleRecord& r = set.records[i];
    r.sdf = static_cast<float>(signed_distance(bvh, Vec3{r.position[0], r.position[1], r.position[2]}));
  }, 256);
  return set;
}

}  // namespace sealvox
