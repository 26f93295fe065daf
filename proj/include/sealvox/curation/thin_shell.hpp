#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sealvox/curation/sampling.hpp"

namespace sealvox {

struct CurationMetrics {
  double thin_shell_ratio = 0.0;
  std::size_t component_count = 0;
  bool watertight = false;
  std::uint64_t interior_probe_count = 0;
  std::uint64_t exterior_probe_count = 0;
  bool thin_shell = false;  // ratio below the decision threshold
};

/// Offsets n_probe surface samples by -eps along the outward normal
/// (expected inside) and +eps (expected outside), classifies both by ray
/// parity, and reports inside(-eps) / max(1, outside(+eps)).
inline CurationMetrics thin_shell_ratio(const TriangleMesh& mesh, std::size_t n_probe, double eps_n, std::uint64_t seed,
                                        double threshold = 0.5) {
  if (!(eps_n > 0.0)) throw InvalidArgument("probe offset must be positive");
  if (n_probe < 1000) throw InvalidArgument("thin-shell ratio needs at least 1000 probes");
  const WatertightReport report = validate_watertight(mesh);
  if (!report.is_watertight()) throw InvalidArgument("mesh is not watertight");
  const TriangleBVH bvh(mesh);
  // Outward normals: flip if the mesh is oriented inward overall.
  const double orient = report.signed_volume < 0.0 ? -1.0 : 1.0;
  const AreaSampler area(mesh);
  const CounterRng rng(seed, 5);
  std::vector<std::uint8_t> inside_in(n_probe);
  std::vector<std::uint8_t> outside_out(n_probe);
  parallel_for(n_probe, [&](std::size_t i) {
    const SurfaceSample s = area.sample(rng, i);
    const Vec3 n = normalized(mesh.face_cross(s.face)) * orient;
    inside_in[i] = bvh.inside_by_parity(s.position - n * eps_n, kSignRays) ? 1 : 0;
    outside_out[i] = bvh.inside_by_parity(s.position + n * eps_n, kSignRays) ? 0 : 1;
  }, 256);
  CurationMetrics m;
  for (std::size_t i = 0; i < n_probe; ++i) {
    m.interior_probe_count += inside_in[i];
    m.exterior_probe_count += outside_out[i];
  }
  m.thin_shell_ratio = static_cast<double>(m.interior_probe_count) /
                       static_cast<double>(std::max<std::uint64_t>(1, m.exterior_probe_count));
  m.component_count = report.component_count();
  m.watertight = true;
  m.thin_shell = m.thin_shell_ratio < threshold;
  return m;
}

}  // namespace sealvox
