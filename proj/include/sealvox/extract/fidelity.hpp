#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sealvox/mesh/bvh.hpp"
#include "sealvox/mesh/surface_sampling.hpp"

namespace sealvox {

struct FidelityMetrics {
  double chamfer = 0.0;    // mean of the two directed mean distances
  double hausdorff = 0.0;  // max over both sample sets
};

namespace detail {

struct DirectedDistance {
  double mean = 0.0;
  double max = 0.0;
};

inline DirectedDistance directed_distance(const TriangleMesh& from, const TriangleBVH& to, std::size_t n,
                                          const CounterRng& rng) {
  const std::vector<SurfaceSample> pts = sample_area_weighted(from, n, rng);
  std::vector<double> d(n);
  parallel_for(n, [&](std::size_t i) { d[i] = to.distance(pts[i].position); }, 256);
  return {pairwise_sum(d) / static_cast<double>(n), *std::max_element(d.begin(), d.end())};
}

}  // namespace detail

/// Symmetric Chamfer distance and Hausdorff estimate from n seeded
/// area-weighted samples on each mesh.
inline FidelityMetrics fidelity_metrics(const TriangleMesh& input, const TriangleMesh& output, std::size_t n,
                                        std::uint64_t seed) {
  if (n < 1000) throw InvalidArgument("fidelity metrics need at least 1000 samples per side");
  if (input.faces.empty() || output.faces.empty()) throw InvalidArgument("fidelity metrics need non-empty meshes");
  const TriangleBVH in_bvh(input);
  const TriangleBVH out_bvh(output);
  const auto ab = detail::directed_distance(input, out_bvh, n, CounterRng(seed, 0xF1D0));
  const auto ba = detail::directed_distance(output, in_bvh, n, CounterRng(seed, 0xF1D1));
  return {0.5 * (ab.mean + ba.mean), std::max(ab.max, ba.max)};
}

}  // namespace sealvox
