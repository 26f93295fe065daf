#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sealvox/core/parallel.hpp"
#include "sealvox/core/rng.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

struct SurfaceSample {
  Vec3 position;
  std::uint32_t face = 0;
};

/// Cumulative face areas for area-weighted face selection.
class AreaSampler {
 public:
  explicit AreaSampler(const TriangleMesh& mesh) : mesh_(&mesh), cdf_(mesh.faces.size()) {
    double acc = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      acc += mesh.face_area(f);
      cdf_[f] = acc;
    }
    if (!(acc > 0.0)) throw InvalidArgument("cannot sample a mesh with zero surface area");
  }

  double total_area() const { return cdf_.back(); }

  /// Record `i` of stream `rng`; uses slots 0..2.
  SurfaceSample sample(const CounterRng& rng, std::uint64_t i) const {
    const double target = rng.uniform(i, 0) * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const auto f = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    const double r1 = std::sqrt(rng.uniform(i, 1));
    const double r2 = rng.uniform(i, 2);
    const auto [a, b, c] = mesh_->triangle(f);
    return {a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2), f};
  }

 private:
  const TriangleMesh* mesh_;
  std::vector<double> cdf_;
};

inline std::vector<SurfaceSample> sample_area_weighted(const TriangleMesh& mesh, std::size_t n, const CounterRng& rng) {
  const AreaSampler sampler(mesh);
  std::vector<SurfaceSample> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = sampler.sample(rng, i); }, 1024);
  return out;
}

}  // namespace sealvox
