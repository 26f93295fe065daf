#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "sealvox/extract/assemble.hpp"
#include "sealvox/extract/fidelity.hpp"
#include "sealvox/extract/marching_cubes.hpp"
#include "sealvox/extract/validate.hpp"
#include "sealvox/pipeline/config.hpp"
#include "sealvox/sign/resolve.hpp"
#include "sealvox/voxelize/udf.hpp"

namespace sealvox {

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct RemeshResult {
  TriangleMesh mesh;  // normalized coordinates
  WatertightReport report;
  std::size_t occupied_voxels = 0;
  std::size_t occupancy_bricks = 0;
  std::size_t band_bricks = 0;
  std::size_t sdf_bricks = 0;
  std::size_t open_components = 0;
  std::size_t occupied_components = 0;
  std::vector<StageTiming> timings;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(&out), last_(std::chrono::steady_clock::now()) {}
  void mark(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_->push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>* out_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace detail

/// Voxelize, resolve signs, assemble and extract. `mesh` must already lie in
/// the normalized domain; the result stays in normalized coordinates.
inline RemeshResult remesh(const TriangleMesh& mesh, const PipelineConfig& config) {
  validate_config(config);
  if (mesh.faces.empty()) throw InvalidArgument("mesh has no faces");
  RemeshResult r;
  detail::StageClock clock(r.timings);
  const GridSpec spec = GridSpec::make(config.resolution);
  const SignParams params = config.sign_params();
  const TriangleBVH bvh(mesh);
  clock.mark("bvh");
  ScalarSdf sdf;
  {
    const OccupancyGrid occ = voxelize_surface(mesh, spec);
    r.occupied_voxels = occ.occupied_count();
    r.occupancy_bricks = occ.mask.active_brick_count();
    clock.mark("voxelize");
    const DistanceField dist = compute_udf(bvh, occ, band_for_method(config.method, params));
    r.band_bricks = dist.values.active_brick_count();
    clock.mark("udf");
    SignResolution signs = resolve_signs(config.method, mesh, bvh, occ, dist, params);
    r.open_components = signs.components.open_count();
    r.occupied_components = signs.components.components.size();
    clock.mark("signs");
    if (signs.is_scalar()) {
      sdf = std::move(std::get<ScalarSdf>(signs.field));
    } else {
      AssembleParams ap;
      ap.thicken_delta = config.thicken_delta;
      ap.extract_resolution = config.extraction_resolution();
      const OpenComponentSet none;
      const bool offset = config.method == SignMethod::Watershed && config.thicken;
      sdf = assemble_sdf(dist, signs.signs(), offset ? signs.components : none, bvh, ap);
    }
    r.sdf_bricks = sdf.values.active_brick_count();
    clock.mark("assemble");
  }
  r.mesh = marching_cubes(sdf);
  sdf = ScalarSdf{};
  clock.mark("marching_cubes");
  if (config.keep_largest && !r.mesh.faces.empty()) r.mesh = keep_largest_component(r.mesh);
  r.report = validate_watertight(r.mesh);
  clock.mark("validate");
  return r;
}

}  // namespace sealvox
