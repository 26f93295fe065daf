#pragma once

#include <vector>

#include "json.hpp"
#include "sealvox/curation/thin_shell.hpp"
#include "sealvox/extract/fidelity.hpp"
#include "sealvox/extract/validate.hpp"
#include "sealvox/pipeline/pipeline.hpp"

namespace sealvox {

inline nlohmann::json to_json(const WatertightReport& r) {
  nlohmann::json j;
  j["is_watertight"] = r.is_watertight();
  j["orientation_consistent"] = r.orientation_consistent();
  j["vertices"] = r.vertices;
  j["faces"] = r.faces;
  j["edges"] = r.edges;
  j["boundary_edges"] = r.boundary_edges;
  j["nonmanifold_edges"] = r.nonmanifold_edges;
  j["misoriented_edges"] = r.misoriented_edges;
  j["component_count"] = r.component_count();
  j["signed_volume"] = r.signed_volume;
  j["components"] = nlohmann::json::array();
  for (const ComponentTopology& c : r.components) {
    j["components"].push_back({{"vertices", c.vertices},
                               {"edges", c.edges},
                               {"faces", c.faces},
                               {"euler", c.euler},
                               {"genus", c.genus},
                               {"signed_volume", c.signed_volume}});
  }
  return j;
}

inline nlohmann::json to_json(const FidelityMetrics& f) { return {{"chamfer", f.chamfer}, {"hausdorff", f.hausdorff}}; }

inline nlohmann::json to_json(const CurationMetrics& m) {
  return {{"thin_shell_ratio", m.thin_shell_ratio},
          {"thin_shell", m.thin_shell},
          {"component_count", m.component_count},
          {"watertight", m.watertight},
          {"interior_probe_count", m.interior_probe_count},
          {"exterior_probe_count", m.exterior_probe_count}};
}

inline nlohmann::json to_json(const std::vector<StageTiming>& timings) {
  nlohmann::json j = nlohmann::json::object();
  for (const StageTiming& t : timings) j[t.stage] = t.ms;
  return j;
}

/// Everything in a RemeshResult except the mesh and the timings.
inline nlohmann::json remesh_summary(const RemeshResult& r) {
  return {{"occupied_voxels", r.occupied_voxels},
          {"active_bricks", {{"occupancy", r.occupancy_bricks}, {"band", r.band_bricks}, {"sdf", r.sdf_bricks}}},
          {"occupied_components", r.occupied_components},
          {"open_components", r.open_components},
          {"watertight", to_json(r.report)}};
}

}  // namespace sealvox
