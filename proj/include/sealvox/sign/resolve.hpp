#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "sealvox/sign/baselines.hpp"
#include "sealvox/sign/flood_fill.hpp"
#include "sealvox/sign/open_surface.hpp"
#include "sealvox/sign/watershed.hpp"

namespace sealvox {

enum class SignMethod { Watershed, FloodFill, PseudoSdf, Visibility };

inline std::string_view method_name(SignMethod m) {
  switch (m) {
    case SignMethod::Watershed: return "watershed";
    case SignMethod::FloodFill: return "floodfill";
    case SignMethod::PseudoSdf: return "pseudo-sdf";
    case SignMethod::Visibility: return "visibility";
  }
  return "?";
}

inline SignMethod parse_method(std::string_view s) {
  for (const SignMethod m : {SignMethod::Watershed, SignMethod::FloodFill, SignMethod::PseudoSdf, SignMethod::Visibility}) {
    if (s == method_name(m)) return m;
  }
  throw InvalidArgument("unknown sign method '" + std::string(s) + "'");
}

struct SignParams {
  double tau_close = 2.0;
  double thicken_delta = 1.5;
  bool thicken = true;
  double epsilon = 1.0;
  int rays = 26;
};

/// Band a method needs from the distance field.
inline int band_for_method(SignMethod method, const SignParams& p) {
  switch (method) {
    case SignMethod::Watershed: return band_for(p.tau_close, p.thicken ? p.thicken_delta : 0.0);
    case SignMethod::PseudoSdf: return std::max(band_for(0.0, 0.0), static_cast<int>(std::ceil(p.epsilon)) + 2);
    case SignMethod::FloodFill:
    case SignMethod::Visibility: return band_for(0.0, 0.0);
  }
  return band_for(0.0, 0.0);
}

/// Labels (watershed, floodfill, visibility) or a scalar field (pseudo-sdf),
/// plus the occupied-component analysis (watershed only; empty otherwise).
struct SignResolution {
  std::variant<SignField, ScalarSdf> field;
  OpenComponentSet components;

  bool is_scalar() const { return std::holds_alternative<ScalarSdf>(field); }
  const SignField& signs() const { return std::get<SignField>(field); }
  const ScalarSdf& scalar() const { return std::get<ScalarSdf>(field); }
};

/// Full watershed strategy: superlevel flood fill, watershed completion,
/// open-component detection and (optionally) thickening.
inline SignResolution watershed_signs(const TriangleMesh& mesh, const TriangleBVH& bvh, const OccupancyGrid& occ,
                                      const DistanceField& dist, double tau, bool thicken, double delta) {
  SignField labels = watershed_assign(dist, flood_fill_exterior(dist, occ, tau), tau);
  OpenComponentSet comps = identify_open_components(occ, labels, mesh);
  if (thicken) labels = thicken_open_components(dist, labels, comps, bvh, delta);
  return {std::move(labels), std::move(comps)};
}

inline SignResolution resolve_signs(SignMethod method, const TriangleMesh& mesh, const TriangleBVH& bvh,
                                    const OccupancyGrid& occ, const DistanceField& dist, const SignParams& p) {
  switch (method) {
    case SignMethod::Watershed: return watershed_signs(mesh, bvh, occ, dist, p.tau_close, p.thicken, p.thicken_delta);
    case SignMethod::FloodFill: return {watershed_assign(dist, flood_fill_exterior(dist, occ, 0.0), 0.0), {}};
    case SignMethod::PseudoSdf: return {baseline_pseudo_sdf(dist, p.epsilon), {}};
    case SignMethod::Visibility: return {baseline_visibility_signs(bvh, occ, dist, p.rays), {}};
  }
  throw InvalidArgument("unknown sign method");
}

}  // namespace sealvox
