#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sealvox/grid/sparse_grid.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"
#include "sealvox/sign/resolve.hpp"

namespace sealvox {

/// Largest distance band the pipeline will allocate.
inline constexpr int kMaxBand = 16;

struct PipelineConfig {
  int resolution = 512;
  SignMethod method = SignMethod::Watershed;
  double tau_close = 2.0;
  double thicken_delta = 1.5;
  bool thicken = true;
  double epsilon = 1.0;
  int rays = 26;
  double margin = kDefaultMargin;
  int extract_res = 0;  // 0 = resolution
  bool keep_largest = false;

  // Sampling profile. Empty sigmas mean {h, 4h} of the extraction grid;
  // probe_eps 0 means 2h. n_supervision > 0 overrides n_near/n_free with
  // an 80/20 split.
  std::size_t n_uniform = 480000;
  std::size_t n_sharp = 120000;
  double sharp_angle = 30.0;
  std::size_t n_near = 800000;
  std::vector<double> near_sigmas;
  std::size_t n_free = 200000;
  std::size_t n_supervision = 0;
  double probe_eps = 0.0;
  std::size_t n_probe = 20000;
  double thin_shell_threshold = 0.5;
  std::size_t fidelity_samples = 20000;

  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all cores
  std::string report;
  std::string out_dir = ".";

  SignParams sign_params() const { return {tau_close, thicken_delta, thicken, epsilon, rays}; }
  /// Margin used when normalizing inputs: `margin`, widened so that at
  /// least tau-close + 1.5 voxels separate the mesh from the domain boundary
  /// and the exterior flood always has seeds.
  double effective_margin() const {
    const double voxels = (method == SignMethod::Watershed ? tau_close : 0.0) + 1.5;
    return std::max(margin, voxels * 2.0 / resolution);
  }
  int extraction_resolution() const { return extract_res == 0 ? resolution : extract_res; }
  double extraction_voxel() const { return 2.0 / extraction_resolution(); }
  std::vector<double> sigmas() const {
    if (!near_sigmas.empty()) return near_sigmas;
    return {extraction_voxel(), 4.0 * extraction_voxel()};
  }
  double probe_offset() const { return probe_eps > 0.0 ? probe_eps : 2.0 * extraction_voxel(); }
  std::size_t near_count() const { return n_supervision > 0 ? n_supervision - free_count() : n_near; }
  std::size_t free_count() const { return n_supervision > 0 ? n_supervision / 5 : n_free; }
};

/// Throws InvalidArgument naming the first invalid field.
inline void validate_config(const PipelineConfig& c) {
  (void)GridSpec::make(c.resolution);
  if (!(c.tau_close >= 0.0)) throw InvalidArgument("tau-close must be >= 0");
  if (c.thicken && !(c.thicken_delta >= 0.5)) throw InvalidArgument("thicken-delta must be >= 0.5");
  if (!(c.epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (c.rays < 6) throw InvalidArgument("rays must be >= 6");
  if (!(c.margin >= 0.0 && c.margin < 0.2)) throw InvalidArgument("margin must lie in [0, 0.2)");
  const int band = band_for_method(c.method, c.sign_params());
  if (band > kMaxBand) {
    throw InvalidArgument("parameters need a distance band of " + std::to_string(band) + " voxels; the maximum is " +
                          std::to_string(kMaxBand) + " (tau-close, thicken-delta and epsilon must be <= " +
                          std::to_string(kMaxBand - 2) + ")");
  }
  if (!(c.effective_margin() < 0.2)) {
    throw InvalidArgument("tau-close needs more clearance than a margin below 0.2 leaves at resolution " +
                          std::to_string(c.resolution));
  }
  const int m = c.extraction_resolution();
  if (m < 2 || m > c.resolution || c.resolution % m != 0) {
    throw InvalidArgument("extract-res must divide resolution and not exceed it");
  }
  if (!(c.sharp_angle > 0.0 && c.sharp_angle <= 180.0)) throw InvalidArgument("sharp-angle must lie in (0, 180]");
  for (const double s : c.near_sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("near-sigmas must be positive");
  }
  if (!(c.probe_eps >= 0.0)) throw InvalidArgument("probe-eps must be >= 0");
  if (c.threads < 0) throw InvalidArgument("threads must be >= 0");
}

namespace detail {

// One entry per config field: flat key shared by the JSON file, the
// command-line flag (--key) and the environment (US_KEY).
template <class Fn>
void visit_config(PipelineConfig& c, Fn&& fn) {
  fn("resolution", c.resolution);
  fn("method", c.method);
  fn("tau-close", c.tau_close);
  fn("thicken-delta", c.thicken_delta);
  fn("thicken", c.thicken);
  fn("epsilon", c.epsilon);
  fn("rays", c.rays);
  fn("margin", c.margin);
  fn("extract-res", c.extract_res);
  fn("keep-largest", c.keep_largest);
  fn("n-uniform", c.n_uniform);
  fn("n-sharp", c.n_sharp);
  fn("sharp-angle", c.sharp_angle);
  fn("n-near", c.n_near);
  fn("near-sigmas", c.near_sigmas);
  fn("n-free", c.n_free);
  fn("n-supervision", c.n_supervision);
  fn("probe-eps", c.probe_eps);
  fn("n-probe", c.n_probe);
  fn("thin-shell-threshold", c.thin_shell_threshold);
  fn("fidelity-samples", c.fidelity_samples);
  fn("seed", c.seed);
  fn("threads", c.threads);
  fn("report", c.report);
  fn("out-dir", c.out_dir);
}

inline std::string env_name(std::string key) {
  for (char& ch : key) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return "US_" + key;
}

template <class T>
void from_json_value(const nlohmann::json& j, T& out) {
  if constexpr (std::is_same_v<T, SignMethod>) {
    out = parse_method(j.get<std::string>());
  } else {
    out = j.get<T>();
  }
}

template <class T>
nlohmann::json to_json_value(const T& v) {
  if constexpr (std::is_same_v<T, SignMethod>) {
    return std::string(method_name(v));
  } else {
    return v;
  }
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    const std::size_t j = std::min(s.find(',', i), s.size());
    const std::string item = s.substr(i, j - i);
    if (!item.empty()) {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    }
    i = j + 1;
  }
  return out;
}

template <class T>
void from_string(const std::string& s, T& out) {
  if constexpr (std::is_same_v<T, SignMethod>) {
    out = parse_method(s);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "1" || s == "true" || s == "on" || s == "yes") {
      out = true;
    } else if (s == "0" || s == "false" || s == "off" || s == "no") {
      out = false;
    } else {
      throw std::invalid_argument(s);
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = s;
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    out = parse_list(s);
  } else if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    out = static_cast<T>(std::stod(s, &used));
    if (used != s.size()) throw std::invalid_argument(s);
  } else if constexpr (std::is_signed_v<T>) {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    out = static_cast<T>(v);
  } else {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    out = static_cast<T>(v);
  }
}

}  // namespace detail

inline nlohmann::json config_to_json(PipelineConfig c) {
  nlohmann::json j = nlohmann::json::object();
  detail::visit_config(c, [&](const char* key, auto& field) { j[key] = detail::to_json_value(field); });
  return j;
}

/// Applies the keys present in `j` on top of `c`. Unknown keys are errors.
inline void apply_config_json(PipelineConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    detail::visit_config(c, [&](const char* k, auto& field) {
      if (key != k) return;
      known = true;
      try {
        detail::from_json_value(value, field);
      } catch (const nlohmann::json::exception&) {
        throw InvalidArgument("config key '" + key + "' has the wrong type");
      }
    });
    if (!known) throw InvalidArgument("unknown config key '" + key + "'");
  }
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  apply_config_json(c, j);
  return c;
}

/// Applies US_* environment variables on top of `c`.
inline void apply_config_env(PipelineConfig& c) {
  detail::visit_config(c, [&](const char* key, auto& field) {
    const std::string name = detail::env_name(key);
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return;
    try {
      detail::from_string(v, field);
    } catch (const std::exception&) {
      throw InvalidArgument("environment variable " + name + " has an invalid value '" + v + "'");
    }
  });
}

/// Applies "key" -> string overrides (command-line form) on top of `c`.
inline void apply_config_strings(PipelineConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    bool known = false;
    detail::visit_config(c, [&](const char* k, auto& field) {
      if (key != k) return;
      known = true;
      try {
        detail::from_string(value, field);
      } catch (const std::exception&) {
        throw InvalidArgument("--" + key + " has an invalid value '" + value + "'");
      }
    });
    if (!known) throw InvalidArgument("unknown option '" + key + "'");
  }
}

inline nlohmann::json read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot read config file '" + path.string() + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Defaults, then the JSON file, then US_* variables, then flags; validated.
inline PipelineConfig resolve_config(const std::optional<std::filesystem::path>& file,
                                     const std::map<std::string, std::string>& flags) {
  PipelineConfig c;
  if (file) apply_config_json(c, read_config_file(*file));
  apply_config_env(c);
  apply_config_strings(c, flags);
  validate_config(c);
  return c;
}

}  // namespace sealvox
