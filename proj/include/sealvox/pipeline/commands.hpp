#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sealvox/curation/sample_set.hpp"
#include "sealvox/curation/sampling.hpp"
#include "sealvox/curation/thin_shell.hpp"
#include "sealvox/mesh/mesh_io.hpp"
#include "sealvox/pipeline/config.hpp"
#include "sealvox/pipeline/pipeline.hpp"
#include "sealvox/pipeline/report.hpp"

namespace sealvox {

enum class ExitCode : int { Ok = 0, Failed = 1, Invalid = 2 };

namespace fs = std::filesystem;

/// Mesh files (.obj, .ply, .stl) directly inside `input`, sorted by name,
/// or `input` itself when it is not a directory.
inline std::vector<fs::path> collect_inputs(const fs::path& input) {
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> out;
  for (const fs::directory_entry& e : fs::directory_iterator(input)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj" || ext == ".ply" || ext == ".stl") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Serializes report lines to stdout and, when configured, a JSON-lines file.
class ReportWriter {
 public:
  explicit ReportWriter(const std::string& path, std::ostream& console = std::cout) : console_(&console) {
    if (path.empty()) return;
    file_.open(path, std::ios::trunc);
    if (!file_) throw IoError("cannot open report '" + path + "' for writing");
  }

  void write(const nlohmann::json& entry) {
    const std::string line = entry.dump();
    const std::lock_guard lock(mutex_);
    *console_ << line << '\n' << std::flush;
    if (file_.is_open()) file_ << line << '\n' << std::flush;
  }

 private:
  std::ostream* console_;
  std::ofstream file_;
  std::mutex mutex_;
};

namespace detail {

struct LoadedInput {
  TriangleMesh raw;
  TriangleMesh mesh;  // normalized
  NormalizationTransform transform;
};

inline LoadedInput load_normalized(const fs::path& path, double margin) {
  LoadedInput in;
  in.raw = load_mesh(path);
  auto [mesh, t] = normalize_to_unit_cube(in.raw, margin);
  in.mesh = std::move(mesh);
  in.transform = t;
  return in;
}

// Writes through a sibling file and renames, so a failure never leaves a
// partial output under the final name.
inline void save_atomically(const TriangleMesh& mesh, const fs::path& path, const NormalizationTransform& t) {
  const fs::path partial = path.parent_path() / (path.stem().string() + ".partial" + path.extension().string());
  save_mesh(mesh, partial, t);
  fs::rename(partial, path);
}

inline nlohmann::json entry_for(const char* command, const fs::path& input, const PipelineConfig& c) {
  nlohmann::json j;
  j["command"] = command;
  j["input"] = input.string();
  j["status"] = "ok";
  j["config"] = config_to_json(c);
  j["margin_used"] = c.effective_margin();
  j["outputs"] = nlohmann::json::array();
  return j;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline std::optional<CurationMetrics> curation_if_closed(const TriangleMesh& mesh, const WatertightReport& report,
                                                         const PipelineConfig& c) {
  if (mesh.faces.empty() || !report.is_watertight()) return std::nullopt;
  return thin_shell_ratio(mesh, std::max<std::size_t>(c.n_probe, 1000), c.probe_offset(), c.seed,
                          c.thin_shell_threshold);
}

}  // namespace detail

/// Remeshes one file into `<out-dir>/<stem>.watertight.ply` (original units).
inline nlohmann::json watertight_one(const fs::path& input, const PipelineConfig& c) {
  nlohmann::json j = detail::entry_for("watertight", input, c);
  try {
    const auto start = std::chrono::steady_clock::now();
    const detail::LoadedInput in = detail::load_normalized(input, c.effective_margin());
    const double load_ms = detail::elapsed_ms(start);
    const RemeshResult r = remesh(in.mesh, c);
    j.update(remesh_summary(r));
    nlohmann::json timings = to_json(r.timings);
    timings["load"] = load_ms;
    if (r.mesh.faces.empty()) throw Error("output mesh is empty");
    auto t = std::chrono::steady_clock::now();
    j["fidelity"] = to_json(fidelity_metrics(in.mesh, r.mesh, std::max<std::size_t>(c.fidelity_samples, 1000), c.seed));
    j["fidelity"]["units"] = "normalized";
    timings["fidelity"] = detail::elapsed_ms(t);
    t = std::chrono::steady_clock::now();
    const auto curation = detail::curation_if_closed(r.mesh, r.report, c);
    j["curation"] = curation ? to_json(*curation) : nlohmann::json();
    timings["curation"] = detail::elapsed_ms(t);
    const fs::path out = fs::path(c.out_dir) / (input.stem().string() + ".watertight.ply");
    t = std::chrono::steady_clock::now();
    detail::save_atomically(r.mesh, out, in.transform);
    timings["save"] = detail::elapsed_ms(t);
    j["outputs"].push_back(out.string());
    j["timings_ms"] = timings;
    if (!r.report.is_watertight()) throw Error("output mesh is not watertight");
  } catch (const std::exception& e) {
    j["status"] = "failed";
    j["error"] = e.what();
  }
  return j;
}

/// Runs every sign method on one file; writes `<stem>.<method>.ply` and
/// `<stem>.compare.json`.
inline nlohmann::json compare_one(const fs::path& input, const PipelineConfig& c) {
  nlohmann::json j = detail::entry_for("compare", input, c);
  try {
    const detail::LoadedInput in = detail::load_normalized(input, c.effective_margin());
    nlohmann::json table = nlohmann::json::object();
    for (const SignMethod m : {SignMethod::Watershed, SignMethod::FloodFill, SignMethod::PseudoSdf, SignMethod::Visibility}) {
      const std::string name(method_name(m));
      nlohmann::json row;
      try {
        PipelineConfig mc = c;
        mc.method = m;
        const RemeshResult r = remesh(in.mesh, mc);
        row["watertight"] = r.report.is_watertight();
        row["faces"] = r.report.faces;
        row["components"] = r.report.component_count();
        row["interior_volume"] = r.report.signed_volume;
        if (r.mesh.faces.empty()) {
          row["chamfer"] = nullptr;
          row["hausdorff"] = nullptr;
        } else {
          const FidelityMetrics f = fidelity_metrics(in.mesh, r.mesh, std::max<std::size_t>(c.fidelity_samples, 1000), c.seed);
          row["chamfer"] = f.chamfer;
          row["hausdorff"] = f.hausdorff;
        }
        row["timings_ms"] = to_json(r.timings);
        const fs::path out = fs::path(c.out_dir) / (input.stem().string() + "." + name + ".ply");
        detail::save_atomically(r.mesh, out, in.transform);
        j["outputs"].push_back(out.string());
      } catch (const std::exception& e) {
        row["error"] = e.what();
        j["status"] = "failed";
      }
      table[name] = row;
    }
    j["methods"] = table;
    const fs::path table_path = fs::path(c.out_dir) / (input.stem().string() + ".compare.json");
    std::ofstream f(table_path, std::ios::trunc);
    f << table.dump(2) << '\n';
    if (!f) throw IoError("failed writing '" + table_path.string() + "'");
    j["outputs"].push_back(table_path.string());
  } catch (const std::exception& e) {
    j["status"] = "failed";
    j["error"] = e.what();
  }
  return j;
}

/// Samples a watertight mesh into `<stem>.surface.usmp` and
/// `<stem>.supervision.usmp`, in normalized coordinates.
inline nlohmann::json sample_one(const fs::path& input, const PipelineConfig& c) {
  nlohmann::json j = detail::entry_for("sample", input, c);
  try {
    const detail::LoadedInput in = detail::load_normalized(input, c.effective_margin());
    const WatertightReport report = validate_watertight(in.mesh);
    j["watertight"] = to_json(report);
    if (!report.is_watertight()) throw InvalidArgument("mesh is not watertight");
    const TriangleBVH bvh(in.mesh);
    const auto start = std::chrono::steady_clock::now();
    const SampleSet surface = sample_surface(in.mesh, c.n_uniform, c.n_sharp, c.sharp_angle, c.seed);
    const std::vector<double> sigmas = c.sigmas();
    const SampleSet supervision = sample_supervision(in.mesh, bvh, c.near_count(), sigmas, c.free_count(), c.seed);
    j["timings_ms"] = {{"sampling", detail::elapsed_ms(start)}};
    const fs::path surface_path = fs::path(c.out_dir) / (input.stem().string() + ".surface.usmp");
    const fs::path supervision_path = fs::path(c.out_dir) / (input.stem().string() + ".supervision.usmp");
    export_samples(surface, surface_path);
    export_samples(supervision, supervision_path);
    j["outputs"] = {surface_path.string(), supervision_path.string()};
    j["counts"] = {{"surface", surface.size()}, {"supervision", supervision.size()}};
    for (std::size_t k = 0; k < kSampleKindNames.size(); ++k) {
      j["counts"][std::string(kSampleKindNames[k])] = surface.counts()[k] + supervision.counts()[k];
    }
    j["units"] = "normalized";
  } catch (const std::exception& e) {
    j["status"] = "failed";
    j["error"] = e.what();
  }
  return j;
}

/// Topology and thin-shell report for one file. Status "load_failed" when
/// the file cannot be read, "failed" when it is not watertight.
inline nlohmann::json validate_one(const fs::path& input, const PipelineConfig& c) {
  nlohmann::json j = detail::entry_for("validate", input, c);
  detail::LoadedInput in;
  try {
    in = detail::load_normalized(input, c.effective_margin());
  } catch (const std::exception& e) {
    j["status"] = "load_failed";
    j["error"] = e.what();
    return j;
  }
  try {
    const WatertightReport report = validate_watertight(in.mesh);
    j["watertight"] = to_json(report);
    const auto curation = detail::curation_if_closed(in.mesh, report, c);
    j["curation"] = curation ? to_json(*curation) : nlohmann::json();
    if (!report.is_watertight()) {
      j["status"] = "failed";
      j["error"] = "mesh is not watertight";
    }
  } catch (const std::exception& e) {
    j["status"] = "failed";
    j["error"] = e.what();
  }
  return j;
}

/// Runs `one` over every input, writing one report line per mesh. Meshes
/// are processed in order; a failure is recorded and the batch continues.
template <class Fn>
ExitCode run_batch(const fs::path& input, const PipelineConfig& c, ReportWriter& writer, Fn&& one,
                   std::ostream& log = std::cerr) {
  const std::vector<fs::path> inputs = collect_inputs(input);
  if (inputs.empty()) {
    log << "no mesh files (.obj, .ply, .stl) in '" << input.string() << "'\n";
    return ExitCode::Failed;
  }
  fs::create_directories(c.out_dir);
  ExitCode code = ExitCode::Ok;
  std::set<std::string> stems;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json entry;
    if (!stems.insert(inputs[i].stem().string()).second) {
      entry = detail::entry_for("batch", inputs[i], c);
      entry["status"] = "failed";
      entry["error"] = "output name collides with an earlier input of the same stem";
    } else {
      entry = one(inputs[i], c);
    }
    const std::string status = entry.value("status", "failed");
    if (status != "ok") code = ExitCode::Failed;
    if (status == "load_failed" && inputs.size() == 1) code = ExitCode::Invalid;
    log << "[" << (i + 1) << "/" << inputs.size() << "] " << inputs[i].string() << ": " << status;
    if (entry.contains("error")) log << " (" << entry["error"].get<std::string>() << ")";
    log << " " << static_cast<long long>(detail::elapsed_ms(start)) << " ms\n";
    writer.write(entry);
  }
  return code;
}

}  // namespace sealvox
