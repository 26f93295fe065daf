#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sealvox/pipeline/commands.hpp"

namespace {

using namespace sealvox;

struct Subcommand {
  CLI::App* app = nullptr;
  std::string input;
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"resolution", "voxels per axis, power of two in [64, 2048]"},
      {"method", "sign method: watershed, floodfill, pseudo-sdf, visibility"},
      {"tau-close", "hole-closing distance in voxels"},
      {"thicken-delta", "offset around open surfaces in voxels"},
      {"thicken", "thicken open surfaces (watershed)"},
      {"epsilon", "pseudo-sdf offset in voxels"},
      {"rays", "visibility rays per voxel"},
      {"margin", "normalization margin"},
      {"extract-res", "extraction resolution, 0 = resolution"},
      {"keep-largest", "keep only the largest output component"},
      {"n-uniform", "uniform surface samples"},
      {"n-sharp", "sharp-edge surface samples"},
      {"sharp-angle", "dihedral angle (deg) above which an edge is sharp"},
      {"n-near", "near-surface supervision samples"},
      {"near-sigmas", "comma-separated near-surface offsets, empty = h,4h of the extraction grid"},
      {"n-free", "free-space supervision samples"},
      {"n-supervision", "total supervision samples (80% near, 20% free), 0 = use n-near/n-free"},
      {"probe-eps", "thin-shell probe offset, 0 = 2h of the extraction grid"},
      {"n-probe", "thin-shell probes"},
      {"thin-shell-threshold", "ratio below which a mesh is flagged as a thin shell"},
      {"fidelity-samples", "samples per side for Chamfer/Hausdorff"},
      {"seed", "random seed"},
      {"threads", "worker threads, 0 = all cores"},
      {"report", "JSON-lines report file"},
      {"out-dir", "output directory"},
  };
  return d;
}

std::string default_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x.dump();
    return s;
  }
  return v.dump();
}

void add_config_options(Subcommand& sub) {
  PipelineConfig defaults;
  const nlohmann::json shown = config_to_json(defaults);
  detail::visit_config(defaults, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    const std::string name = std::string("--") + key;
    const std::string desc =
        descriptions().at(key) + " [default: " + default_text(shown[key]) + "; env " + detail::env_name(key) + "]";
    std::string& slot = sub.values[key];
    if constexpr (std::is_same_v<T, bool>) {
      sub.options[key] = sub.app->add_flag(name + "{true}", slot, desc);
    } else {
      sub.options[key] = sub.app->add_option(name, slot, desc);
    }
  });
  sub.app->add_option("--config", sub.config_file, "JSON config file with the same keys as the flags");
}

int run(Subcommand& sub, const std::string& command) {
  std::map<std::string, std::string> given;
  for (const auto& [key, opt] : sub.options) {
    if (opt->count() > 0) given[key] = sub.values[key];
  }
  PipelineConfig config;
  try {
    config = resolve_config(sub.config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(sub.config_file),
                            given);
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Invalid);
  }
  set_thread_count(config.threads);
  try {
    ReportWriter writer(config.report);
    if (command == "watertight") return static_cast<int>(run_batch(sub.input, config, writer, watertight_one));
    if (command == "compare") return static_cast<int>(run_batch(sub.input, config, writer, compare_one));
    if (command == "sample") return static_cast<int>(run_batch(sub.input, config, writer, sample_one));
    return static_cast<int>(run_batch(sub.input, config, writer, validate_one));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Failed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watertight remeshing and training-data sampling for triangle meshes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sealvox::kToolVersion));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"watertight", "remesh a mesh or every mesh in a directory into a watertight surface"},
      {"compare", "run all four sign methods on a mesh and tabulate the results"},
      {"sample", "write surface and SDF supervision samples of a watertight mesh"},
      {"validate", "report watertightness and thin-shell metrics of a mesh"},
  };
  std::map<std::string, Subcommand> subs;
  for (const auto& [name, help] : commands) {
    Subcommand& sub = subs[name];
    sub.app = app.add_subcommand(name, help);
    sub.app->add_option("input", sub.input, "mesh file (.obj, .ply, .stl) or directory")->required();
    add_config_options(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(sealvox::ExitCode::Invalid);
  }
  for (auto& [name, sub] : subs) {
    if (sub.app->parsed()) return run(sub, name);
  }
  return static_cast<int>(sealvox::ExitCode::Invalid);
}
