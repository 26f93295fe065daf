#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sealvox/pipeline/commands.hpp"
#include "support/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace sealvox;
namespace tc = sealvox::testing;

namespace {

PipelineConfig at(int n, SignMethod m = SignMethod::Watershed) {
  PipelineConfig c;
  c.resolution = n;
  c.method = m;
  return c;
}

std::vector<Vec3> sorted_vertices(const TriangleMesh& m) {
  std::vector<Vec3> v = m.vertices;
  std::sort(v.begin(), v.end(), [](const Vec3& a, const Vec3& b) {
    return a.x < b.x || (a.x == b.x && (a.y < b.y || (a.y == b.y && a.z < b.z)));
  });
  return v;
}

// Largest distance from a vertex of `a` to the surface of `b`.
double vertex_gap(const TriangleMesh& a, const TriangleMesh& b) {
  const TriangleBVH bvh(b);
  double worst = 0.0;
  for (const Vec3& p : a.vertices) worst = std::max(worst, bvh.distance(p));
  return worst;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }
  ScopedEnv(const ScopedEnv&) = delete;
  ScopedEnv& operator=(const ScopedEnv&) = delete;

 private:
  const char* name_;
};

}  // namespace

TEST(Pipeline, CorpusOutputsAreWatertight) {
  for (const tc::CorpusItem& item : tc::defect_corpus(30, 64, 5)) {
    const RemeshResult r = remesh(item.mesh, at(64));
    EXPECT_TRUE(r.report.is_watertight()) << item.name;
    EXPECT_FALSE(r.mesh.faces.empty()) << item.name;
    EXPECT_GT(r.report.signed_volume, 0.0) << item.name;
    for (const ComponentTopology& c : r.report.components) EXPECT_GT(c.signed_volume, 0.0) << item.name;
  }
}

TEST(Pipeline, OutputsStayWatertightThroughSaveAndLoad) {
  // The loader drops near-zero-area faces, so slivers would open holes.
  const tc::TempDir dir;
  for (const tc::CorpusItem& item : tc::defect_corpus(12, 64, 8)) {
    const RemeshResult r = remesh(item.mesh, at(64));
    for (const char* ext : {".ply", ".obj"}) {
      const std::filesystem::path path = dir / (item.name + ext);
      save_mesh(r.mesh, path);
      const TriangleMesh back = load_mesh(path);
      EXPECT_EQ(back.faces.size(), r.mesh.faces.size()) << item.name << ext;
      EXPECT_TRUE(validate_watertight(back).is_watertight()) << item.name << ext;
    }
  }
}

TEST(Pipeline, HoledBoxIsSealedAtDefaultTau) {
  // Hole of 2 voxels, box between layers 16 and 47 at N=64.
  const RemeshResult r = remesh(tc::holed_box(64, 16, 47, 2, {1}), at(64));
  ASSERT_TRUE(r.report.is_watertight());
  EXPECT_EQ(r.report.component_count(), 1u);
  EXPECT_EQ(r.open_components, 0u);
  // The sealed box encloses (31h)^3 up to the surface placement tolerance.
  const double side = 31.0 * 2.0 / 64;
  EXPECT_NEAR(r.report.signed_volume, side * side * side, 6.0 * side * side * (2.0 / 64));
}

TEST(Pipeline, AllMethodsProduceClosedSurfacesOnASphere) {
  const TriangleMesh sphere = tc::icosphere({0.01, -0.02, 0.03}, 0.6, 4);
  for (const SignMethod m : {SignMethod::Watershed, SignMethod::FloodFill, SignMethod::PseudoSdf, SignMethod::Visibility}) {
    const RemeshResult r = remesh(sphere, at(64, m));
    EXPECT_TRUE(r.report.is_watertight()) << method_name(m);
    EXPECT_GE(r.report.component_count(), 1u) << method_name(m);
  }
}

TEST(Pipeline, KeepLargestDropsSmallParts) {
  PipelineConfig c = at(64);
  c.keep_largest = true;
  const TriangleMesh scene = tc::merge({tc::icosphere({-0.3, 0, 0}, 0.4, 3), tc::box({0.5, 0.5, 0.5}, {0.7, 0.7, 0.7})});
  const RemeshResult r = remesh(scene, c);
  EXPECT_EQ(r.report.component_count(), 1u);
  EXPECT_LT(r.mesh.bounds().hi.x, 0.2);
}

TEST(Pipeline, MirrorEquivariance) {
  for (const tc::CorpusItem& item : tc::defect_corpus(10, 64, 8)) {
    const RemeshResult a = remesh(item.mesh, at(64));
    const RemeshResult b = remesh(tc::mirrored_x(item.mesh), at(64));
    ASSERT_EQ(a.mesh.vertices.size(), b.mesh.vertices.size()) << item.name;
    ASSERT_EQ(a.mesh.faces.size(), b.mesh.faces.size()) << item.name;
    const std::vector<Vec3> va = sorted_vertices(tc::mirrored_x(a.mesh));
    const std::vector<Vec3> vb = sorted_vertices(b.mesh);
    for (std::size_t i = 0; i < va.size(); ++i) ASSERT_LE(norm(va[i] - vb[i]), 1e-12) << item.name;
    EXPECT_NEAR(a.report.signed_volume, b.report.signed_volume, 1e-12) << item.name;
  }
}

TEST(Pipeline, TranslationByWholeBricksAcrossSeams) {
  // One brick at N=64 is 8 voxels = 0.25.
  const Vec3 shift{0.25, -0.25, 0.25};
  for (const tc::CorpusItem& item : tc::defect_corpus(10, 64, 13)) {
    const TriangleMesh base = transformed(item.mesh, NormalizationTransform{0.8, {}});
    const RemeshResult a = remesh(base, at(64));
    const RemeshResult b = remesh(tc::translated(base, shift), at(64));
    ASSERT_EQ(a.mesh.faces.size(), b.mesh.faces.size()) << item.name;
    EXPECT_EQ(a.report.component_count(), b.report.component_count()) << item.name;
    EXPECT_NEAR(a.report.signed_volume, b.report.signed_volume, 1e-9) << item.name;
    EXPECT_LE(vertex_gap(tc::translated(a.mesh, shift), b.mesh), 1e-9) << item.name;
  }
}

TEST(Pipeline, OutputIsIdenticalAcrossThreadCounts) {
  const auto corpus = tc::defect_corpus(6, 64, 21);
  for (const tc::CorpusItem& item : corpus) {
    std::optional<TriangleMesh> ref;
    for (const int threads : {1, 2, 8}) {
      const ThreadCountGuard guard(threads);
      const RemeshResult r = remesh(item.mesh, at(64));
      if (!ref) {
        ref = r.mesh;
        continue;
      }
      EXPECT_TRUE(r.mesh.vertices == ref->vertices) << item.name << " threads " << threads;
      EXPECT_TRUE(r.mesh.faces == ref->faces) << item.name << " threads " << threads;
    }
  }
}

TEST(Pipeline, TimingsCoverEveryStage) {
  const RemeshResult r = remesh(tc::icosphere({0, 0, 0}, 0.5, 3), at(64));
  std::vector<std::string> stages;
  for (const StageTiming& t : r.timings) {
    stages.push_back(t.stage);
    EXPECT_GE(t.ms, 0.0);
  }
  EXPECT_EQ(stages, (std::vector<std::string>{"bvh", "voxelize", "udf", "signs", "assemble", "marching_cubes", "validate"}));
  EXPECT_GT(r.occupancy_bricks, 0u);
  EXPECT_GE(r.band_bricks, r.occupancy_bricks);
}

TEST(Pipeline, RejectsEmptyMeshAndBadConfig) {
  EXPECT_THROW(remesh(TriangleMesh{}, at(64)), InvalidArgument);
  EXPECT_THROW(remesh(tc::icosphere({0, 0, 0}, 0.5, 2), at(100)), InvalidArgument);
}

TEST(Config, JsonRoundTripIsLossless) {
  PipelineConfig c;
  c.resolution = 256;
  c.method = SignMethod::Visibility;
  c.tau_close = 3.25;
  c.thicken = false;
  c.near_sigmas = {0.001, 0.125};
  c.seed = 0xfedcba9876543210ull;
  c.report = "r.jsonl";
  const nlohmann::json j = config_to_json(c);
  const PipelineConfig back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.method, SignMethod::Visibility);
}

TEST(Config, DefaultsMatchTheDocumentedProfile) {
  const PipelineConfig c;
  EXPECT_EQ(c.resolution, 512);
  EXPECT_EQ(c.method, SignMethod::Watershed);
  EXPECT_DOUBLE_EQ(c.tau_close, 2.0);
  EXPECT_DOUBLE_EQ(c.thicken_delta, 1.5);
  EXPECT_DOUBLE_EQ(c.margin, 0.03);
  EXPECT_EQ(c.extraction_resolution(), 512);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.n_uniform + c.n_sharp, 600000u);
  EXPECT_EQ(c.near_count() + c.free_count(), 1000000u);
  EXPECT_EQ(c.sigmas(), (std::vector<double>{2.0 / 512, 8.0 / 512}));
  EXPECT_DOUBLE_EQ(c.probe_offset(), 4.0 / 512);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, FlagsOverrideEnvOverrideFile) {
  const tc::TempDir dir;
  {
    std::ofstream f(dir / "c.json");
    f << R"({"resolution": 128, "tau-close": 1.0, "seed": 3, "method": "floodfill"})";
  }
  {
    const PipelineConfig c = resolve_config(dir / "c.json", {});
    EXPECT_EQ(c.resolution, 128);
    EXPECT_DOUBLE_EQ(c.tau_close, 1.0);
    EXPECT_EQ(c.method, SignMethod::FloodFill);
    EXPECT_DOUBLE_EQ(c.thicken_delta, 1.5);
  }
  const ScopedEnv env_tau("US_TAU_CLOSE", "2.5");
  const ScopedEnv env_seed("US_SEED", "9");
  {
    const PipelineConfig c = resolve_config(dir / "c.json", {});
    EXPECT_DOUBLE_EQ(c.tau_close, 2.5);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.resolution, 128);
  }
  {
    const PipelineConfig c = resolve_config(dir / "c.json", {{"seed", "11"}, {"thicken", "false"}, {"near-sigmas", "0.01,0.02"}});
    EXPECT_EQ(c.seed, 11u);
    EXPECT_DOUBLE_EQ(c.tau_close, 2.5);
    EXPECT_FALSE(c.thicken);
    EXPECT_EQ(c.near_sigmas, (std::vector<double>{0.01, 0.02}));
  }
}

TEST(Config, EveryKeyHasAnEnvironmentName) {
  PipelineConfig c;
  std::vector<std::string> keys;
  detail::visit_config(c, [&](const char* key, auto&) { keys.emplace_back(key); });
  EXPECT_EQ(keys.size(), config_to_json(c).size());
  EXPECT_EQ(detail::env_name("thin-shell-threshold"), "US_THIN_SHELL_THRESHOLD");
  EXPECT_EQ(detail::env_name("threads"), "US_THREADS");
}

TEST(Config, ParseErrors) {
  PipelineConfig c;
  EXPECT_THROW(apply_config_json(c, nlohmann::json::array()), InvalidArgument);
  EXPECT_THROW(apply_config_json(c, {{"resolutoin", 64}}), InvalidArgument);
  EXPECT_THROW(apply_config_json(c, {{"resolution", "big"}}), InvalidArgument);
  EXPECT_THROW(apply_config_json(c, {{"method", "magic"}}), InvalidArgument);
  EXPECT_THROW(apply_config_strings(c, {{"seed", "-1"}}), InvalidArgument);
  EXPECT_THROW(apply_config_strings(c, {{"rays", "12x"}}), InvalidArgument);
  EXPECT_THROW(apply_config_strings(c, {{"thicken", "maybe"}}), InvalidArgument);
  EXPECT_THROW(apply_config_strings(c, {{"bogus", "1"}}), InvalidArgument);
  {
    const ScopedEnv env("US_RESOLUTION", "abc");
    EXPECT_THROW(apply_config_env(c), InvalidArgument);
  }
  const tc::TempDir dir;
  {
    std::ofstream f(dir / "bad.json");
    f << "{ not json";
  }
  EXPECT_THROW(resolve_config(dir / "bad.json", {}), InvalidArgument);
  EXPECT_THROW(resolve_config(dir / "missing.json", {}), InvalidArgument);
}

TEST(Config, ValidationNamesTheField) {
  auto message = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    try {
      validate_config(c);
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message([](PipelineConfig& c) { c.resolution = 96; }), "");
  EXPECT_NE(message([](PipelineConfig& c) { c.resolution = 4096; }), "");
  EXPECT_NE(message([](PipelineConfig& c) { c.tau_close = -1; }).find("tau-close"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.thicken_delta = 0.25; }).find("thicken-delta"), std::string::npos);
  EXPECT_EQ(message([](PipelineConfig& c) { c.thicken_delta = 0.25, c.thicken = false; }), "");
  EXPECT_NE(message([](PipelineConfig& c) { c.epsilon = 0; }).find("epsilon"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.rays = 5; }).find("rays"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.margin = 0.2; }).find("margin"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.tau_close = 15; }).find("band"), std::string::npos);
  EXPECT_EQ(message([](PipelineConfig& c) { c.tau_close = 14; }), "");
  EXPECT_NE(message([](PipelineConfig& c) { c.extract_res = 384; }).find("extract-res"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.extract_res = 1024; }).find("extract-res"), std::string::npos);
  EXPECT_EQ(message([](PipelineConfig& c) { c.extract_res = 128; }), "");
  EXPECT_NE(message([](PipelineConfig& c) { c.sharp_angle = 0; }).find("sharp-angle"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.near_sigmas = {0.1, -1}; }).find("near-sigmas"), std::string::npos);
  EXPECT_NE(message([](PipelineConfig& c) { c.threads = -2; }).find("threads"), std::string::npos);
}

TEST(Commands, WatertightWritesOutputInOriginalUnits) {
  const tc::TempDir dir;
  // Loading scales the box by 1.84, so the 1.5-voxel opening becomes 2.8
  // voxels < 2 * tau.
  const TriangleMesh holed = tc::translated(transformed(tc::holed_box(64, 16, 47, 1, {1}), NormalizationTransform{10.0, {}}),
                                            {100, 0, 0});
  save_mesh(holed, dir / "holed.obj");
  PipelineConfig c = at(64);
  c.out_dir = (dir / "out").string();
  std::filesystem::create_directories(c.out_dir);
  const nlohmann::json entry = watertight_one(dir / "holed.obj", c);
  ASSERT_EQ(entry["status"], "ok") << entry.dump();
  EXPECT_TRUE(entry["watertight"]["is_watertight"].get<bool>());
  EXPECT_EQ(entry["open_components"], 0);
  const double h = 2.0 / 64;
  EXPECT_LT(entry["fidelity"]["chamfer"].get<double>(), h);
  const TriangleMesh out = load_mesh(entry["outputs"][0].get<std::string>());
  const double h_original = h * holed.bounds().extent().x / (2.0 * (1.0 - c.effective_margin()));
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(out.bounds().lo[a], holed.bounds().lo[a], h_original) << a;
    EXPECT_NEAR(out.bounds().hi[a], holed.bounds().hi[a], h_original) << a;
  }
  for (const char* key : {"config", "timings_ms", "active_bricks", "curation", "outputs"}) EXPECT_TRUE(entry.contains(key)) << key;
}

TEST(Commands, BatchContinuesPastFailures) {
  const tc::TempDir dir;
  std::filesystem::create_directories(dir / "in");
  const auto corpus = tc::defect_corpus(9, 64, 2);
  for (const tc::CorpusItem& item : corpus) save_mesh(item.mesh, dir / "in" / (item.name + ".obj"));
  {
    std::ofstream f(dir / "in" / "broken.obj");
    f << "v 0 0 0\nf 1 2 3\n";
  }
  {
    std::ofstream f(dir / "in" / "notes.txt");
    f << "ignored";
  }
  PipelineConfig c = at(64);
  c.out_dir = (dir / "out").string();
  c.report = (dir / "report.jsonl").string();
  std::ostringstream console;
  std::ostringstream log;
  ExitCode code;
  {
    ReportWriter writer(c.report, console);
    code = run_batch(dir / "in", c, writer, watertight_one, log);
  }
  EXPECT_EQ(code, ExitCode::Failed);
  std::size_t lines = 0;
  std::size_t ok = 0;
  std::istringstream report(slurp(dir / "report.jsonl"));
  for (std::string line; std::getline(report, line);) {
    ++lines;
    const nlohmann::json j = nlohmann::json::parse(line);
    if (j["status"] == "ok") ++ok;
  }
  EXPECT_EQ(lines, 10u);
  EXPECT_EQ(ok, 9u);
  EXPECT_EQ(console.str(), slurp(dir / "report.jsonl"));
  std::size_t outputs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "out")) outputs += e.path().extension() == ".ply" ? 1 : 0;
  EXPECT_EQ(outputs, 9u);
}

TEST(Commands, OutputBytesAreIdenticalAcrossThreadCounts) {
  const tc::TempDir dir;
  save_mesh(tc::holed_box(64, 20, 45, 3, {0, 3}), dir / "m.obj");
  std::string ref;
  for (const int threads : {1, 3}) {
    const ThreadCountGuard guard(threads);
    PipelineConfig c = at(64);
    c.out_dir = (dir / ("t" + std::to_string(threads))).string();
    std::filesystem::create_directories(c.out_dir);
    const nlohmann::json e = watertight_one(dir / "m.obj", c);
    ASSERT_EQ(e["status"], "ok");
    const std::string bytes = slurp(e["outputs"][0].get<std::string>());
    if (ref.empty()) {
      ref = bytes;
    } else {
      EXPECT_TRUE(bytes == ref);
    }
  }
}

TEST(Commands, CompareTabulatesEveryMethod) {
  const tc::TempDir dir;
  // After loading the opening is 2.8 voxels: open at tau 0, sealed at tau
  // 2, and closed by a pseudo-SDF offset of 2 voxels.
  save_mesh(tc::holed_box(64, 16, 47, 1, {1}), dir / "holed.obj");
  PipelineConfig c = at(64);
  c.epsilon = 2.0;
  c.out_dir = dir.path().string();
  const nlohmann::json e = compare_one(dir / "holed.obj", c);
  ASSERT_EQ(e["status"], "ok") << e.dump();
  const nlohmann::json& t = e["methods"];
  for (const char* m : {"watershed", "floodfill", "pseudo-sdf", "visibility"}) {
    ASSERT_TRUE(t.contains(m)) << m;
    EXPECT_TRUE(t[m]["watertight"].get<bool>()) << m;
  }
  // Loading rescales the box to side 2 * (1 - margin).
  const double box = std::pow(2.0 * (1.0 - c.effective_margin()), 3);
  EXPECT_GT(t["watershed"]["interior_volume"].get<double>(), 0.8 * box);
  EXPECT_LT(t["floodfill"]["interior_volume"].get<double>(), 0.2 * box);
  EXPECT_EQ(t["pseudo-sdf"]["components"], 2);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "holed.compare.json")).size(), 4u);
}

TEST(Commands, SampleHonorsCountsAndRejectsOpenMeshes) {
  const tc::TempDir dir;
  save_mesh(tc::icosphere({0, 0, 0}, 0.5, 3), dir / "sphere.obj");
  TriangleMesh quad;
  quad.vertices = {{-0.4, -0.4, 0}, {0.4, -0.4, 0}, {0.4, 0.4, 0}, {-0.4, 0.4, 0}};
  quad.faces = {{0, 1, 2}, {0, 2, 3}};
  save_mesh(quad, dir / "quad.obj");
  PipelineConfig c = at(64);
  c.out_dir = dir.path().string();
  c.n_uniform = 1000;
  c.n_sharp = 0;
  c.n_supervision = 2000;
  const nlohmann::json e = sample_one(dir / "sphere.obj", c);
  ASSERT_EQ(e["status"], "ok") << e.dump();
  EXPECT_EQ(load_samples(dir / "sphere.surface.usmp").size(), 1000u);
  const SampleSet sup = load_samples(dir / "sphere.supervision.usmp");
  EXPECT_EQ(sup.size(), 2000u);
  EXPECT_EQ(sup.counts()[static_cast<std::size_t>(SampleKind::FreeSpace)], 400u);
  const nlohmann::json q = sample_one(dir / "quad.obj", c);
  EXPECT_EQ(q["status"], "failed");
  EXPECT_NE(q["error"].get<std::string>().find("not watertight"), std::string::npos);
  EXPECT_EQ(q["watertight"]["boundary_edges"], 4);
}

TEST(Commands, ValidateFlagsThinShells) {
  const tc::TempDir dir;
  save_mesh(tc::hollow_sphere({0, 0, 0}, 0.5, 0.001, 4), dir / "shell.obj");
  save_mesh(tc::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), dir / "cube.obj");
  PipelineConfig c = at(512);
  const nlohmann::json shell = validate_one(dir / "shell.obj", c);
  EXPECT_EQ(shell["status"], "ok");
  EXPECT_TRUE(shell["curation"]["thin_shell"].get<bool>());
  EXPECT_LT(shell["curation"]["thin_shell_ratio"].get<double>(), 0.5);
  const nlohmann::json cube = validate_one(dir / "cube.obj", c);
  EXPECT_EQ(cube["status"], "ok");
  EXPECT_EQ(cube["watertight"]["components"][0]["euler"], 2);
  EXPECT_FALSE(cube["curation"]["thin_shell"].get<bool>());
  EXPECT_EQ(validate_one(dir / "absent.obj", c)["status"], "load_failed");
}
