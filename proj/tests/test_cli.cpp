#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sealvox/sealvox.hpp"
#include "support/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace sealvox;
namespace tc = sealvox::testing;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI through the shell. `env` is a prefix such as "US_SEED=3 ".
CliRun cli(const tc::TempDir& dir, const std::string& args, const std::string& env = "") {
  const std::filesystem::path out = dir / "stdout.txt";
  const std::filesystem::path err = dir / "stderr.txt";
  const std::string cmd = env + quoted(SEALVOX_CLI_PATH) + " " + args + " > " + quoted(out.string()) + " 2> " +
                          quoted(err.string());
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<nlohmann::json> lines_of(const std::string& text) {
  std::vector<nlohmann::json> v;
  std::istringstream s(text);
  for (std::string line; std::getline(s, line);) {
    if (!line.empty()) v.push_back(nlohmann::json::parse(line));
  }
  return v;
}

TriangleMesh quad() {
  TriangleMesh q;
  q.vertices = {{-0.4, -0.4, 0}, {0.4, -0.4, 0}, {0.4, 0.4, 0}, {-0.4, 0.4, 0}};
  q.faces = {{0, 1, 2}, {0, 2, 3}};
  return q;
}

}  // namespace

TEST(Cli, HelpListsEveryFlagWithDefault) {
  const tc::TempDir dir;
  const CliRun r = cli(dir, "watertight --help");
  EXPECT_EQ(r.code, 0);
  PipelineConfig c;
  detail::visit_config(c, [&](const char* key, auto&) {
    const std::string flag = std::string("--") + key;
    const std::size_t at = r.out.find(flag);
    ASSERT_NE(at, std::string::npos) << flag;
    const std::size_t line_end = r.out.find("[default:", at);
    EXPECT_NE(line_end, std::string::npos) << flag;
    EXPECT_NE(r.out.find(detail::env_name(key)), std::string::npos) << key;
  });
  EXPECT_NE(r.out.find("[default: 512;"), std::string::npos);
  EXPECT_NE(r.out.find("--config"), std::string::npos);
  EXPECT_EQ(cli(dir, "--version").out.find(kToolVersion), 0u);
}

TEST(Cli, WatertightSealsHoledCube) {
  const tc::TempDir dir;
  save_mesh(tc::holed_box(128, 16, 111, 2, {1, 4}), dir / "holed-cube.obj");
  const CliRun r = cli(dir, "watertight " + quoted((dir / "holed-cube.obj").string()) +
                             " --resolution 128 --tau-close 2 --method watershed --threads 1 --out-dir " +
                             quoted((dir / "out").string()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto entries = lines_of(r.out);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_TRUE(entries[0]["watertight"]["is_watertight"].get<bool>());
  // Check the written file independently of the report.
  const TriangleMesh out = load_mesh(dir / "out" / "holed-cube.watertight.ply");
  const WatertightReport w = validate_watertight(out);
  EXPECT_TRUE(w.is_watertight());
  EXPECT_EQ(w.component_count(), 1u);
  EXPECT_GT(w.signed_volume, 0.0);
}

TEST(Cli, DirectoryWithUnreadableMesh) {
  const tc::TempDir dir;
  std::filesystem::create_directories(dir / "in");
  for (const tc::CorpusItem& item : tc::defect_corpus(9, 64, 5)) save_mesh(item.mesh, dir / "in" / (item.name + ".obj"));
  {
    std::ofstream f(dir / "in" / "unreadable.ply");
    f << "ply\nformat garbage\n";
  }
  const std::string report = (dir / "report.jsonl").string();
  const CliRun r = cli(dir, "watertight " + quoted((dir / "in").string()) + " --resolution 64 --out-dir " +
                             quoted((dir / "out").string()) + " --report " + quoted(report));
  EXPECT_EQ(r.code, 1) << r.err;
  const auto entries = lines_of(slurp(report));
  EXPECT_EQ(entries.size(), 10u);
  EXPECT_EQ(lines_of(r.out).size(), 10u);
  std::size_t outputs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "out")) outputs += e.path().extension() == ".ply";
  EXPECT_EQ(outputs, 9u);
  std::size_t failed = 0;
  for (const auto& e : entries) failed += e["status"] != "ok";
  EXPECT_EQ(failed, 1u);
}

TEST(Cli, InvalidConfigurationExitsTwo) {
  const tc::TempDir dir;
  save_mesh(tc::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), dir / "cube.obj");
  const std::string in = quoted((dir / "cube.obj").string());
  CliRun r = cli(dir, "watertight " + in + " --tau-close 40");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("band"), std::string::npos) << r.err;
  EXPECT_EQ(cli(dir, "watertight " + in + " --resolution 100").code, 2);
  EXPECT_EQ(cli(dir, "watertight " + in + " --method magic").code, 2);
  EXPECT_EQ(cli(dir, "watertight " + in + " --no-such-flag 1").code, 2);
  EXPECT_EQ(cli(dir, "watertight").code, 2);
  r = cli(dir, "watertight " + in, "US_THREADS=-1 ");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("threads"), std::string::npos) << r.err;
}

TEST(Cli, CompareWritesEveryMethod) {
  const tc::TempDir dir;
  save_mesh(tc::icosphere({0, 0, 0}, 0.6, 3), dir / "ball.obj");
  const CliRun r = cli(dir, "compare " + quoted((dir / "ball.obj").string()) + " --resolution 64 --out-dir " +
                             quoted(dir.path().string()));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* m : {"watershed", "floodfill", "pseudo-sdf", "visibility"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string("ball.") + m + ".ply"))) << m;
  }
  const nlohmann::json table = nlohmann::json::parse(slurp(dir / "ball.compare.json"));
  EXPECT_EQ(table.size(), 4u);
  EXPECT_EQ(table["pseudo-sdf"]["components"], 2);
  EXPECT_EQ(table["watershed"]["components"], 1);
}

TEST(Cli, SampleHonorsFlagsAndRejectsOpenMeshes) {
  const tc::TempDir dir;
  save_mesh(tc::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), dir / "cube.obj");
  save_mesh(quad(), dir / "quad.obj");
  const std::string out = " --resolution 64 --out-dir " + quoted(dir.path().string());
  CliRun r = cli(dir, "sample " + quoted((dir / "cube.obj").string()) + out + " --n-uniform 1000 --n-sharp 200 --n-supervision 2000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_samples(dir / "cube.surface.usmp").size(), 1200u);
  const SampleSet sup = load_samples(dir / "cube.supervision.usmp");
  EXPECT_EQ(sup.counts()[static_cast<std::size_t>(SampleKind::NearSurface)], 1600u);
  EXPECT_EQ(sup.counts()[static_cast<std::size_t>(SampleKind::FreeSpace)], 400u);
  const nlohmann::json sidecar = nlohmann::json::parse(slurp(dir / "cube.supervision.usmp.json"));
  EXPECT_EQ(sidecar["record_count"], 2000);

  r = cli(dir, "sample " + quoted((dir / "quad.obj").string()) + out);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("not watertight"), std::string::npos) << r.out;
  EXPECT_EQ(lines_of(r.out).at(0)["watertight"]["boundary_edges"], 4);
}

TEST(Cli, ValidateExitCodes) {
  const tc::TempDir dir;
  save_mesh(tc::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), dir / "cube.obj");
  save_mesh(quad(), dir / "quad.obj");
  save_mesh(tc::hollow_sphere({0, 0, 0}, 0.5, 0.001, 4), dir / "shell.obj");

  CliRun r = cli(dir, "validate " + quoted((dir / "cube.obj").string()));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).at(0)["watertight"]["components"][0]["euler"], 2);

  r = cli(dir, "validate " + quoted((dir / "quad.obj").string()));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(lines_of(r.out).at(0)["watertight"]["boundary_edges"], 4);

  r = cli(dir, "validate " + quoted((dir / "shell.obj").string()));
  EXPECT_EQ(r.code, 0) << r.err;
  const nlohmann::json shell = lines_of(r.out).at(0);
  EXPECT_TRUE(shell["curation"]["thin_shell"].get<bool>());
  EXPECT_LT(shell["curation"]["thin_shell_ratio"].get<double>(), 0.5);

  EXPECT_EQ(cli(dir, "validate " + quoted((dir / "missing.obj").string())).code, 2);
}

TEST(Cli, PrecedenceIsFileThenEnvThenFlags) {
  const tc::TempDir dir;
  save_mesh(tc::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), dir / "cube.obj");
  {
    std::ofstream f(dir / "cfg.json");
    f << R"({"seed": 11, "threads": 1, "thin-shell-threshold": 0.25, "n-probe": 500})";
  }
  const std::string args = "validate " + quoted((dir / "cube.obj").string()) + " --config " + quoted((dir / "cfg.json").string());
  auto config_of = [&](const CliRun& r) { return lines_of(r.out).at(0)["config"]; };

  nlohmann::json c = config_of(cli(dir, args));
  EXPECT_EQ(c["seed"], 11);
  EXPECT_EQ(c["thin-shell-threshold"], 0.25);

  c = config_of(cli(dir, args, "US_SEED=12 US_N_PROBE=700 "));
  EXPECT_EQ(c["seed"], 12);
  EXPECT_EQ(c["n-probe"], 700);
  EXPECT_EQ(c["thin-shell-threshold"], 0.25);

  c = config_of(cli(dir, args + " --seed 13", "US_SEED=12 "));
  EXPECT_EQ(c["seed"], 13);

  c = config_of(cli(dir, args + " --keep-largest", "US_KEEP_LARGEST=0 "));
  EXPECT_EQ(c["keep-largest"], true);
  c = config_of(cli(dir, args, "US_KEEP_LARGEST=1 "));
  EXPECT_EQ(c["keep-largest"], true);
}

TEST(Cli, OutputsAreIdenticalAcrossThreadCounts) {
  const tc::TempDir dir;
  save_mesh(tc::holed_box(64, 20, 45, 2, {0, 5}), dir / "m.obj");
  std::string mesh_ref;
  std::string samples_ref;
  for (const int threads : {1, 4}) {
    const std::filesystem::path out = dir / ("t" + std::to_string(threads));
    const std::string common = " --resolution 64 --threads " + std::to_string(threads) + " --out-dir " + quoted(out.string());
    ASSERT_EQ(cli(dir, "watertight " + quoted((dir / "m.obj").string()) + common).code, 0);
    const std::string mesh = slurp(out / "m.watertight.ply");
    ASSERT_EQ(cli(dir, "sample " + quoted((out / "m.watertight.ply").string()) + common +
                           " --n-uniform 3000 --n-sharp 500 --n-supervision 4000 --seed 9")
                  .code,
              0);
    const std::string samples = slurp(out / "m.watertight.surface.usmp") + slurp(out / "m.watertight.supervision.usmp");
    if (mesh_ref.empty()) {
      mesh_ref = mesh;
      samples_ref = samples;
    } else {
      EXPECT_TRUE(mesh == mesh_ref);
      EXPECT_TRUE(samples == samples_ref);
    }
  }
}
