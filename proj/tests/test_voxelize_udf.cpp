#include <gtest/gtest.h>

#include <random>

#include "sealvox/mesh/surface_sampling.hpp"
#include "sealvox/voxelize/udf.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace sealvox;
namespace tc = sealvox::testing;

namespace {

TriangleMesh mirror_positions(TriangleMesh m) {
  for (Vec3& v : m.vertices) v.x = -v.x;
  return m;
}

Coord mirror(const Coord& c, int n) { return {n - 1 - c.x, c.y, c.z}; }

// Trilinear interpolation of voxel-center samples at p.
double interpolate(const DistanceField& df, const Vec3& p) {
  const double h = df.spec.voxel_size();
  Vec3 f;
  Coord base;
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] + 1.0) / h - 0.5;
    base[a] = static_cast<int>(std::floor(u));
    f[a] = u - base[a];
  }
  double v = 0.0;
  for (int k = 0; k < 8; ++k) {
    const Coord c = base + Coord{k & 1, (k >> 1) & 1, (k >> 2) & 1};
    const double w = ((k & 1) ? f.x : 1 - f.x) * ((k & 2) ? f.y : 1 - f.y) * ((k & 4) ? f.z : 1 - f.z);
    v += w * df.at(c);
  }
  return v;
}

}  // namespace

TEST(BandFor, Examples) {
  EXPECT_EQ(band_for(0, 0), 3);
  EXPECT_EQ(band_for(2, 1.5), 4);
  EXPECT_EQ(band_for(6, 0), 8);
  EXPECT_EQ(band_for(0, 3.2), 6);
  EXPECT_THROW(band_for(-1, 0), InvalidArgument);
}

TEST(Voxelize, AxisAlignedQuadIsOneVoxelPlate) {
  // z = 0.01 sits strictly inside voxel layer 32 at N=64.
  TriangleMesh quad;
  quad.vertices = {{-0.49, -0.49, 0.01}, {0.49, -0.49, 0.01}, {0.49, 0.49, 0.01}, {-0.49, 0.49, 0.01}};
  quad.faces = {{0, 1, 2}, {0, 2, 3}};
  const OccupancyGrid occ = voxelize_surface(quad, GridSpec::make(64));
  const auto want = oracle::occupancy(quad, 64);
  EXPECT_EQ(oracle::densify(occ.mask).data, want.occ.data);
  EXPECT_EQ(occ.occupied_count(), 32u * 32u);
  for (const Coord& c : occ.slot_voxels) EXPECT_EQ(c.z, 32);
}

TEST(Voxelize, MatchesDenseOracleOnCorpus) {
  for (const auto& item : tc::defect_corpus(10, 64, 21)) {
    const OccupancyGrid occ = voxelize_surface(item.mesh, GridSpec::make(64));
    const auto want = oracle::occupancy(item.mesh, 64);
    ASSERT_EQ(oracle::densify(occ.mask).data, want.occ.data) << item.name;
    for (std::size_t i = 0; i < want.faces.size(); ++i) {
      const auto got = occ.faces_at(want.occ.coord(i));
      std::vector<std::uint32_t> sorted(got.begin(), got.end());
      std::sort(sorted.begin(), sorted.end());
      ASSERT_EQ(sorted, want.faces[i]) << item.name;
    }
  }
}

TEST(Voxelize, SphereShellSeparatesCenterFromBoundary) {
  const TriangleMesh sphere = tc::icosphere({0, 0, 0}, 0.5, 3);
  const OccupancyGrid occ = voxelize_surface(sphere, GridSpec::make(64));
  const auto dense = oracle::densify(occ.mask);
  // 6-connected flood from the domain corner must not reach the center.
  oracle::Dense<std::uint8_t> seen(64, 0);
  std::vector<Coord> stack = {{0, 0, 0}};
  seen.at(0, 0, 0) = 1;
  while (!stack.empty()) {
    const Coord c = stack.back();
    stack.pop_back();
    for (const auto& d : oracle::kSix) {
      const Coord q{c.x + d[0], c.y + d[1], c.z + d[2]};
      if (!seen.inside(q.x, q.y, q.z) || seen.at(q) || dense.at(q)) continue;
      seen.at(q) = 1;
      stack.push_back(q);
    }
  }
  EXPECT_FALSE(seen.at(32, 32, 32));
  EXPECT_FALSE(seen.at(31, 31, 31));
}

TEST(Voxelize, SurfaceSamplesLandInOccupiedVoxels) {
  for (const auto& item : tc::defect_corpus(10, 64, 4)) {
    const GridSpec spec = GridSpec::make(64);
    const OccupancyGrid occ = voxelize_surface(item.mesh, spec);
    const auto samples = sample_area_weighted(item.mesh, 10000, CounterRng(77, 0));
    for (const auto& s : samples) {
      ASSERT_TRUE(occ.occupied(spec.voxel_of(s.position))) << item.name;
    }
  }
}

TEST(Voxelize, RejectsMeshOutsideDomain) {
  TriangleMesh m = tc::box({-0.5, -0.5, -0.5}, {1.2, 0.5, 0.5});
  try {
    (void)voxelize_surface(m, GridSpec::make(64));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("outside"), std::string::npos);
  }
}

TEST(Voxelize, DeterministicAcrossThreads) {
  const TriangleMesh m = tc::torus({0.1, 0, 0}, 0.5, 0.2, 48, 24);
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::vector<std::uint32_t>> faces;
  for (const int t : {1, 2, 8}) {
    ThreadCountGuard g(t);
    const OccupancyGrid occ = voxelize_surface(m, GridSpec::make(128));
    masks.push_back(oracle::densify(occ.mask).data);
    faces.push_back(occ.faces);
  }
  EXPECT_TRUE(masks[0] == masks[1] && masks[0] == masks[2]);
  EXPECT_TRUE(faces[0] == faces[1] && faces[0] == faces[2]);
}

TEST(Udf, PointAbovePlane) {
  TriangleMesh tri;
  tri.vertices = {{-0.8, -0.8, 0.0}, {0.8, -0.8, 0.0}, {0.0, 0.8, 0.0}};
  tri.faces = {{0, 1, 2}};
  const GridSpec spec = GridSpec::make(64);
  const OccupancyGrid occ = voxelize_surface(tri, spec);
  const DistanceField df = compute_udf(tri, occ, 10);
  const Coord c = spec.voxel_of({0, 0, 0.25});
  EXPECT_EQ(df.at(c), static_cast<float>(spec.voxel_center(c).z));
  EXPECT_NEAR(df.at(c), 0.25, spec.voxel_size());
}

TEST(Udf, MatchesBruteForceOracle) {
  for (const auto& item : tc::defect_corpus(5, 64, 8)) {
    const OccupancyGrid occ = voxelize_surface(item.mesh, GridSpec::make(64));
    const DistanceField df = compute_udf(item.mesh, occ, 3);
    const auto want = oracle::udf(item.mesh, oracle::densify(occ.mask), 3);
    const auto got = oracle::densify(df.values);
    const double h = 2.0 / 64;
    for (std::size_t i = 0; i < want.data.size(); ++i) {
      if (want.data[i] == oracle::kFar) {
        ASSERT_EQ(got.data[i], oracle::kFar) << item.name;
      } else {
        ASSERT_NEAR(got.data[i], want.data[i], 1e-6 * h) << item.name;
        ASSERT_GE(got.data[i], 0.0f);
        ASSERT_LE(got.data[i], 4.0 * h * std::sqrt(3.0));
      }
    }
  }
}

TEST(Udf, AnalyticSphere) {
  const double r = 0.5;
  const TriangleMesh sphere = tc::icosphere({0, 0, 0}, r, 4);
  const GridSpec spec = GridSpec::make(64);
  const OccupancyGrid occ = voxelize_surface(sphere, spec);
  const DistanceField df = compute_udf(sphere, occ, 3);
  std::size_t banded = 0;
  for (std::size_t i = 0; i < df.values.active_brick_count(); ++i) {
    const auto& blk = df.values.brick(i);
    for (int k = 0; k < kBrickVolume; ++k) {
      if (blk[static_cast<std::size_t>(k)] == DistanceField::kFar) continue;
      const Vec3 c = spec.voxel_center(brick_origin(df.values.brick_coord(i)) + local_coord(k));
      ASSERT_NEAR(blk[static_cast<std::size_t>(k)], std::abs(norm(c) - r), 2e-3);
      ++banded;
    }
  }
  EXPECT_GT(banded, 10000u);
}

TEST(Udf, BandBoundaryIsFar) {
  TriangleMesh tri;
  tri.vertices = {{-0.5, -0.5, 0.01}, {0.5, -0.5, 0.01}, {0.0, 0.5, 0.01}};
  tri.faces = {{0, 1, 2}};
  const OccupancyGrid occ = voxelize_surface(tri, GridSpec::make(64));
  const DistanceField df = compute_udf(tri, occ, 3);
  EXPECT_TRUE(df.banded({32, 32, 35}));
  EXPECT_FALSE(df.banded({32, 32, 36}));
  EXPECT_FALSE(df.banded({32, 32, 28}));
  const auto band = oracle::dilate(oracle::densify(occ.mask), 3);
  const auto got = oracle::densify(df.values);
  for (std::size_t i = 0; i < got.data.size(); ++i) {
    ASSERT_EQ(got.data[i] != oracle::kFar, band.data[i] != 0);
  }
}

TEST(Udf, MirrorEquivariant) {
  const TriangleMesh m = tc::translated(tc::torus({0, 0, 0}, 0.5, 0.2, 40, 20), {0.13, 0.05, -0.07});
  const TriangleMesh mm = mirror_positions(m);
  const GridSpec spec = GridSpec::make(64);
  const auto a = oracle::densify(compute_udf(m, voxelize_surface(m, spec), 3).values);
  const auto b = oracle::densify(compute_udf(mm, voxelize_surface(mm, spec), 3).values);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const Coord c = a.coord(i);
    ASSERT_EQ(std::bit_cast<std::uint32_t>(a.data[i]), std::bit_cast<std::uint32_t>(b.at(mirror(c, 64))));
  }
}

TEST(Udf, LipschitzBetweenNeighbors) {
  for (const auto& item : tc::defect_corpus(10, 64, 13)) {
    const OccupancyGrid occ = voxelize_surface(item.mesh, GridSpec::make(64));
    const auto d = oracle::densify(compute_udf(item.mesh, occ, 3).values);
    const double h = 2.0 / 64;
    for (std::size_t i = 0; i < d.data.size(); ++i) {
      if (d.data[i] == oracle::kFar) continue;
      const Coord c = d.coord(i);
      for (const auto& o : oracle::kSix) {
        const Coord q{c.x + o[0], c.y + o[1], c.z + o[2]};
        if (!d.inside(q.x, q.y, q.z) || d.at(q) == oracle::kFar) continue;
        ASSERT_GE(d.data[i], std::max(0.0, d.at(q) - h * std::sqrt(3.0)) - 1e-7);
      }
    }
  }
}

TEST(Udf, InterpolationErrorHalvesWithResolution) {
  const double r = 0.5;
  const TriangleMesh sphere = tc::icosphere({0, 0, 0}, r, 6);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> points;
  for (int i = 0; i < 20000; ++i) {
    const Vec3 dir = normalized(Vec3{g(rng), g(rng), g(rng)});
    points.push_back(dir * (r + u(rng) * (2.0 / 64)));
  }
  std::vector<double> max_err;
  for (const int n : {64, 128}) {
    const OccupancyGrid occ = voxelize_surface(sphere, GridSpec::make(n));
    const DistanceField df = compute_udf(sphere, occ, 3);
    double worst = 0.0;
    for (const Vec3& p : points) worst = std::max(worst, std::abs(interpolate(df, p) - std::abs(norm(p) - r)));
    max_err.push_back(worst);
  }
  const double ratio = max_err[0] / max_err[1];
  EXPECT_GE(ratio, 1.7) << max_err[0] << " " << max_err[1];
  EXPECT_LE(ratio, 2.3) << max_err[0] << " " << max_err[1];
}

TEST(Udf, DeterministicAcrossThreads) {
  const TriangleMesh m = tc::icosphere({0.05, 0, 0}, 0.6, 3);
  std::vector<std::vector<float>> out;
  for (const int t : {1, 2, 8}) {
    ThreadCountGuard g(t);
    out.push_back(oracle::densify(compute_udf(m, voxelize_surface(m, GridSpec::make(64)), 4).values).data);
  }
  EXPECT_TRUE(out[0] == out[1] && out[0] == out[2]);
}
