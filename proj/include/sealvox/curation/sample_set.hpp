#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sealvox/core/error.hpp"

namespace sealvox {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class SampleKind : std::uint8_t { SurfaceUniform = 0, SurfaceSharp = 1, NearSurface = 2, FreeSpace = 3 };

inline constexpr std::array<std::string_view, 4> kSampleKindNames = {"surface_uniform", "surface_sharp", "near_surface",
                                                                      "free_space"};

struct SampleRecord {
  std::array<float, 3> position{};
  float sdf = 0.0f;                 // meaningful iff the set has_sdf
  std::array<float, 3> normal{};    // meaningful iff the set has_normal
  SampleKind kind = SampleKind::SurfaceUniform;

  bool operator==(const SampleRecord&) const = default;
};

struct SampleSet {
  std::vector<SampleRecord> records;
  bool has_sdf = false;
  bool has_normal = false;
  std::uint64_t seed = 0;
  std::uint64_t mesh_hash = 0;

  std::array<std::uint64_t, 4> counts() const {
    std::array<std::uint64_t, 4> c{};
    for (const SampleRecord& r : records) ++c[static_cast<std::size_t>(r.kind)];
    return c;
  }
  std::size_t size() const { return records.size(); }
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "sample files are little-endian");

inline constexpr std::uint32_t kSampleFlagSdf = 1u;
inline constexpr std::uint32_t kSampleFlagNormal = 2u;
inline constexpr std::uint32_t kSampleVersion = 1;

template <class T>
void put(std::string& out, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("truncated sample file", pos);
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

/// Writes the binary USMP file and its JSON sidecar (`<path>.json`).
inline void export_samples(const SampleSet& set, const std::filesystem::path& path) {
  std::string out;
  const std::size_t floats = 3 + (set.has_sdf ? 1 : 0) + (set.has_normal ? 3 : 0);
  out.reserve(48 + set.size() * (floats * 4 + 1));
  out.append("USMP", 4);
  detail::put(out, detail::kSampleVersion);
  detail::put(out, static_cast<std::uint64_t>(set.size()));
  const auto counts = set.counts();
  for (const std::uint64_t c : counts) detail::put(out, c);
  detail::put(out, (set.has_sdf ? detail::kSampleFlagSdf : 0u) | (set.has_normal ? detail::kSampleFlagNormal : 0u));
  for (const SampleRecord& r : set.records) {
    for (const float v : r.position) detail::put(out, v);
    if (set.has_sdf) detail::put(out, r.sdf);
    if (set.has_normal) {
      for (const float v : r.normal) detail::put(out, v);
    }
  }
  for (const SampleRecord& r : set.records) out.push_back(static_cast<char>(r.kind));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");

  nlohmann::json side;
  side["seed"] = set.seed;
  side["mesh_hash"] = set.mesh_hash;
  side["tool_version"] = kToolVersion;
  side["record_count"] = set.size();
  for (std::size_t k = 0; k < counts.size(); ++k) side["counts"][std::string(kSampleKindNames[k])] = counts[k];
  std::ofstream s(sidecar_path(path), std::ios::trunc);
  if (!s) throw IoError("cannot open '" + sidecar_path(path).string() + "' for writing");
  s << side.dump(2) << '\n';
  if (!s) throw IoError("failed writing '" + sidecar_path(path).string() + "'");
}

/// Reads a USMP file; seed and mesh hash come from the sidecar when present.
inline SampleSet load_samples(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 4 || in.compare(0, 4, "USMP") != 0) throw ParseError("not a USMP sample file", 0);
  std::size_t pos = 4;
  const auto version = detail::take<std::uint32_t>(in, pos);
  if (version != detail::kSampleVersion) throw ParseError("unsupported sample file version " + std::to_string(version), 4);
  const auto count = detail::take<std::uint64_t>(in, pos);
  std::array<std::uint64_t, 4> counts{};
  for (auto& c : counts) c = detail::take<std::uint64_t>(in, pos);
  const auto flags = detail::take<std::uint32_t>(in, pos);
  SampleSet set;
  set.has_sdf = (flags & detail::kSampleFlagSdf) != 0;
  set.has_normal = (flags & detail::kSampleFlagNormal) != 0;
  const std::size_t floats = 3 + (set.has_sdf ? 1 : 0) + (set.has_normal ? 3 : 0);
  if (in.size() - pos != count * (floats * 4 + 1)) throw ParseError("sample file size does not match its header", pos);
  set.records.resize(count);
  for (SampleRecord& r : set.records) {
    for (float& v : r.position) v = detail::take<float>(in, pos);
    if (set.has_sdf) r.sdf = detail::take<float>(in, pos);
    if (set.has_normal) {
      for (float& v : r.normal) v = detail::take<float>(in, pos);
    }
  }
  for (SampleRecord& r : set.records) {
    const auto k = static_cast<std::uint8_t>(in[pos]);
    if (k > 3) throw ParseError("invalid sample kind " + std::to_string(k), pos);
    r.kind = static_cast<SampleKind>(k);
    ++pos;
  }
  if (set.counts() != counts) throw ParseError("kind histogram does not match the records", 24);

  std::ifstream s(sidecar_path(path));
  if (s) {
    try {
      const nlohmann::json side = nlohmann::json::parse(s);
      set.seed = side.value("seed", std::uint64_t{0});
      set.mesh_hash = side.value("mesh_hash", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed sample sidecar: ") + e.what(), 0);
    }
  }
  return set;
}

}  // namespace sealvox
