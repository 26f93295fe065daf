#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sealvox/core/error.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"

namespace sealvox {

static_assert(std::endian::native == std::endian::little, "binary mesh I/O assumes a little-endian host");

/// Faces below this area (in normalized units) are dropped at load.
inline constexpr double kDegenerateArea = 1e-12;

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return data;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Appends a fan triangulation of `poly`.
inline void add_fan(TriangleMesh& mesh, const std::vector<std::uint32_t>& poly) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
}

inline TriangleMesh parse_obj(const std::string& data) {
  TriangleMesh mesh;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<std::uint32_t> poly;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    std::string_view line(data.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError("vertex record needs three coordinates", line_no);
      Vec3 p;
      for (int a = 0; a < 3; ++a) {
        const auto v = parse_double(tok[static_cast<std::size_t>(a) + 1]);
        if (!v) throw ParseError("malformed vertex coordinate", line_no);
        p[a] = *v;
      }
      mesh.vertices.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw ParseError("face record needs at least three vertices", line_no);
      poly.clear();
      for (std::size_t k = 1; k < tok.size(); ++k) {
        std::string_view ref = tok[k];
        ref = ref.substr(0, ref.find('/'));
        const auto idx = parse_int(ref);
        if (!idx || *idx == 0) throw ParseError("malformed face index", line_no);
        const long long n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = *idx > 0 ? *idx - 1 : n + *idx;
        if (resolved < 0 || resolved >= n) throw ParseError("face index out of range", line_no);
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      add_fan(mesh, poly);
    }
  }
  return mesh;
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

inline double ply_read_binary(const std::string& t, const char* p) {
  const auto load = [p]<class T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(std::int8_t{});
  if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
  if (t == "short" || t == "int16") return load(std::int16_t{});
  if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
  if (t == "int" || t == "int32") return load(std::int32_t{});
  if (t == "uint" || t == "uint32") return load(std::uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

inline TriangleMesh parse_ply(const std::string& data) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string_view {
    if (pos >= data.size()) throw ParseError("unexpected end of PLY header", line_no);
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    std::string_view line(data.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  if (next_line() != "ply") throw ParseError("missing 'ply' magic", 1);
  std::string format;
  std::vector<PlyElement> elements;
  for (;;) {
    const auto tok = split_ws(next_line());
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError("malformed format line", line_no);
      format = std::string(tok[1]);
    } else if (tok[0] == "element") {
      if (tok.size() < 3) throw ParseError("malformed element line", line_no);
      const auto count = parse_int(tok[2]);
      if (!count || *count < 0) throw ParseError("malformed element count", line_no);
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(*count), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("property before element", line_no);
      PlyProperty prop;
      if (tok.size() >= 5 && tok[1] == "list") {
        prop.is_list = true;
        prop.count_type = std::string(tok[2]);
        prop.type = std::string(tok[3]);
        prop.name = std::string(tok[4]);
      } else if (tok.size() >= 3) {
        prop.type = std::string(tok[1]);
        prop.name = std::string(tok[2]);
      } else {
        throw ParseError("malformed property line", line_no);
      }
      if (ply_type_size(prop.type) == 0 || (prop.is_list && ply_type_size(prop.count_type) == 0)) {
        throw ParseError("unknown PLY property type", line_no);
      }
      elements.back().properties.push_back(prop);
    }
  }
  const bool ascii = format == "ascii";
  if (!ascii && format != "binary_little_endian") {
    throw ParseError("unsupported PLY format '" + format + "'", line_no);
  }

  TriangleMesh mesh;
  std::vector<std::uint32_t> poly;
  std::vector<double> scalars;
  std::vector<std::vector<double>> lists;

  // ASCII bodies are tokenized lazily line by line.
  std::vector<std::string_view> tokens;
  std::size_t tok_index = 0;
  const auto next_token = [&]() -> std::string_view {
    while (tok_index >= tokens.size()) {
      tokens = split_ws(next_line());
      tok_index = 0;
    }
    return tokens[tok_index++];
  };
  const auto read_value = [&](const std::string& type) -> double {
    if (ascii) {
      const auto v = parse_double(next_token());
      if (!v) throw ParseError("malformed PLY value", line_no);
      return *v;
    }
    const std::size_t sz = ply_type_size(type);
    if (pos + sz > data.size()) throw ParseError("truncated PLY body", pos);
    const double v = ply_read_binary(type, data.data() + pos);
    pos += sz;
    return v;
  };

  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int px = -1, py = -1, pz = -1, pidx = -1;
    for (std::size_t k = 0; k < el.properties.size(); ++k) {
      const auto& n = el.properties[k].name;
      const int ki = static_cast<int>(k);
      if (n == "x") px = ki;
      if (n == "y") py = ki;
      if (n == "z") pz = ki;
      if (el.properties[k].is_list && (n == "vertex_indices" || n == "vertex_index")) pidx = ki;
    }
    if (is_vertex && (px < 0 || py < 0 || pz < 0)) throw ParseError("vertex element lacks x/y/z", line_no);
    if (is_face && pidx < 0) throw ParseError("face element lacks vertex_indices", line_no);
    for (std::size_t i = 0; i < el.count; ++i) {
      scalars.assign(el.properties.size(), 0.0);
      lists.resize(el.properties.size());
      for (std::size_t k = 0; k < el.properties.size(); ++k) {
        const PlyProperty& prop = el.properties[k];
        if (prop.is_list) {
          const double cnt = read_value(prop.count_type);
          if (cnt < 0 || cnt > 1e6) throw ParseError("implausible PLY list length", ascii ? line_no : pos);
          lists[k].resize(static_cast<std::size_t>(cnt));
          for (auto& v : lists[k]) v = read_value(prop.type);
        } else {
          scalars[k] = read_value(prop.type);
        }
      }
      if (is_vertex) {
        mesh.vertices.push_back({scalars[static_cast<std::size_t>(px)], scalars[static_cast<std::size_t>(py)],
                                 scalars[static_cast<std::size_t>(pz)]});
      } else if (is_face) {
        const auto& idx = lists[static_cast<std::size_t>(pidx)];
        if (idx.size() < 3) throw ParseError("face with fewer than three vertices", ascii ? line_no : pos);
        poly.clear();
        for (double v : idx) {
          if (v < 0) throw ParseError("negative face index", ascii ? line_no : pos);
          poly.push_back(static_cast<std::uint32_t>(v));
        }
        add_fan(mesh, poly);
      }
    }
  }
  for (const Face& f : mesh.faces) {
    for (std::uint32_t v : f) {
      if (v >= mesh.vertices.size()) throw ParseError("face index out of range", line_no);
    }
  }
  return mesh;
}

inline TriangleMesh parse_stl(const std::string& data) {
  TriangleMesh mesh;
  if (data.size() >= 84) {
    std::uint32_t count = 0;
    std::memcpy(&count, data.data() + 80, 4);
    if (84 + static_cast<std::size_t>(count) * 50 == data.size()) {
      mesh.vertices.reserve(static_cast<std::size_t>(count) * 3);
      for (std::uint32_t i = 0; i < count; ++i) {
        const char* rec = data.data() + 84 + static_cast<std::size_t>(i) * 50 + 12;
        for (int k = 0; k < 3; ++k) {
          float xyz[3];
          std::memcpy(xyz, rec + k * 12, 12);
          mesh.vertices.push_back({xyz[0], xyz[1], xyz[2]});
        }
        mesh.faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});
      }
      return mesh;
    }
  }
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::vector<std::uint32_t> loop;
  bool saw_solid = false;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    const auto tok = split_ws(std::string_view(data.data() + pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (tok.empty()) continue;
    if (tok[0] == "solid") {
      saw_solid = true;
    } else if (tok[0] == "outer") {
      loop.clear();
    } else if (tok[0] == "vertex") {
      if (tok.size() < 4) throw ParseError("malformed STL vertex", line_no);
      Vec3 p;
      for (int a = 0; a < 3; ++a) {
        const auto v = parse_double(tok[static_cast<std::size_t>(a) + 1]);
        if (!v) throw ParseError("malformed STL coordinate", line_no);
        p[a] = *v;
      }
      loop.push_back(static_cast<std::uint32_t>(mesh.vertices.size()));
      mesh.vertices.push_back(p);
    } else if (tok[0] == "endloop") {
      if (loop.size() < 3) throw ParseError("STL facet with fewer than three vertices", line_no);
      add_fan(mesh, loop);
    }
  }
  if (!saw_solid) throw ParseError("neither binary nor ASCII STL", 0);
  return mesh;
}

}  // namespace detail

/// Loads an OBJ, PLY or STL file. Polygons are fan-triangulated, faces with
/// repeated indices or area below kDegenerateArea (measured after the
/// normalization the file would receive) are dropped, and every face is
/// tagged with its connected component.
inline TriangleMesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = detail::lower_extension(path);
  if (ext != ".obj" && ext != ".ply" && ext != ".stl") {
    throw IoError("unsupported mesh extension '" + ext + "'");
  }
  const std::string data = detail::read_file(path);
  TriangleMesh raw;
  if (ext == ".obj") {
    raw = detail::parse_obj(data);
  } else if (ext == ".ply") {
    raw = detail::parse_ply(data);
  } else {
    raw = detail::parse_stl(data);
  }
  for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
    if (!is_finite(raw.vertices[i])) throw ParseError("non-finite vertex coordinate", i);
  }
  double scale = 1.0;
  if (!raw.vertices.empty()) {
    const Vec3 ext3 = raw.bounds().extent();
    const double longest = std::max(ext3.x, std::max(ext3.y, ext3.z));
    if (longest > 0.0) scale = 2.0 * (1.0 - kDefaultMargin) / longest;
  }
  TriangleMesh mesh = drop_degenerate_faces(raw, kDegenerateArea / (scale * scale));
  if (mesh.faces.empty()) throw Error("zero faces after cleanup in '" + path.string() + "'");
  mesh.face_tags = connected_component_tags(mesh);
  return mesh;
}

/// Writes OBJ or PLY (binary little-endian, double precision). When a
/// transform is given, vertices are mapped back to original coordinates.
inline void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                      const std::optional<NormalizationTransform>& transform = std::nullopt) {
  const std::string ext = detail::lower_extension(path);
  if (ext != ".obj" && ext != ".ply") throw IoError("unsupported output extension '" + ext + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto position = [&](const Vec3& v) { return transform ? transform->invert(v) : v; };
  if (ext == ".obj") {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
      const Vec3 p = position(v);
      const int n = std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
      out.write(buf, n);
    }
    for (const Face& f : mesh.faces) {
      const int n = std::snprintf(buf, sizeof(buf), "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
      out.write(buf, n);
    }
  } else {
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << mesh.vertices.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.faces.size() << "\n"
        << "property list uchar uint vertex_indices\nend_header\n";
    for (const Vec3& v : mesh.vertices) {
      const Vec3 p = position(v);
      const double xyz[3] = {p.x, p.y, p.z};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const Face& f : mesh.faces) {
      const std::uint8_t three = 3;
      out.write(reinterpret_cast<const char*>(&three), 1);
      out.write(reinterpret_cast<const char*>(f.data()), 12);
    }
  }
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace sealvox
