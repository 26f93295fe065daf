#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace sealvox {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double squared_norm(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec3{};
}

inline Vec3 min_elem(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max_elem(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Axis-aligned box; default-constructed boxes are empty.
struct Aabb {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};

  bool empty() const { return lo.x > hi.x || lo.y > hi.y || lo.z > hi.z; }
  void expand(const Vec3& p) {
    lo = min_elem(lo, p);
    hi = max_elem(hi, p);
  }
  void expand(const Aabb& b) {
    lo = min_elem(lo, b.lo);
    hi = max_elem(hi, b.hi);
  }
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 extent() const { return hi - lo; }

  double squared_distance(const Vec3& p) const {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double v = p[a];
      if (v < lo[a]) {
        d2 += (lo[a] - v) * (lo[a] - v);
      } else if (v > hi[a]) {
        d2 += (v - hi[a]) * (v - hi[a]);
      }
    }
    return d2;
  }
};

/// Integer voxel or lattice coordinate.
struct Coord {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr Coord operator+(const Coord& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Coord operator-(const Coord& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr bool operator==(const Coord&) const = default;
  constexpr auto operator<=>(const Coord&) const = default;
};

constexpr int chebyshev(const Coord& a, const Coord& b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  const int dz = a.z > b.z ? a.z - b.z : b.z - a.z;
  return std::max(dx, std::max(dy, dz));
}

inline constexpr std::array<Coord, 6> kFaceNeighbors = {
    Coord{-1, 0, 0}, Coord{1, 0, 0}, Coord{0, -1, 0}, Coord{0, 1, 0}, Coord{0, 0, -1}, Coord{0, 0, 1}};

}  // namespace sealvox
