#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sealvox {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, record, slot), so parallel sampling never depends on
/// which thread produced a record.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t record, std::uint32_t slot) const {
    return splitmix64(key_ ^ splitmix64(record * 16 + slot));
  }

  /// Uniform in [0, 1).
  constexpr double uniform(std::uint64_t record, std::uint32_t slot) const {
    return static_cast<double>(bits(record, slot) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller, consuming slots `slot` and `slot + 1`.
  double normal(std::uint64_t record, std::uint32_t slot) const {
    const double u1 = 1.0 - uniform(record, slot);  // (0, 1]
    const double u2 = uniform(record, slot + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace sealvox
