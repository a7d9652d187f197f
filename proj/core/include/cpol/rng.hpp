#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cpol {

/// SplitMix64 step, used to decorrelate per-chunk seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Streams with distinct ids are statistically independent; every variate is a
/// pure function of (seed, stream_id, draw index). The uniform and normal
/// mappings are implemented here rather than with std distributions so the
/// byte-exact output contract holds across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id ^ 0xd1b54a32d192ed03ull))) {}

  std::uint64_t next_raw() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = static_cast<double>((next_raw() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cpol
