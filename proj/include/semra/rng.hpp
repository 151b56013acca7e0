#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>

namespace semra {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so results do not depend on call order across
/// streams or on the platform's std::random implementation.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(key_ ^ mix(counter * 0xd1b54a32d192ed03ULL + 1));
  }

  /// Uniform in the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal pair via Box-Muller from counters 2c and 2c+1.
  [[nodiscard]] std::pair<double, double> normal_pair(std::uint64_t counter) const noexcept {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phase), r * std::sin(phase)};
  }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  [[nodiscard]] std::complex<double> complex_normal(std::uint64_t counter,
                                                    double variance = 1.0) const noexcept {
    const auto [re, im] = normal_pair(counter);
    const double scale = std::sqrt(variance / 2.0);
    return {scale * re, scale * im};
  }

 private:
  std::uint64_t key_;
};

/// Stable 64-bit FNV-1a hash, used to key stub embeddings by surface string.
inline std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace semra
