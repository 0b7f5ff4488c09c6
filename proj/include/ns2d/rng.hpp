#pragma once

#include <cstdint>
#include <numbers>

namespace ns2d {

/// splitmix64 — stateless 64-bit mixer; output is fully determined by the
/// input word, which keeps seeded fields bit-identical across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Small counter-based stream: hash of (seed, stream, counter).
struct HashRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_bits() {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ (counter++));
  }
  /// uniform in [0, 1)
  double next_double() { return (next_bits() >> 11) * 0x1.0p-53; }
  /// uniform in [0, 2*pi)
  double next_angle() { return 2.0 * std::numbers::pi * next_double(); }
  /// standard normal via Box-Muller (explicit, so results are portable)
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

/// Deterministic phase for a spectral mode, independent of grid resolution,
/// so refining the grid only appends new modes.
inline double mode_phase(std::uint64_t seed, std::uint64_t component, int m1, int m2) {
  const std::uint64_t key = (component << 42) ^
                            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m1)) << 21) ^
                            static_cast<std::uint64_t>(static_cast<std::uint32_t>(m2));
  const std::uint64_t h = splitmix64(seed ^ splitmix64(key));
  return 2.0 * std::numbers::pi * ((h >> 11) * 0x1.0p-53);
}

}  // namespace ns2d
