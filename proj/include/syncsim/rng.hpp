#pragma once

#include <cmath>
#include <cstdint>

namespace syncsim::rng {

// splitmix64 finalizer; stateless, so draws can be keyed by (seed, worker,
// iteration) and stay identical across platforms and run orders.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t salt = 0) {
  return mix(seed ^ mix(a ^ mix(b ^ mix(salt))));
}

// Uniform draw strictly inside (0, 1).
inline double unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Zero-mean uniform draw strictly inside (-width, +width).
inline double symmetric(std::uint64_t h, double width) {
  return width * (2.0 * unit(h) - 1.0);
}

// Standard normal via Box-Muller on two uniforms derived from one hash.
inline double gaussian(std::uint64_t h) {
  const double u1 = unit(h);
  const double u2 = unit(mix(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace syncsim::rng
