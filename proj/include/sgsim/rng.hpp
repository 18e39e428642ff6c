#pragma once

#include <cmath>
#include <cstdint>

namespace sgsim {

/// Counter-based Gaussian draws: every variate is a pure function of
/// (seed, path, step, component), so parallel Monte Carlo produces identical
/// streams regardless of scheduling and a path can be regenerated in
/// isolation. The mixer is the splitmix64/murmur finalizer chain; Box–Muller
/// converts two derived uniforms into one normal.
namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h + 0x9e3779b97f4a7c15ULL + v);
}

/// Uniform in (0, 1]: the +1 keeps log() away from zero.
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal keyed by (seed, path, step, component).
inline double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                     std::uint64_t component) {
  std::uint64_t k = combine(combine(combine(mix64(seed), path), step), component);
  const double u1 = to_unit(k);
  const double u2 = to_unit(mix64(k ^ 0xda3e39cb94b95bdbULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rng
}  // namespace sgsim
