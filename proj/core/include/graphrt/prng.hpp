#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace graphrt {

// Deterministic random helpers. std::mt19937_64's output sequence is pinned by
// the standard, but the <random> distributions are implementation-defined, so
// everything downstream of the raw bits is hand-rolled here. Two runs with the
// same seed produce bit-identical streams on any conforming toolchain.

// Uniform double in [0, 1), 53 mantissa bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1]; safe as a log() argument.
inline double uniform01_open(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller, cosine branch only (stateless per call:
// exactly two engine draws per variate).
inline double standard_normal(std::mt19937_64& eng) {
  const double u1 = uniform01_open(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Uniform float in [-limit, limit].
inline float uniform_symmetric(std::mt19937_64& eng, float limit) {
  return static_cast<float>((2.0 * uniform01(eng) - 1.0) * limit);
}

}  // namespace graphrt
