#pragma once

#include <cstdint>
#include <random>

namespace nlqre {

// Portable uniform draws on top of std::mt19937_64 (whose output stream is
// fixed by the standard). Avoids std::uniform_real_distribution, which is
// implementation defined, so seeds reproduce across toolchains.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

inline int uniform_index(std::mt19937_64& g, int n) {
  int k = static_cast<int>(uniform01(g) * n);
  return k >= n ? n - 1 : k;
}

}  // namespace nlqre
