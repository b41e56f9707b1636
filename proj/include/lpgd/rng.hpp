#pragma once
// Deterministic uniform draws on top of mt19937. The mapping is fixed
// arithmetic on raw engine output, so results are identical across platforms
// and standard libraries (std::uniform_*_distribution internals are not).

#include <random>

namespace lpgd {
namespace detail {

inline double unit_uniform(std::mt19937& g) {
  return static_cast<double>(g() >> 8) * (1.0 / 16777216.0);  // [0, 1)
}

inline double uniform(std::mt19937& g, double a, double b) {
  return a + (b - a) * unit_uniform(g);
}

inline int uniform_int(std::mt19937& g, int n) {
  const int v = static_cast<int>(unit_uniform(g) * n);
  return v >= n ? n - 1 : v;
}

}  // namespace detail
}  // namespace lpgd
