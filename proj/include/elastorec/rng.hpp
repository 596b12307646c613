#pragma once

#include <cmath>
#include <cstdint>

#include "elastorec/core.hpp"

namespace elastorec {

// Deterministic generator with a portable gaussian (std::normal_distribution
// is implementation-defined, which would break byte-identical reports).
class Rng {
public:
  explicit Rng(uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next() {
    // splitmix64
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { // in (0,1)
    return (double)((next() >> 11) + 1) * 0x1.0p-53;
  }

  double gauss() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

  cd cgauss() { // complex, unit variance per component
    double re = gauss();
    return {re, gauss()};
  }

private:
  uint64_t s_;
  bool have_ = false;
  double spare_ = 0.0;
};

} // namespace elastorec
