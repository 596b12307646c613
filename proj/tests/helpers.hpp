#pragma once

#include <cmath>

#include "elastorec/core.hpp"
#include "elastorec/rng.hpp"

namespace th {

using elastorec::cd;
using elastorec::CVec;
using elastorec::Grid;

// Brute-force oracle for the continuous-FT Riemann sum the NUFFT targets:
// s(k) = dx^2 sum_r x(r) exp(-i 2 pi k . r), r centered voxel positions.
inline cd slow_dft(const CVec& img, const Grid& g, double kx, double ky) {
  const double dx = g.dx();
  cd acc(0.0, 0.0);
  for (int y = 0; y < g.n; ++y)
    for (int x = 0; x < g.n; ++x) {
      double rx = (x - g.n / 2) * dx, ry = (y - g.n / 2) * dx;
      double ph = -2.0 * M_PI * (kx * rx + ky * ry);
      acc += img[(size_t)y * g.n + x] * cd(std::cos(ph), std::sin(ph));
    }
  return acc * (dx * dx);
}

inline CVec random_image(int n, uint64_t seed) {
  elastorec::Rng rng(seed);
  CVec img((size_t)n * n);
  for (cd& z : img) z = rng.cgauss();
  return img;
}

// Smooth test image: Gaussian bump with a phase tilt.
inline CVec smooth_image(int n) {
  CVec img((size_t)n * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double u = (x - n / 2.0) / (n / 4.0), v = (y - n / 2.0) / (n / 4.0);
      double m = std::exp(-(u * u + v * v));
      double ph = 0.3 * u + 0.1 * v;
      img[(size_t)y * n + x] = m * cd(std::cos(ph), std::sin(ph));
    }
  return img;
}

inline double rel_err(const CVec& a, const CVec& b) {
  double e = 0.0, s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    e += std::norm(a[i] - b[i]);
    s += std::norm(b[i]);
  }
  return std::sqrt(e / s);
}

} // namespace th
