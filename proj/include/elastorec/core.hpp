#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace elastorec {

using cd = std::complex<double>;
using CVec = std::vector<cd>;

struct Grid {
  int n = 0;        // voxels per side (square)
  double fov = 0.0; // meters
  double dx() const { return fov / n; }
  double kmax() const { return n / (2.0 * fov); } // cycles/m
};

// Complex image stack over T repetitions on an n x n grid.
struct ImageSeries {
  int n = 0;
  int T = 0;
  CVec data; // T x n x n, row-major

  ImageSeries() = default;
  ImageSeries(int T_, int n_) : n(n_), T(T_), data((size_t)T_ * n_ * n_) {}
  cd* rep(int t) { return data.data() + (size_t)t * n * n; }
  const cd* rep(int t) const { return data.data() + (size_t)t * n * n; }
  size_t npix() const { return (size_t)n * n; }
};

struct CoilSet {
  int n = 0;
  int C = 0;
  CVec data; // C x n x n
  cd* coil(int i) { return data.data() + (size_t)i * n * n; }
  const cd* coil(int i) const { return data.data() + (size_t)i * n * n; }
};

// Spiral trajectory: arms are rotated copies of one base arm.
struct Trajectory {
  int arm_count = 0;
  int samples_per_arm = 0;
  std::vector<double> kx, ky; // flat arm-major, cycles/m
  std::vector<double> dcf;    // density compensation, same layout
  bool nyquist_warning = false;
  int size() const { return arm_count * samples_per_arm; }
};

// Non-Cartesian samples per (repetition, coil) over the retained arms.
struct KSpaceSet {
  int T = 0;
  int C = 0;
  int arms_kept = 0;
  Trajectory traj;                    // the full underlying trajectory
  std::vector<std::vector<int>> sel;  // per repetition: retained arm indices
  CVec data;                          // T x C x (arms_kept * samples_per_arm)

  int samples_per_rep() const { return arms_kept * traj.samples_per_arm; }
  cd* at(int t, int i) {
    return data.data() + ((size_t)t * C + i) * samples_per_rep();
  }
  const cd* at(int t, int i) const {
    return data.data() + ((size_t)t * C + i) * samples_per_rep();
  }
  // full-trajectory sample indices retained for repetition t, in data order
  std::vector<int> full_indices(int t) const {
    std::vector<int> idx;
    idx.reserve(samples_per_rep());
    for (int a : sel[t])
      for (int s = 0; s < traj.samples_per_arm; ++s)
        idx.push_back(a * traj.samples_per_arm + s);
    return idx;
  }
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

} // namespace elastorec
