#pragma once

#include "elastorec/core.hpp"

namespace elastorec {

// Kaiser-Bessel gridding NUFFT. Forward approximates the Riemann sum of the
// continuous Fourier transform,
//     s(k) = dx^2 * sum_r x(r) exp(-i 2 pi k . r),
// with r the centered voxel positions in meters, so the DC sample equals
// dx^2 times the sum of voxel values. The adjoint is the exact conjugate
// transpose of the forward pipeline (both are built from one interpolation
// table and one unnormalized FFT pair).
struct NufftPlan {
  Grid grid;
  double os = 2.0; // oversampling factor
  int W = 6;       // kernel width in oversampled grid units
  double beta = 0.0;
  int No = 0; // oversampled grid side
  int M = 0;  // number of samples

  std::vector<int> nbr;       // M * W * W wrapped indices into No*No grid
  std::vector<double> wgt;    // M * W * W kernel weights
  std::vector<double> deapod; // n*n, includes the dx^2 quadrature scale

  NufftPlan() = default;
  NufftPlan(const Grid& g, const std::vector<double>& kx,
            const std::vector<double>& ky, double os_ = 2.0, int W_ = 6);

  // idx == nullptr means all M samples; otherwise a subset of plan samples.
  void forward(const cd* image, cd* out, const int* idx = nullptr,
               int m = -1) const;
  void adjoint(const cd* samples, cd* image, const int* idx = nullptr,
               int m = -1, const double* dcf = nullptr) const;
};

// Analytic ramp density compensation for a spiral trajectory, normalized so
// adjoint(forward(uniform image)) has unit DC gain.
std::vector<double> make_dcf(const Trajectory& traj, const Grid& grid);

} // namespace elastorec
