#include "elastorec/nufft.hpp"

#include <algorithm>
#include <cmath>

#include "elastorec/fftutil.hpp"

namespace elastorec {

namespace {

double kb_window(double u, double beta, int W) {
  double t = 1.0 - (2.0 * u / W) * (2.0 * u / W);
  if (t < 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(t));
}

// Continuous Fourier transform of the width-W Kaiser-Bessel window,
// xi in cycles per oversampled grid unit.
double kb_transform(double xi, double beta, int W) {
  double a = M_PI * W * xi;
  double t = beta * beta - a * a;
  if (t > 0.0) {
    double g = std::sqrt(t);
    return W * std::sinh(g) / g;
  }
  double g = std::sqrt(-t);
  if (g < 1e-12) return (double)W;
  return W * std::sin(g) / g;
}

} // namespace

NufftPlan::NufftPlan(const Grid& g, const std::vector<double>& kx,
                     const std::vector<double>& ky, double os_, int W_) {
  grid = g;
  os = os_;
  W = W_;
  No = (int)std::lround(os * g.n);
  M = (int)kx.size();
  require((int)ky.size() == M, "nufft: kx/ky size mismatch");
  // Beatty et al. kernel shape parameter
  beta = M_PI * std::sqrt((double)W * W / (os * os) * (os - 0.5) * (os - 0.5) -
                          0.8);

  const double kmax = g.kmax();
  nbr.resize((size_t)M * W * W);
  wgt.resize((size_t)M * W * W);
  std::vector<double> w1(W), w2(W);
  for (int m = 0; m < M; ++m) {
    double kr = std::hypot(kx[m], ky[m]);
    require(kr <= kmax * (1.0 + 1e-9),
            "nufft: sample outside the Nyquist disc");
    double gx = kx[m] * g.fov * os; // continuous oversampled-grid position
    double gy = ky[m] * g.fov * os;
    int x0 = (int)std::ceil(gx - 0.5 * W);
    int y0 = (int)std::ceil(gy - 0.5 * W);
    for (int j = 0; j < W; ++j) {
      w1[j] = kb_window(gx - (x0 + j), beta, W);
      w2[j] = kb_window(gy - (y0 + j), beta, W);
    }
    size_t base = (size_t)m * W * W;
    for (int jy = 0; jy < W; ++jy) {
      int iy = ((y0 + jy) % No + No) % No;
      for (int jx = 0; jx < W; ++jx) {
        int ix = ((x0 + jx) % No + No) % No;
        nbr[base + jy * W + jx] = iy * No + ix;
        wgt[base + jy * W + jx] = w2[jy] * w1[jx];
      }
    }
  }

  // Deapodization, folding in the dx^2 quadrature weight.
  const int n = g.n;
  const double dx2 = g.dx() * g.dx();
  deapod.resize((size_t)n * n);
  std::vector<double> d1(n);
  for (int p = 0; p < n; ++p) {
    double r = p - n / 2;
    d1[p] = 1.0 / kb_transform(r / No, beta, W);
  }
  for (int py = 0; py < n; ++py)
    for (int px = 0; px < n; ++px)
      deapod[(size_t)py * n + px] = dx2 * d1[py] * d1[px];
}

void NufftPlan::forward(const cd* image, cd* out, const int* idx,
                        int m) const {
  const int n = grid.n;
  std::vector<cd> tmp((size_t)No * No, cd(0.0, 0.0));
  for (int py = 0; py < n; ++py) {
    int iy = ((py - n / 2) % No + No) % No;
    for (int px = 0; px < n; ++px) {
      int ix = ((px - n / 2) % No + No) % No;
      tmp[(size_t)iy * No + ix] =
          image[(size_t)py * n + px] * deapod[(size_t)py * n + px];
    }
  }
  std::vector<cd> freq((size_t)No * No);
  fftu::fft2(No, tmp.data(), freq.data(), -1);
  int count = idx ? m : M;
  for (int j = 0; j < count; ++j) {
    int s = idx ? idx[j] : j;
    const int* nb = nbr.data() + (size_t)s * W * W;
    const double* wg = wgt.data() + (size_t)s * W * W;
    cd acc(0.0, 0.0);
    for (int q = 0; q < W * W; ++q) acc += wg[q] * freq[nb[q]];
    out[j] = acc;
  }
}

void NufftPlan::adjoint(const cd* samples, cd* image, const int* idx, int m,
                        const double* dcf) const {
  const int n = grid.n;
  std::vector<cd> freq((size_t)No * No, cd(0.0, 0.0));
  int count = idx ? m : M;
  for (int j = 0; j < count; ++j) {
    int s = idx ? idx[j] : j;
    cd v = samples[j];
    if (dcf) v *= dcf[j];
    const int* nb = nbr.data() + (size_t)s * W * W;
    const double* wg = wgt.data() + (size_t)s * W * W;
    for (int q = 0; q < W * W; ++q) freq[nb[q]] += wg[q] * v;
  }
  std::vector<cd> tmp((size_t)No * No);
  fftu::fft2(No, freq.data(), tmp.data(), +1);
  for (int py = 0; py < n; ++py) {
    int iy = ((py - n / 2) % No + No) % No;
    for (int px = 0; px < n; ++px) {
      int ix = ((px - n / 2) % No + No) % No;
      image[(size_t)py * n + px] =
          tmp[(size_t)iy * No + ix] * deapod[(size_t)py * n + px];
    }
  }
}

std::vector<double> make_dcf(const Trajectory& traj, const Grid& grid) {
  const int A = traj.arm_count, S = traj.samples_per_arm;
  std::vector<double> w((size_t)A * S);
  for (int a = 0; a < A; ++a) {
    double first = 0.0;
    for (int s = 0; s < S; ++s) {
      double r = std::hypot(traj.kx[(size_t)a * S + s],
                            traj.ky[(size_t)a * S + s]);
      if (s == 1) first = r;
      w[(size_t)a * S + s] = r;
    }
    // DC sample gets the weight of the first annulus
    w[(size_t)a * S] = first;
  }

  // Calibrate overall scale: unit DC gain of adjoint(forward(1)).
  NufftPlan plan(grid, traj.kx, traj.ky);
  const int n = grid.n;
  CVec ones((size_t)n * n, cd(1.0, 0.0)), samp(plan.M), img((size_t)n * n);
  plan.forward(ones.data(), samp.data());
  plan.adjoint(samp.data(), img.data(), nullptr, -1, w.data());
  double mean = 0.0;
  int cnt = 0;
  for (int py = n / 4; py < 3 * n / 4; ++py)
    for (int px = n / 4; px < 3 * n / 4; ++px) {
      mean += img[(size_t)py * n + px].real();
      ++cnt;
    }
  mean /= cnt;
  require(mean > 0.0, "make_dcf: degenerate calibration");
  for (double& v : w) v /= mean;
  return w;
}

} // namespace elastorec
