#pragma once

#include "elastorec/core.hpp"

namespace elastorec {

// Temporal basis; rows are the latent vectors v_t, rho_t = U v_t.
struct LatentMatrix {
  int T = 0;
  int L = 0;
  CVec V; // T x L row-major
  cd& at(int t, int l) { return V[(size_t)t * L + l]; }
  cd at(int t, int l) const { return V[(size_t)t * L + l]; }
};

struct SpatialCoeffs {
  int N = 0;
  int L = 0;
  CVec U; // N x L row-major
};

struct CGOptions {
  int max_iter = 50;
  double tol = 1e-6;
};

struct CGReport {
  std::vector<double> residuals; // accepted (best-so-far) residual norms
  int iterations = 0;
  bool diverged = false;
};

// Conjugate-gradient SENSE, solved independently per repetition on the
// normal equations.
ImageSeries cg_sense(const KSpaceSet& ks, const CoilSet& coils,
                     const Grid& grid, const CGOptions& opt = {},
                     std::vector<CGReport>* reports = nullptr);

// SVD temporal basis from the center of measured k-space; navigator images
// live on a 16x16 grid. center_radius <= 0 selects the default kmax/8.
// energy_weighted scales rows by the singular values.
LatentMatrix temporal_basis(const KSpaceSet& ks, const Grid& grid, int L,
                            double center_radius = 0.0,
                            bool energy_weighted = true);

// Singular values of the navigator Casorati matrix (diagnostics).
std::vector<double> navigator_singular_values(const KSpaceSet& ks,
                                              const Grid& grid,
                                              double center_radius = 0.0);

// Fixed-basis subspace reconstruction: solves for the spatial coefficients
// by CG on the Tikhonov-regularized normal equations. lambda_tik < 0 picks
// 1e-6 times the estimated top eigenvalue of the normal operator.
std::pair<SpatialCoeffs, ImageSeries> subspace_recon(
    const KSpaceSet& ks, const CoilSet& coils, const Grid& grid,
    const LatentMatrix& V, double lambda_tik = -1.0, int max_iter = 50,
    CGReport* report = nullptr);

} // namespace elastorec
