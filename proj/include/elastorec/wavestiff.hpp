#pragma once

#include <cstdint>

#include "elastorec/core.hpp"
#include "elastorec/simkit.hpp"

namespace elastorec {

// Wrapped wave phase per (direction, offset). Half-angle differencing wraps
// modulo pi, so the pipeline unwraps the doubled phase (see cmd_wave).
struct WrappedPhaseSet {
  int n = 0, D = 0, P = 0;
  std::vector<std::vector<double>> phi; // indexed d*P + p, n*n radians
  std::vector<double>& at(int d, int p) { return phi[(size_t)d * P + p]; }
  const std::vector<double>& at(int d, int p) const {
    return phi[(size_t)d * P + p];
  }
};

struct HarmonicField {
  int n = 0;
  double dx = 0.0;
  std::vector<CVec> u; // complex first-harmonic displacement per direction, m
};

struct ModulusMap {
  int n = 0;
  CVec Gstar;                 // complex shear modulus, Pa
  std::vector<uint8_t> valid; // |laplacian| above floor
};

// phi_{d,p} = 1/2 angle(rho_{(d,+,p)} conj(rho_{(d,-,p)})); static phase
// cancels exactly in the conjugate product.
WrappedPhaseSet phase_difference(const ImageSeries& series, int D, int P);

// Subtracts the phase of the centered 3x3 DFT block of the unit field.
std::vector<double> remove_bulk(const std::vector<double>& phi, int n);

// Laplacian (spectral, mirror-extended) phase unwrapping. The output is
// congruent to the input modulo 2 pi at every voxel.
std::vector<double> unwrap_laplacian(const std::vector<double>& phi, int n,
                                     const std::vector<uint8_t>* mask = nullptr);

// First temporal harmonic across P offsets, divided by the encoding constant
// so the result is displacement in meters. Convention: Re(u e^{-i2 pi p/P})
// reproduces phi_p / gamma_enc.
HarmonicField harmonic_extract(const std::vector<std::vector<double>>& phi,
                               int n, int D, int P, double gamma_enc,
                               double dx);

// 4th-order Butterworth lowpass; cutoff in cycles/m by default, rad/m when
// cutoff_in_rad_per_m is set.
void butterworth_lowpass(CVec& field, int n, double dx,
                         double cutoff_per_m = 100.0, int order = 4,
                         bool cutoff_in_rad_per_m = false);

// Algebraic Helmholtz inversion with precomputed Laplacian fields.
ModulusMap invert_aide_fields(const std::vector<CVec>& u,
                              const std::vector<CVec>& lap, int n,
                              double omega, double density);

// Same, with the 2nd-order 5-point stencil Laplacian (boundary ring invalid).
ModulusMap invert_aide(const HarmonicField& field, double omega,
                       double density);

// mu_stiff = 2|G*|^2 / (G' + |G*|); invalid voxels map to 0.
std::vector<double> stiffness(const ModulusMap& g);

// Exact lower median over the mask.
double median_stiffness(const std::vector<double>& mu,
                        const std::vector<uint8_t>& mask);

// 3x3 median filter with edge replication.
std::vector<double> median_filter(const std::vector<double>& mu, int n,
                                  int window = 3);

} // namespace elastorec
