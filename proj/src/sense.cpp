#include "elastorec/sense.hpp"

namespace elastorec {

void sense_forward(const cd* image, const CoilSet& coils, const NufftPlan& plan,
                   cd* out, const int* idx, int m) {
  require(coils.C >= 1 && coils.n == plan.grid.n, "sense: coil/grid mismatch");
  const size_t npix = (size_t)coils.n * coils.n;
  const int count = idx ? m : plan.M;
  CVec weighted(npix);
  for (int i = 0; i < coils.C; ++i) {
    const cd* S = coils.coil(i);
    for (size_t p = 0; p < npix; ++p) weighted[p] = S[p] * image[p];
    plan.forward(weighted.data(), out + (size_t)i * count, idx, m);
  }
}

void sense_adjoint(const cd* samples, const CoilSet& coils,
                   const NufftPlan& plan, cd* image, const int* idx, int m,
                   const double* dcf) {
  require(coils.C >= 1 && coils.n == plan.grid.n, "sense: coil/grid mismatch");
  const size_t npix = (size_t)coils.n * coils.n;
  const int count = idx ? m : plan.M;
  std::fill(image, image + npix, cd(0.0, 0.0));
  CVec tmp(npix);
  for (int i = 0; i < coils.C; ++i) {
    plan.adjoint(samples + (size_t)i * count, tmp.data(), idx, m, dcf);
    const cd* S = coils.coil(i);
    for (size_t p = 0; p < npix; ++p) image[p] += std::conj(S[p]) * tmp[p];
  }
}

} // namespace elastorec
