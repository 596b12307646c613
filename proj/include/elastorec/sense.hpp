#pragma once

#include "elastorec/core.hpp"
#include "elastorec/nufft.hpp"

namespace elastorec {

// d_i = F(S_i . image) for each coil; out is C x m contiguous.
void sense_forward(const cd* image, const CoilSet& coils, const NufftPlan& plan,
                   cd* out, const int* idx = nullptr, int m = -1);

// image = sum_i conj(S_i) . F^H(d_i)
void sense_adjoint(const cd* samples, const CoilSet& coils,
                   const NufftPlan& plan, cd* image, const int* idx = nullptr,
                   int m = -1, const double* dcf = nullptr);

} // namespace elastorec
