#pragma once

#include "elastorec/core.hpp"

namespace elastorec::fftu {

// Unnormalized 2D c2c DFT on an n x n array. sign -1 = forward, +1 = backward.
// The backward transform is the exact conjugate transpose of the forward one.
void fft2(int n, const cd* in, cd* out, int sign);

// Unnormalized 2D DCT-II (forward) / DCT-III (backward), FFTW conventions.
void dct2(int n, const double* in, double* out);
void idct2(int n, const double* in, double* out);

} // namespace elastorec::fftu
