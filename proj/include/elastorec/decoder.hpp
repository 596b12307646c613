#pragma once

#include <cstdint>
#include <string>

#include "elastorec/core.hpp"
#include "elastorec/linrec.hpp"
#include "elastorec/rng.hpp"

namespace elastorec {

// Multi-level complex-valued decoder: a three-layer perceptron maps the
// latent vector to a coarsest feature map, then each level upsamples by 2
// (linear interpolation) and applies a residual conv block; a per-level
// conv projection emits the intermediate image rho_{t,k}.
//
// linear_mode degenerates the decoder to a single complex linear map
// v_t -> image (the subspace model rho_t = U v_t^H as a network).
struct DecoderConfig {
  int grid_n = 64;
  int K = 3;
  int L = 8;
  std::vector<int> mlp_hidden = {64, 64};
  int c0 = 16;          // channels of the coarsest feature map
  int min_channels = 8; // halving per level stops here
  double noise_sigma_feat = 0.05;
  std::string activation = "tanh"; // tanh | relu | identity
  bool linear_mode = false;

  int side(int k) const { return grid_n >> (K - k); } // k in 1..K
  int channels(int k) const {
    if (linear_mode) return 1;
    int c = c0 >> (k - 1);
    return c < min_channels ? min_channels : c;
  }
  void validate() const;
};

// All trainable state in one flat complex vector; the latent matrix v
// (T x L) occupies the tail so one Adam loop covers everything.
struct DecoderParams {
  DecoderConfig cfg;
  int T = 0;
  CVec theta;
  size_t v_offset = 0;

  cd* v_row(int t) { return theta.data() + v_offset + (size_t)t * cfg.L; }
  const cd* v_row(int t) const {
    return theta.data() + v_offset + (size_t)t * cfg.L;
  }
  size_t v_count() const { return (size_t)T * cfg.L; }
};

// Seeded complex Glorot initialization; v rows come from the temporal basis.
DecoderParams init_params(const DecoderConfig& cfg, const LatentMatrix& v0,
                          uint64_t seed);

// Intermediate activations kept for the hand-derived backward pass.
struct DecodeCache {
  std::vector<CVec> mlp_pre, mlp_act;
  std::vector<CVec> feat;      // per level, post residual block (and noise)
  std::vector<CVec> up;        // per level k>=2, upsampled input
  std::vector<CVec> convA_pre; // per level k>=2
  std::vector<CVec> convA_act;
};

// Returns {rho_{t,1}, ..., rho_{t,K}}. Noise layers are active only in
// train mode (noise_rng required then).
std::vector<CVec> decode(const DecoderParams& p, int t, bool train_mode,
                         Rng* noise_rng = nullptr,
                         DecodeCache* cache = nullptr);

// Accumulates dL/dtheta (including the v rows) given dL/drho_{t,k} in the
// (dL/dRe + i dL/dIm) convention. cache must come from the matching decode.
void decode_backward(const DecoderParams& p, int t, const DecodeCache& cache,
                     const std::vector<CVec>& grad_rho, CVec& grad_theta);

size_t param_count(const DecoderConfig& cfg, int T);

} // namespace elastorec
