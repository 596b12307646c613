#pragma once

#include <functional>

#include "elastorec/decoder.hpp"
#include "elastorec/losses.hpp"

namespace elastorec {

struct TrainConfig {
  int iters = 500;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-12;
  // regularizer weights, auto-normalized against the initial DC term:
  // lambda_eff = lambda * DC_0 / term_0
  double lambda_mag = 1e-3;
  double lambda_wave = 1e-3;
  double lambda_lat = 1e-6;
  int D = 3, P = 4; // repetition structure for the wave loss
  int pair_budget = 0;
  bool isotropic_tv = false;
  bool nested_levels = true;
  uint64_t seed = 1;
};

struct LossTrace {
  std::vector<double> total, dc, mag, wave, lat;
};

struct TrainResult {
  DecoderParams params;
  ImageSeries series; // eval-mode decode, finest level
  LossTrace trace;
  double lambda_mag_eff = 0.0, lambda_wave_eff = 0.0, lambda_lat_eff = 0.0;
  int iterations = 0;
  bool aborted = false; // non-finite loss; params hold the last finite state
};

TrainResult train(const KSpaceSet& ks, const CoilSet& coils, const Grid& grid,
                  const DecoderConfig& dcfg, const TrainConfig& tcfg,
                  const LatentMatrix& v0);

// Eval-mode decode of every repetition (finest level).
ImageSeries decode_series(const DecoderParams& p);

// Central finite-difference check of d loss / d theta for `probes` randomly
// chosen real coordinates; returns the worst relative error. f evaluates the
// loss and, when the second argument is non-null, accumulates the gradient.
double grad_check(DecoderParams& p,
                  const std::function<double(const DecoderParams&, CVec*)>& f,
                  int probes, uint64_t seed, double h = 1e-4);

} // namespace elastorec
