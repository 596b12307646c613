#pragma once

#include <string>

#include "elastorec/container.hpp"
#include "elastorec/decoder.hpp"
#include "elastorec/simkit.hpp"
#include "elastorec/train.hpp"

namespace elastorec {

struct SubspaceConfig {
  int L = 12;
  double lambda_tik = -1.0; // < 0: 1e-6 of the normal operator's top eigenvalue
  int max_iter = 50;
  double center_radius = -1.0; // < 0: kmax/8
  bool energy_weighted = true;
};

struct WaveConfig {
  bool bulk_removal = true;
  bool unwrap = true;
  double butterworth_cutoff = 100.0; // cycles/m unless the flag below
  int butterworth_order = 4;
  bool cutoff_in_rad_per_m = false;
  double gaussian_sigma = 0.0; // voxels; 0 disables the optional smoothing
};

struct InvertConfig {
  bool median_filter = true;
  int erode_voxels = 3; // region-mask erosion for the median statistics
};

// One JSON file per experiment, sections mirroring the module configs.
// Unknown keys anywhere are rejected.
struct ExperimentConfig {
  PhantomSpec phantom;
  VibrationSpec vibration;
  MEGSpec meg;
  int traj_arms = 5;
  int traj_samples_per_arm = 1024;
  int arms_per_rep = 1;
  CGOptions sense;
  SubspaceConfig subspace;
  DecoderConfig decoder;
  TrainConfig train;
  WaveConfig wave;
  InvertConfig invert;

  nlohmann::json raw; // normalized config (defaults filled), hash source
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

} // namespace elastorec
