#pragma once

#include <cstdint>

#include "elastorec/core.hpp"

namespace elastorec {

struct Inclusion {
  double cx = 0.0, cy = 0.0; // center, voxel coordinates
  double radius = 0.0;       // voxels
  double stiffness_pa = 0.0;
  double loss_pa = 0.0;
};

struct PhantomSpec {
  int grid_size = 64;
  double fov_m = 0.128; // 2 mm voxels at the desk default
  double background_stiffness_pa = 2000.0;
  std::vector<Inclusion> inclusions;
  double density_kg_m3 = 1000.0;
  double magnitude_contrast = 0.8; // inclusion magnitude relative to background
  double static_phase_amplitude_rad = 1.0;
  double noise_sigma = 0.0; // k-space noise std relative to peak signal
  int coils = 8;
};

struct WaveSource {
  double nx = 1.0, ny = 0.0; // unit propagation direction
  cd amplitude{20e-6, 0.0};  // complex amplitude, meters
};

struct VibrationSpec {
  double frequency_hz = 60.0;
  int n_offsets = 4;
  int n_directions = 3;
  std::vector<WaveSource> wave_sources; // one per direction; defaulted if empty
};

// Maps repetition index t to (direction, polarity, offset); t = d*2P + s*P + p
// with s = 0 for + and 1 for -.
struct MEGSpec {
  double encoding_rad_per_m = 1.25e5; // ~2.5 rad peak phase at 20 um amplitude
};

struct RepIndex {
  int dir;
  int sign; // +1 or -1
  int offset;
};

inline int rep_encode(int d, int sign, int p, int P) {
  return d * 2 * P + (sign > 0 ? 0 : 1) * P + p;
}
inline RepIndex rep_decode(int t, int P) {
  return {t / (2 * P), (t / P) % 2 == 0 ? +1 : -1, t % P};
}

struct PhantomTruth {
  Grid grid;
  double density = 1000.0;
  std::vector<double> stiffness;    // Pa, n*n
  std::vector<double> loss_map;     // Pa
  std::vector<double> magnitude;    // nonnegative
  std::vector<double> static_phase; // rad
  std::vector<uint8_t> region;      // 0 = background, 1.. = inclusion index+1
  CoilSet coil_maps;
  std::vector<CVec> displacement;         // per direction, complex meters
  std::vector<double> region_wavenumber;  // rad/m per region id
  std::vector<double> region_stiffness;   // Pa per region id
  ImageSeries images; // noiseless ground truth after encoding
};

PhantomTruth make_phantom(const PhantomSpec& spec);

// Regionwise plane waves satisfying the Helmholtz relation within each
// homogeneous region; fills truth.displacement and region wavenumbers.
void synth_wavefield(PhantomTruth& truth, const VibrationSpec& vib);

// Encodes displacement into image phase per repetition; fills truth.images.
void encode_repetitions(PhantomTruth& truth, const VibrationSpec& vib,
                        const MEGSpec& meg);

Trajectory make_spiral(int arm_count, int samples_per_arm, double fov_m,
                       int grid_size);

KSpaceSet simulate_kspace(const ImageSeries& series, const CoilSet& coils,
                          const Trajectory& traj, double noise_sigma,
                          uint64_t seed);

KSpaceSet undersample(const KSpaceSet& ks, int arms_per_rep);

} // namespace elastorec
