#include "elastorec/simkit.hpp"

#include <cmath>
#include <string>

#include "elastorec/nufft.hpp"
#include "elastorec/rng.hpp"
#include "elastorec/sense.hpp"

namespace elastorec {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

PhantomTruth make_phantom(const PhantomSpec& spec) {
  require(is_pow2(spec.grid_size), "phantom: grid_size must be a power of two");
  require(spec.background_stiffness_pa > 0.0, "phantom: stiffness must be > 0");
  require(spec.density_kg_m3 > 0.0, "phantom: density must be > 0");
  const int n = spec.grid_size;
  for (size_t j = 0; j < spec.inclusions.size(); ++j) {
    const auto& inc = spec.inclusions[j];
    require(inc.stiffness_pa > 0.0, "phantom: stiffness must be > 0");
    bool inside = inc.cx - inc.radius >= 1.0 && inc.cy - inc.radius >= 1.0 &&
                  inc.cx + inc.radius <= n - 2.0 && inc.cy + inc.radius <= n - 2.0;
    require(inside, "phantom: inclusion " + std::to_string(j) +
                        " extends outside the grid");
  }

  PhantomTruth t;
  t.grid = {n, spec.fov_m};
  t.density = spec.density_kg_m3;
  const size_t npix = (size_t)n * n;
  t.stiffness.assign(npix, spec.background_stiffness_pa);
  t.loss_map.assign(npix, 0.0);
  t.magnitude.assign(npix, 1.0);
  t.region.assign(npix, 0);
  t.region_stiffness = {spec.background_stiffness_pa};
  for (const auto& inc : spec.inclusions)
    t.region_stiffness.push_back(inc.stiffness_pa);

  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      size_t p = (size_t)y * n + x;
      for (size_t j = 0; j < spec.inclusions.size(); ++j) {
        const auto& inc = spec.inclusions[j];
        double d = std::hypot(x - inc.cx, y - inc.cy);
        if (d < inc.radius) {
          t.stiffness[p] = inc.stiffness_pa;
          t.loss_map[p] = inc.loss_pa;
          t.region[p] = (uint8_t)(j + 1);
        }
        // 1-voxel cosine ramp on the magnitude across the disc edge
        double inner = inc.radius - 0.5, outer = inc.radius + 0.5;
        if (d <= inner) {
          t.magnitude[p] = spec.magnitude_contrast;
        } else if (d < outer) {
          double w = 0.5 * (1.0 + std::cos(M_PI * (d - inner)));
          t.magnitude[p] =
              w * spec.magnitude_contrast + (1.0 - w) * t.magnitude[p];
        }
      }
    }
  }

  // Fixed 2nd-order polynomial background phase, scaled to the requested peak.
  double peak = 0.0;
  std::vector<double> raw(npix);
  for (int y = 0; y < n; ++y) {
    double Y = 2.0 * y / (n - 1) - 1.0;
    for (int x = 0; x < n; ++x) {
      double X = 2.0 * x / (n - 1) - 1.0;
      double v = 0.3 + 0.8 * X - 0.5 * Y + 0.6 * X * X - 0.4 * X * Y - 0.7 * Y * Y;
      raw[(size_t)y * n + x] = v;
      peak = std::max(peak, std::abs(v));
    }
  }
  t.static_phase.resize(npix);
  double scale = peak > 0 ? spec.static_phase_amplitude_rad / peak : 0.0;
  for (size_t p = 0; p < npix; ++p) t.static_phase[p] = scale * raw[p];

  // Coil maps: distinct smooth low-order complex polynomials, pointwise
  // normalized so the sum of squares is exactly 1.
  t.coil_maps.n = n;
  t.coil_maps.C = spec.coils;
  t.coil_maps.data.resize((size_t)spec.coils * npix);
  Rng rng(0xc011c011u);
  for (int i = 0; i < spec.coils; ++i) {
    cd a = 0.25 * rng.cgauss() / std::sqrt(2.0);
    cd b = 0.25 * rng.cgauss() / std::sqrt(2.0);
    cd c = 0.10 * rng.cgauss() / std::sqrt(2.0);
    cd d = 0.10 * rng.cgauss() / std::sqrt(2.0);
    cd e = 0.10 * rng.cgauss() / std::sqrt(2.0);
    // clamp so |S| stays well away from zero before normalization
    auto clamp = [](cd z, double m) {
      double a2 = std::abs(z);
      return a2 > m ? z * (m / a2) : z;
    };
    a = clamp(a, 0.25); b = clamp(b, 0.25);
    c = clamp(c, 0.10); d = clamp(d, 0.10); e = clamp(e, 0.10);
    cd* S = t.coil_maps.coil(i);
    for (int y = 0; y < n; ++y) {
      double Y = 2.0 * y / (n - 1) - 1.0;
      for (int x = 0; x < n; ++x) {
        double X = 2.0 * x / (n - 1) - 1.0;
        S[(size_t)y * n + x] =
            1.0 + a * X + b * Y + c * X * X + d * X * Y + e * Y * Y;
      }
    }
  }
  for (size_t p = 0; p < npix; ++p) {
    double sos = 0.0;
    for (int i = 0; i < spec.coils; ++i) sos += std::norm(t.coil_maps.coil(i)[p]);
    double inv = 1.0 / std::sqrt(sos);
    for (int i = 0; i < spec.coils; ++i) t.coil_maps.coil(i)[p] *= inv;
  }
  return t;
}

void synth_wavefield(PhantomTruth& truth, const VibrationSpec& vib) {
  require(vib.n_offsets >= 3, "vibration: need at least 3 phase offsets");
  const int n = truth.grid.n;
  const size_t npix = (size_t)n * n;
  const double omega = 2.0 * M_PI * vib.frequency_hz;

  std::vector<WaveSource> src = vib.wave_sources;
  if (src.empty()) {
    src.push_back({1.0, 0.0, cd(20e-6, 0.0)});
    if (vib.n_directions > 1) src.push_back({0.0, 1.0, cd(0.0, 20e-6)});
    if (vib.n_directions > 2)
      src.push_back({std::cos(0.7), std::sin(0.7), cd(14e-6, 14e-6)});
    src.resize(vib.n_directions);
  }
  require((int)src.size() == vib.n_directions,
          "vibration: one wave source per direction required");

  truth.region_wavenumber.resize(truth.region_stiffness.size());
  for (size_t r = 0; r < truth.region_stiffness.size(); ++r) {
    require(truth.region_stiffness[r] > 0.0, "wavefield: stiffness must be > 0");
    truth.region_wavenumber[r] =
        omega * std::sqrt(truth.density / truth.region_stiffness[r]);
  }

  const double dx = truth.grid.dx();
  truth.displacement.assign(vib.n_directions, CVec(npix));
  for (int d = 0; d < vib.n_directions; ++d) {
    for (int y = 0; y < n; ++y) {
      double ry = (y - n / 2) * dx;
      for (int x = 0; x < n; ++x) {
        double rx = (x - n / 2) * dx;
        size_t p = (size_t)y * n + x;
        double k = truth.region_wavenumber[truth.region[p]];
        double phase = k * (src[d].nx * rx + src[d].ny * ry);
        truth.displacement[d][p] =
            src[d].amplitude * cd(std::cos(phase), std::sin(phase));
      }
    }
  }
}

void encode_repetitions(PhantomTruth& truth, const VibrationSpec& vib,
                        const MEGSpec& meg) {
  require(!truth.displacement.empty(), "encode: displacement not synthesized");
  const int n = truth.grid.n;
  const int D = vib.n_directions, P = vib.n_offsets;
  const int T = D * 2 * P;
  const size_t npix = (size_t)n * n;
  truth.images = ImageSeries(T, n);
  for (int t = 0; t < T; ++t) {
    RepIndex r = rep_decode(t, P);
    double off = 2.0 * M_PI * r.offset / P;
    cd rot(std::cos(off), -std::sin(off)); // e^{-i 2 pi p / P}
    cd* img = truth.images.rep(t);
    const CVec& u = truth.displacement[r.dir];
    for (size_t p = 0; p < npix; ++p) {
      double wave = meg.encoding_rad_per_m * (u[p] * rot).real();
      double phi = truth.static_phase[p] + r.sign * wave;
      img[p] = truth.magnitude[p] * cd(std::cos(phi), std::sin(phi));
    }
  }
}

Trajectory make_spiral(int arm_count, int samples_per_arm, double fov_m,
                       int grid_size) {
  require(arm_count >= 1, "spiral: arm_count >= 1");
  require(samples_per_arm >= 2, "spiral: samples_per_arm >= 2");
  Trajectory traj;
  traj.arm_count = arm_count;
  traj.samples_per_arm = samples_per_arm;
  Grid grid{grid_size, fov_m};
  const double kmax = grid.kmax();
  const double n_turns = (double)grid_size / (2.0 * arm_count);
  traj.kx.resize((size_t)arm_count * samples_per_arm);
  traj.ky.resize(traj.kx.size());
  for (int a = 0; a < arm_count; ++a) {
    double phi_arm = 2.0 * M_PI * a / arm_count;
    for (int s = 0; s < samples_per_arm; ++s) {
      double tau = (double)s / (samples_per_arm - 1);
      double ang = 2.0 * M_PI * n_turns * tau + phi_arm;
      size_t p = (size_t)a * samples_per_arm + s;
      traj.kx[p] = kmax * tau * std::cos(ang);
      traj.ky[p] = kmax * tau * std::sin(ang);
    }
  }
  // arc length ~ pi * kmax * n_turns against Nyquist spacing 2 kmax / n
  traj.nyquist_warning = samples_per_arm < M_PI * grid_size * n_turns / 2.0;
  traj.dcf = make_dcf(traj, grid);
  return traj;
}

KSpaceSet simulate_kspace(const ImageSeries& series, const CoilSet& coils,
                          const Trajectory& traj, double noise_sigma,
                          uint64_t seed) {
  KSpaceSet ks;
  ks.T = series.T;
  ks.C = coils.C;
  ks.arms_kept = traj.arm_count;
  ks.traj = traj;
  ks.sel.resize(series.T);
  for (int t = 0; t < series.T; ++t) {
    ks.sel[t].resize(traj.arm_count);
    for (int a = 0; a < traj.arm_count; ++a) ks.sel[t][a] = a;
  }
  Grid grid{series.n, 0.0};
  // grid fov comes from trajectory extent: kmax = n / (2 fov)
  double kmax = 0.0;
  for (size_t m = 0; m < traj.kx.size(); ++m)
    kmax = std::max(kmax, std::hypot(traj.kx[m], traj.ky[m]));
  grid.fov = series.n / (2.0 * kmax);
  NufftPlan plan(grid, traj.kx, traj.ky);

  const int M = traj.size();
  ks.data.resize((size_t)series.T * coils.C * M);
  for (int t = 0; t < series.T; ++t)
    sense_forward(series.rep(t), coils, plan, ks.at(t, 0));

  if (noise_sigma > 0.0) {
    double peak = 0.0;
    for (const cd& v : ks.data) peak = std::max(peak, std::abs(v));
    double sigma = noise_sigma * peak;
    Rng rng(seed);
    for (cd& v : ks.data) v += sigma * rng.cgauss();
  }
  return ks;
}

KSpaceSet undersample(const KSpaceSet& ks, int arms_per_rep) {
  const int A = ks.traj.arm_count, S = ks.traj.samples_per_arm;
  require(arms_per_rep >= 1 && arms_per_rep <= A,
          "undersample: arms_per_rep out of range");
  require(ks.arms_kept == A, "undersample: input must be fully sampled");
  KSpaceSet out;
  out.T = ks.T;
  out.C = ks.C;
  out.arms_kept = arms_per_rep;
  out.traj = ks.traj;
  out.sel.resize(ks.T);
  out.data.resize((size_t)ks.T * ks.C * arms_per_rep * S);
  for (int t = 0; t < ks.T; ++t) {
    out.sel[t].resize(arms_per_rep);
    for (int j = 0; j < arms_per_rep; ++j)
      out.sel[t][j] = (t * arms_per_rep + j) % A;
    for (int i = 0; i < ks.C; ++i) {
      const cd* src = ks.at(t, i);
      cd* dst = out.at(t, i);
      for (int j = 0; j < arms_per_rep; ++j) {
        int a = out.sel[t][j];
        std::copy(src + (size_t)a * S, src + (size_t)(a + 1) * S,
                  dst + (size_t)j * S);
      }
    }
  }
  return out;
}

} // namespace elastorec
