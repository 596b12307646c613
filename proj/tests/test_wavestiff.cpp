#include <doctest.h>

#include "elastorec/wavestiff.hpp"
#include "helpers.hpp"

using namespace elastorec;

TEST_SUITE_BEGIN("wavestiff");

TEST_CASE("phase_difference halves the conjugate-product angle") {
  const int n = 4, D = 1, P = 4;
  ImageSeries series(D * 2 * P, n);
  Rng rng(3);
  std::vector<double> sigma(series.npix());
  for (double& s : sigma) s = 2.0 * M_PI * (rng.uniform() - 0.5);
  for (int p = 0; p < P; ++p)
    for (size_t q = 0; q < series.npix(); ++q) {
      series.rep(rep_encode(0, +1, p, P))[q] =
          std::exp(cd(0.0, sigma[q] + 0.3));
      series.rep(rep_encode(0, -1, p, P))[q] =
          std::exp(cd(0.0, sigma[q] - 0.3));
    }
  WrappedPhaseSet ph = phase_difference(series, D, P);
  REQUIRE(ph.phi.size() == (size_t)D * P);
  for (int p = 0; p < P; ++p)
    for (double v : ph.at(0, p)) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("phase_difference wraps the half angle") {
  const int n = 2, P = 4;
  ImageSeries series(2 * P, n);
  for (int p = 0; p < P; ++p)
    for (size_t q = 0; q < series.npix(); ++q) {
      series.rep(rep_encode(0, +1, p, P))[q] = std::exp(cd(0.0, 3.0));
      series.rep(rep_encode(0, -1, p, P))[q] = std::exp(cd(0.0, -3.0));
    }
  // angle(e^{i6}) = 6 - 2 pi; half of it
  WrappedPhaseSet ph = phase_difference(series, 1, P);
  const double want = (6.0 - 2.0 * M_PI) / 2.0;
  for (double v : ph.at(0, 0)) CHECK(v == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("remove_bulk kills constants and one-cycle tilts, keeps detail") {
  const int n = 32;
  const size_t N = (size_t)n * n;

  std::vector<double> constant(N, 0.8);
  for (double v : remove_bulk(constant, n)) CHECK(std::abs(v) < 1e-12);

  std::vector<double> tilt(N);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      tilt[(size_t)y * n + x] = 2.0 * M_PI * x / n - M_PI;
  for (double v : remove_bulk(tilt, n)) CHECK(std::abs(v) < 1e-9);

  // high-frequency content outside the 3x3 block passes through untouched
  std::vector<double> hf(N);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      hf[(size_t)y * n + x] = 0.4 * std::cos(2.0 * M_PI * 8 * x / n);
  std::vector<double> once = remove_bulk(hf, n);
  for (size_t p = 0; p < N; ++p) CHECK(std::abs(once[p] - hf[p]) < 1e-9);
  std::vector<double> twice = remove_bulk(once, n);
  for (size_t p = 0; p < N; ++p) CHECK(std::abs(twice[p] - once[p]) < 1e-9);
}

TEST_CASE("unwrap_laplacian is exact on an unwrapped smooth field") {
  const int n = 32;
  std::vector<double> phi((size_t)n * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double u = (x - n / 2.0) / (n / 4.0), v = (y - n / 2.0) / (n / 4.0);
      phi[(size_t)y * n + x] = 0.5 * std::exp(-(u * u + v * v));
    }
  std::vector<double> out = unwrap_laplacian(phi, n);
  for (size_t p = 0; p < phi.size(); ++p) CHECK(std::abs(out[p] - phi[p]) < 1e-12);
}

TEST_CASE("unwrap_laplacian recovers a wrapped 0..4pi ramp") {
  const int n = 32;
  std::vector<double> truth((size_t)n * n), wrapped(truth.size());
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double v = 4.0 * M_PI * x / (n - 1.0);
      truth[(size_t)y * n + x] = v;
      wrapped[(size_t)y * n + x] = std::remainder(v, 2.0 * M_PI);
    }
  std::vector<double> out = unwrap_laplacian(wrapped, n);
  // congruence: every voxel keeps its input branch modulo 2 pi
  for (size_t p = 0; p < out.size(); ++p)
    CHECK(std::abs(std::remainder(out[p] - wrapped[p], 2.0 * M_PI)) < 1e-9);
  // interior gradients match the true ramp slope
  for (int y = 4; y < n - 4; ++y)
    for (int x = 4; x < n - 5; ++x) {
      size_t p = (size_t)y * n + x;
      CHECK(std::abs((out[p + 1] - out[p]) - (truth[p + 1] - truth[p])) < 1e-9);
    }
}

TEST_CASE("harmonic_extract: pure cosine, constant rejection, roundtrip") {
  const int n = 8, D = 1, P = 4;
  const size_t N = (size_t)n * n;
  std::vector<std::vector<double>> phi(P, std::vector<double>(N));
  for (int p = 0; p < P; ++p)
    std::fill(phi[p].begin(), phi[p].end(), std::cos(2.0 * M_PI * p / P));
  HarmonicField f = harmonic_extract(phi, n, D, P, 1.0, 1.0);
  for (const cd& z : f.u[0]) CHECK(std::abs(z - cd(1.0, 0.0)) < 1e-12);

  for (int p = 0; p < P; ++p) std::fill(phi[p].begin(), phi[p].end(), 0.7);
  f = harmonic_extract(phi, n, D, P, 1.0, 1.0);
  for (const cd& z : f.u[0]) CHECK(std::abs(z) < 1e-12);

  CHECK_THROWS(harmonic_extract(phi, n, D, 2, 1.0, 1.0));
}

TEST_CASE("phantom phases roundtrip to the true displacement") {
  PhantomSpec spec; // homogeneous
  PhantomTruth truth = make_phantom(spec);
  VibrationSpec vib;
  vib.n_directions = 1;
  vib.wave_sources = {{1.0, 0.0, cd(2e-6, 0.0)}}; // small: no phase wraps
  MEGSpec meg;
  synth_wavefield(truth, vib);
  encode_repetitions(truth, vib, meg);

  WrappedPhaseSet ph = phase_difference(truth.images, 1, vib.n_offsets);
  HarmonicField f = harmonic_extract(ph.phi, truth.grid.n, 1, vib.n_offsets,
                                     meg.encoding_rad_per_m, truth.grid.dx());
  for (size_t p = 0; p < f.u[0].size(); ++p)
    CHECK(std::abs(f.u[0][p] - truth.displacement[0][p]) < 1e-6 * 2e-6);
}

TEST_CASE("butterworth gains at DC, cutoff, and twice the cutoff") {
  const int n = 32;
  const double dx = 2e-3;
  const size_t N = (size_t)n * n;

  CVec dc(N, cd(3.0, -1.0));
  butterworth_lowpass(dc, n, dx, 100.0, 4);
  for (const cd& z : dc) CHECK(std::abs(z - cd(3.0, -1.0)) < 1e-10);

  auto tone = [&](int f) {
    CVec v(N);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        v[(size_t)y * n + x] = std::exp(cd(0.0, 2.0 * M_PI * f * x / n));
    return v;
  };
  // cutoff placed exactly on the |k| of an 8-cycle tone
  const double kc = 8.0 / (n * dx);
  CVec at = tone(8);
  butterworth_lowpass(at, n, dx, kc, 4);
  for (const cd& z : at) CHECK(std::abs(z) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));

  CVec twice = tone(16); // |k| = 2 kc, order 4 -> 1/sqrt(1+2^8)
  butterworth_lowpass(twice, n, dx, kc, 4);
  for (const cd& z : twice)
    CHECK(std::abs(z) == doctest::Approx(1.0 / std::sqrt(257.0)).epsilon(1e-10));

  // rad/m cutoff is the same filter at 2 pi times the number
  CVec a = tone(8), b = tone(8);
  butterworth_lowpass(a, n, dx, kc, 4, false);
  butterworth_lowpass(b, n, dx, 2.0 * M_PI * kc, 4, true);
  for (size_t p = 0; p < N; ++p) CHECK(std::abs(a[p] - b[p]) < 1e-12);
}

TEST_CASE("invert_aide on an analytic plane wave hits the stencil oracle") {
  const int n = 64;
  const double dx = 2e-3, rho = 1000.0, omega = 2.0 * M_PI * 60.0;
  const double k = omega * std::sqrt(rho / 3000.0); // 217.66 rad/m
  HarmonicField f;
  f.n = n;
  f.dx = dx;
  f.u.assign(1, CVec((size_t)n * n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      f.u[0][(size_t)y * n + x] = cd(1e-6, 0.0) * std::exp(cd(0.0, k * x * dx));
  ModulusMap g = invert_aide(f, omega, rho);
  std::vector<double> mu = stiffness(g);
  const double want = rho * omega * omega * dx * dx / (2.0 - 2.0 * std::cos(k * dx));
  CHECK(want == doctest::Approx(3048.7).epsilon(1e-3));
  for (int y = 1; y < n - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      size_t p = (size_t)y * n + x;
      REQUIRE(g.valid[p]);
      CHECK(mu[p] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("invert_aide_fields with the exact Laplacian is dispersion-exact") {
  const int n = 32;
  const double dx = 2e-3, rho = 1000.0, omega = 2.0 * M_PI * 60.0;
  const double k = omega * std::sqrt(rho / 3000.0);
  std::vector<CVec> u(1, CVec((size_t)n * n)), lap(1, CVec((size_t)n * n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      size_t p = (size_t)y * n + x;
      u[0][p] = cd(1e-6, 0.0) * std::exp(cd(0.0, k * x * dx));
      lap[0][p] = -k * k * u[0][p];
    }
  ModulusMap g = invert_aide_fields(u, lap, n, omega, rho);
  std::vector<double> mu = stiffness(g);
  for (size_t p = 0; p < mu.size(); ++p) {
    REQUIRE(g.valid[p]);
    CHECK(mu[p] == doctest::Approx(3000.0).epsilon(1e-9));
  }

  // duplicating a direction must not change the estimate
  std::vector<CVec> u2 = {u[0], u[0]}, lap2 = {lap[0], lap[0]};
  ModulusMap g2 = invert_aide_fields(u2, lap2, n, omega, rho);
  for (size_t p = 0; p < mu.size(); ++p)
    CHECK(std::abs(g2.Gstar[p] - g.Gstar[p]) < 1e-9 * std::abs(g.Gstar[p]));
}

TEST_CASE("stiffness conversion oracles") {
  ModulusMap g;
  g.n = 2;
  g.Gstar = {cd(1000.0, 0.0), cd(0.0, 1000.0), cd(3000.0, 300.0), cd(5.0, 5.0)};
  g.valid = {1, 1, 1, 0};
  std::vector<double> mu = stiffness(g);
  CHECK(mu[0] == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(mu[1] == doctest::Approx(2000.0).epsilon(1e-12));
  const double mag = std::abs(g.Gstar[2]);
  CHECK(mu[2] == doctest::Approx(2.0 * mag * mag / (3000.0 + mag)).epsilon(1e-12));
  CHECK(mu[2] == doctest::Approx(3022.4).epsilon(1e-4));
  CHECK(mu[3] == 0.0); // invalid voxel
}

TEST_CASE("median statistics and filtering") {
  std::vector<double> mu = {1.0, 2.0, 3.0, 4.0};
  std::vector<uint8_t> mask = {1, 1, 1, 1};
  CHECK(median_stiffness(mu, mask) == 2.0); // lower median
  mask = {0, 1, 1, 0};
  CHECK(median_stiffness(mu, mask) == 2.0);

  const int n = 5;
  std::vector<double> img((size_t)n * n, 5.0);
  img[12] = 500.0; // single outlier
  std::vector<double> filt = median_filter(img, n);
  for (double v : filt) CHECK(v == 5.0);
}

TEST_SUITE_END();
