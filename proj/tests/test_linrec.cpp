#include <doctest.h>

#include <Eigen/Dense>

#include "elastorec/linrec.hpp"
#include "elastorec/simkit.hpp"
#include "helpers.hpp"

using namespace elastorec;

TEST_SUITE_BEGIN("linrec");

namespace {

Eigen::MatrixXcd orthonormal_basis(const LatentMatrix& V) {
  Eigen::MatrixXcd M(V.T, V.L);
  for (int t = 0; t < V.T; ++t)
    for (int l = 0; l < V.L; ++l) M(t, l) = V.at(t, l);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(V.T, V.L);
}

// largest principal angle (in sin) between the column spans
double subspace_gap(const LatentMatrix& a, const LatentMatrix& b) {
  Eigen::MatrixXcd Qa = orthonormal_basis(a), Qb = orthonormal_basis(b);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Qa.adjoint() * Qb);
  double cmin = svd.singularValues().minCoeff();
  cmin = std::min(cmin, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - cmin * cmin));
}

// exact rank-L series rho_t = U v_t^H on a small phantom geometry
struct RankLSetup {
  Grid grid{32, 0.064};
  int T = 8, L = 3;
  LatentMatrix V;
  ImageSeries series;
  CoilSet coils;
  Trajectory traj;
  KSpaceSet ks;
};

RankLSetup make_rankl(uint64_t seed) {
  RankLSetup s;
  s.series = ImageSeries(s.T, s.grid.n);
  // orthonormal V via QR of a random matrix
  Rng rng(seed);
  Eigen::MatrixXcd M(s.T, s.L);
  for (int t = 0; t < s.T; ++t)
    for (int l = 0; l < s.L; ++l) {
      cd z = rng.cgauss();
      M(t, l) = z;
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
  Eigen::MatrixXcd Q =
      qr.householderQ() * Eigen::MatrixXcd::Identity(s.T, s.L);
  s.V.T = s.T;
  s.V.L = s.L;
  s.V.V.resize((size_t)s.T * s.L);
  for (int t = 0; t < s.T; ++t)
    for (int l = 0; l < s.L; ++l) s.V.at(t, l) = Q(t, l);

  std::vector<CVec> U(s.L);
  U[0] = th::smooth_image(s.grid.n);
  for (int l = 1; l < s.L; ++l) {
    U[l] = th::smooth_image(s.grid.n);
    for (int y = 0; y < s.grid.n; ++y)
      for (int x = 0; x < s.grid.n; ++x)
        U[l][(size_t)y * s.grid.n + x] *=
            cd(std::cos(0.2 * l * x), std::sin(0.15 * l * y));
  }
  for (int t = 0; t < s.T; ++t)
    for (size_t p = 0; p < s.series.npix(); ++p) {
      cd acc(0.0, 0.0);
      for (int l = 0; l < s.L; ++l) acc += U[l][p] * s.V.at(t, l);
      s.series.rep(t)[p] = acc;
    }

  PhantomSpec spec;
  spec.grid_size = s.grid.n;
  spec.fov_m = s.grid.fov;
  spec.coils = 4;
  s.coils = make_phantom(spec).coil_maps;
  s.traj = make_spiral(4, 600, s.grid.fov, s.grid.n);
  s.ks = simulate_kspace(s.series, s.coils, s.traj, 0.0, 1);
  return s;
}

} // namespace

TEST_CASE("cg_sense recovers a fully sampled noiseless phantom") {
  PhantomSpec spec;
  spec.inclusions.push_back({32.0, 32.0, 10.0, 3000.0, 0.0});
  PhantomTruth truth = make_phantom(spec);
  VibrationSpec vib;
  synth_wavefield(truth, vib);
  encode_repetitions(truth, vib, MEGSpec{});
  ImageSeries two(2, truth.grid.n);
  std::copy(truth.images.rep(0), truth.images.rep(1), two.rep(0));
  std::copy(truth.images.rep(12), truth.images.rep(13), two.rep(1));

  Trajectory traj = make_spiral(5, 1024, truth.grid.fov, truth.grid.n);
  KSpaceSet ks = simulate_kspace(two, truth.coil_maps, traj, 0.0, 1);
  std::vector<CGReport> reports;
  ImageSeries rec = cg_sense(ks, truth.coil_maps, truth.grid, {}, &reports);
  CHECK(th::rel_err(rec.data, two.data) < 0.02);
  for (const auto& r : reports) {
    CHECK_FALSE(r.diverged);
    for (size_t i = 1; i < r.residuals.size(); ++i)
      CHECK(r.residuals[i] <= r.residuals[i - 1]);
  }
}

TEST_CASE("cg_sense of zero data is zero") {
  RankLSetup s = make_rankl(2);
  std::fill(s.ks.data.begin(), s.ks.data.end(), cd(0.0, 0.0));
  ImageSeries rec = cg_sense(s.ks, s.coils, s.grid, {});
  for (const cd& z : rec.data) CHECK(z == cd(0.0, 0.0));
}

TEST_CASE("temporal_basis recovers an exact rank-L subspace") {
  RankLSetup s = make_rankl(3);
  LatentMatrix V = temporal_basis(s.ks, s.grid, s.L);
  CHECK(subspace_gap(V, s.V) < 1e-6);
}

TEST_CASE("temporal_basis scales linearly and keeps its subspace") {
  RankLSetup s = make_rankl(4);
  LatentMatrix V1 = temporal_basis(s.ks, s.grid, s.L);
  for (cd& z : s.ks.data) z *= 10.0;
  LatentMatrix V2 = temporal_basis(s.ks, s.grid, s.L);
  for (int t = 0; t < s.T; ++t)
    for (int l = 0; l < s.L; ++l)
      CHECK(std::abs(V2.at(t, l) - 10.0 * V1.at(t, l)) <
            1e-8 * std::abs(V1.at(t, l)) + 1e-12);
  CHECK(subspace_gap(V1, V2) < 1e-8);
}

TEST_CASE("temporal_basis is invariant to a global data phase") {
  RankLSetup s = make_rankl(5);
  LatentMatrix V1 = temporal_basis(s.ks, s.grid, s.L);
  cd ph = std::exp(cd(0.0, 0.83));
  for (cd& z : s.ks.data) z *= ph;
  LatentMatrix V2 = temporal_basis(s.ks, s.grid, s.L);
  CHECK(subspace_gap(V1, V2) < 1e-8);
}

TEST_CASE("phantom navigator rank collapses at 13 of 24") {
  PhantomSpec spec;
  spec.inclusions.push_back({32.0, 32.0, 10.0, 3000.0, 0.0});
  PhantomTruth truth = make_phantom(spec);
  VibrationSpec vib;
  synth_wavefield(truth, vib);
  encode_repetitions(truth, vib, MEGSpec{});
  Trajectory traj = make_spiral(5, 512, truth.grid.fov, truth.grid.n);
  KSpaceSet ks = simulate_kspace(truth.images, truth.coil_maps, traj, 0.0, 1);
  auto sv = navigator_singular_values(ks, truth.grid);
  REQUIRE(sv.size() >= 13);
  CHECK(sv[12] / sv[0] < 1e-8);
}

TEST_CASE("subspace_recon solves the consistent rank-L problem") {
  RankLSetup s = make_rankl(6);
  auto [U, rec] = subspace_recon(s.ks, s.coils, s.grid, s.V, 0.0, 80);
  CHECK(th::rel_err(rec.data, s.series.data) < 1e-3);

  // output Casorati rank is bounded by L
  Eigen::MatrixXcd cas(s.series.npix(), s.T);
  for (int t = 0; t < s.T; ++t)
    for (size_t p = 0; p < s.series.npix(); ++p) cas(p, t) = rec.rep(t)[p];
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(cas);
  CHECK(svd.singularValues()(s.L) / svd.singularValues()(0) < 1e-8);
}

TEST_CASE("temporal_basis rejects an over-ambitious rank") {
  RankLSetup s = make_rankl(7);
  CHECK_THROWS(temporal_basis(s.ks, s.grid, s.T + 1));
}

TEST_SUITE_END();
