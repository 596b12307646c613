#include <doctest.h>

#include "elastorec/levels.hpp"
#include "elastorec/losses.hpp"
#include "elastorec/simkit.hpp"
#include "elastorec/train.hpp"
#include "helpers.hpp"

using namespace elastorec;

TEST_SUITE_BEGIN("deeprec");

namespace {

LatentMatrix random_latent(int T, int L, uint64_t seed) {
  LatentMatrix v;
  v.T = T;
  v.L = L;
  v.V.resize((size_t)T * L);
  Rng rng(seed);
  for (cd& z : v.V) z = rng.cgauss();
  return v;
}

// small acquisition shared by the gradient checks
struct MiniSetup {
  Grid grid{8, 0.016};
  CoilSet coils;
  Trajectory traj;
  KSpaceSet ks;
};

MiniSetup make_mini(int T, uint64_t seed) {
  MiniSetup s;
  PhantomSpec spec;
  spec.grid_size = s.grid.n;
  spec.fov_m = s.grid.fov;
  spec.coils = 2;
  s.coils = make_phantom(spec).coil_maps;
  s.traj = make_spiral(2, 80, s.grid.fov, s.grid.n);
  ImageSeries series(T, s.grid.n);
  Rng rng(seed);
  for (cd& z : series.data) z = rng.cgauss();
  s.ks = simulate_kspace(series, s.coils, s.traj, 0.0, seed);
  return s;
}

std::vector<std::vector<CVec>> wrap1(const CVec& a, const CVec& b) {
  return {{a}, {b}};
}

} // namespace

TEST_CASE("decode emits one map per level with doubling sides") {
  DecoderConfig cfg;
  cfg.grid_n = 16;
  cfg.K = 3;
  cfg.L = 4;
  cfg.c0 = 8;
  cfg.min_channels = 4;
  cfg.noise_sigma_feat = 0.0;
  DecoderParams p = init_params(cfg, random_latent(2, cfg.L, 5), 11);
  CHECK(p.theta.size() == param_count(cfg, 2));
  auto rho = decode(p, 0, false);
  REQUIRE(rho.size() == 3);
  for (int k = 1; k <= 3; ++k) {
    const int side = cfg.side(k);
    CHECK(side == (2 << k));
    CHECK(rho[k - 1].size() == (size_t)side * side);
  }
}

TEST_CASE("zero parameters decode to zero at every level") {
  DecoderConfig cfg;
  cfg.grid_n = 16;
  cfg.K = 2;
  cfg.L = 3;
  cfg.c0 = 8;
  cfg.min_channels = 4;
  cfg.noise_sigma_feat = 0.0;
  DecoderParams p = init_params(cfg, random_latent(2, cfg.L, 7), 3);
  std::fill(p.theta.begin(), p.theta.end(), cd(0.0, 0.0));
  auto rho = decode(p, 1, false);
  for (const CVec& level : rho)
    for (const cd& z : level) CHECK(z == cd(0.0, 0.0));
}

TEST_CASE("eval-mode decode is deterministic even with a noise config") {
  DecoderConfig cfg;
  cfg.grid_n = 16;
  cfg.K = 2;
  cfg.L = 4;
  cfg.noise_sigma_feat = 0.1; // train-only; eval must ignore it
  DecoderParams p = init_params(cfg, random_latent(3, cfg.L, 2), 77);
  auto a = decode(p, 2, false);
  auto b = decode(p, 2, false);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("train-mode noise perturbs but backward still matches eval graph") {
  DecoderConfig cfg;
  cfg.grid_n = 16;
  cfg.K = 2;
  cfg.L = 4;
  cfg.noise_sigma_feat = 0.1;
  DecoderParams p = init_params(cfg, random_latent(2, cfg.L, 2), 5);
  Rng noise(99);
  auto noisy = decode(p, 0, true, &noise);
  auto clean = decode(p, 0, false);
  CHECK(noisy.back() != clean.back());
}

TEST_CASE("gradient check: quadratic loss through the linear decoder") {
  const int T = 4;
  MiniSetup s = make_mini(T, 21);
  DecoderConfig cfg;
  cfg.grid_n = s.grid.n;
  cfg.K = 1;
  cfg.L = 2;
  cfg.linear_mode = true;
  cfg.noise_sigma_feat = 0.0;
  LevelPlan lp = build_level_plan(s.traj, s.coils, 1, s.grid);
  DcSetup dc = build_dc_setup(s.ks, lp);
  DecoderParams p = init_params(cfg, random_latent(T, cfg.L, 31), 13);
  Rng rng(13); // linear weights start at zero; probe a generic point instead
  for (cd& z : p.theta) z += 0.1 * rng.cgauss();

  auto f = [&](const DecoderParams& q, CVec* g) {
    std::vector<std::vector<CVec>> rho(T);
    std::vector<DecodeCache> caches(T);
    for (int t = 0; t < T; ++t) rho[t] = decode(q, t, false, nullptr, &caches[t]);
    std::vector<std::vector<CVec>> grho;
    if (g) {
      grho.resize(T);
      for (int t = 0; t < T; ++t)
        grho[t].assign(1, CVec(rho[t][0].size(), cd(0.0, 0.0)));
    }
    double loss = loss_dc_multilevel(dc, rho, g ? &grho : nullptr);
    const double lam = 1e-3;
    loss += lam * loss_latent(q.v_row(0), q.v_count());
    if (g) {
      for (int t = 0; t < T; ++t) decode_backward(q, t, caches[t], grho[t], *g);
      CVec gl(q.v_count());
      loss_latent(q.v_row(0), q.v_count(), gl.data());
      for (size_t i = 0; i < gl.size(); ++i)
        (*g)[q.v_offset + i] += lam * gl[i];
    }
    return loss;
  };
  // central differences are exact on quadratics; the larger step only
  // suppresses cancellation roundoff
  CHECK(grad_check(p, f, 24, 7, 1e-2) < 1e-7);
}

TEST_CASE("gradient check: full composite loss through the deep decoder") {
  const int D = 1, P = 2, T = D * 2 * P;
  MiniSetup s = make_mini(T, 33);
  DecoderConfig cfg;
  cfg.grid_n = s.grid.n;
  cfg.K = 2;
  cfg.L = 3;
  cfg.mlp_hidden = {8, 8};
  cfg.c0 = 4;
  cfg.min_channels = 2;
  cfg.noise_sigma_feat = 0.0;
  cfg.activation = "tanh";
  LevelPlan lp = build_level_plan(s.traj, s.coils, cfg.K, s.grid);
  DcSetup dc = build_dc_setup(s.ks, lp);
  DecoderParams p = init_params(cfg, random_latent(T, cfg.L, 41), 17);

  const double lmag = 0.5, lwave = 0.3, llat = 0.1;
  auto f = [&](const DecoderParams& q, CVec* g) {
    std::vector<std::vector<CVec>> rho(T);
    std::vector<DecodeCache> caches(T);
    for (int t = 0; t < T; ++t) rho[t] = decode(q, t, false, nullptr, &caches[t]);
    std::vector<std::vector<CVec>> grho;
    if (g) {
      grho.resize(T);
      for (int t = 0; t < T; ++t) {
        grho[t].resize(cfg.K);
        for (int k = 0; k < cfg.K; ++k)
          grho[t][k].assign(rho[t][k].size(), cd(0.0, 0.0));
      }
    }
    double loss = loss_dc_multilevel(dc, rho, g ? &grho : nullptr);

    std::vector<std::vector<CVec>> gterm;
    auto add_term = [&](double w, double val,
                        const std::vector<std::vector<CVec>>& gt) {
      loss += w * val;
      if (g)
        for (int t = 0; t < T; ++t)
          for (int k = 0; k < cfg.K; ++k)
            for (size_t i = 0; i < gt[t][k].size(); ++i)
              grho[t][k][i] += w * gt[t][k][i];
    };
    if (g) {
      gterm.resize(T);
      for (int t = 0; t < T; ++t) {
        gterm[t].resize(cfg.K);
        for (int k = 0; k < cfg.K; ++k)
          gterm[t][k].assign(rho[t][k].size(), cd(0.0, 0.0));
      }
    }
    double mag = loss_magnitude(rho, cfg.K, g ? &gterm : nullptr);
    add_term(lmag, mag, gterm);
    if (g)
      for (auto& per : gterm)
        for (auto& lvl : per) std::fill(lvl.begin(), lvl.end(), cd(0.0, 0.0));
    double wave = loss_wave_tv(rho, cfg.K, D, P, g ? &gterm : nullptr);
    add_term(lwave, wave, gterm);

    loss += llat * loss_latent(q.v_row(0), q.v_count());
    if (g) {
      for (int t = 0; t < T; ++t) decode_backward(q, t, caches[t], grho[t], *g);
      CVec gl(q.v_count());
      loss_latent(q.v_row(0), q.v_count(), gl.data());
      for (size_t i = 0; i < gl.size(); ++i)
        (*g)[q.v_offset + i] += llat * gl[i];
    }
    return loss;
  };
  CHECK(grad_check(p, f, 32, 19) < 1e-4);
}

TEST_CASE("magnitude loss toy values across levels") {
  // single-pixel maps: two reps with |.| = 1 vs 3 -> L1 distance 2
  CVec a = {cd(1.0, 0.0)}, b = {cd(0.0, 3.0)};
  auto rho = wrap1(a, b);
  auto g = wrap1(CVec{cd(0, 0)}, CVec{cd(0, 0)});
  CHECK(loss_magnitude(rho, 1, &g) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g[0][0][0].real() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(g[1][0][0].imag() == doctest::Approx(1.0).epsilon(1e-9));

  // two levels accumulate: (|1|,|3|) and (|2|,|5|) -> 2 + 3
  std::vector<std::vector<CVec>> rho2 = {
      {CVec{cd(1.0, 0.0)}, CVec{cd(2.0, 0.0)}},
      {CVec{cd(3.0, 0.0)}, CVec{cd(5.0, 0.0)}}};
  CHECK(loss_magnitude(rho2, 2) == doctest::Approx(5.0).epsilon(1e-12));

  // identical magnitudes, different phases -> zero
  CVec c = {cd(0.0, 1.0)};
  auto same = wrap1(a, c);
  CHECK(loss_magnitude(same, 1) == 0.0);
}

TEST_CASE("latent loss is the raw energy with gradient 2v") {
  CVec v((size_t)24 * 8, cd(1.0, 0.0)), g(v.size());
  CHECK(loss_latent(v.data(), v.size(), g.data()) ==
        doctest::Approx(192.0).epsilon(1e-12));
  for (const cd& z : g) CHECK(z == cd(2.0, 0.0));
  CVec zero(16, cd(0.0, 0.0));
  CHECK(loss_latent(zero.data(), zero.size()) == 0.0);
}

TEST_CASE("wave TV loss: uniform, phase strip, static-phase invariance") {
  const int n = 4;
  const size_t N = (size_t)n * n;

  // D = P = 1: reps ordered (+, -)
  CVec plus(N), minus(N, cd(2.0, 0.0));
  for (cd& z : plus) z = cd(2.0, 0.0);
  CHECK(loss_wave_tv(wrap1(plus, minus), 1, 1, 1) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // half-angle phase theta = 1 on the right half, 0 on the left:
  // 4 rows x one horizontal jump of |e^{i} - 1| = 2 sin(1/2)
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double theta = x >= n / 2 ? 1.0 : 0.0;
      plus[(size_t)y * n + x] = 2.0 * std::exp(cd(0.0, 2.0 * theta));
    }
  double want = 4.0 * 2.0 * std::sin(0.5);
  CHECK(loss_wave_tv(wrap1(plus, minus), 1, 1, 1) ==
        doctest::Approx(want).epsilon(1e-12));

  // a common static phase cancels in the conjugate product
  CVec plus2 = plus, minus2 = minus;
  Rng rng(4);
  for (size_t p = 0; p < N; ++p) {
    cd ph = std::exp(cd(0.0, 2.0 * M_PI * rng.uniform()));
    plus2[p] *= ph;
    minus2[p] *= ph;
  }
  CHECK(std::abs(loss_wave_tv(wrap1(plus2, minus2), 1, 1, 1) -
                 loss_wave_tv(wrap1(plus, minus), 1, 1, 1)) < 1e-10);
}

TEST_CASE("DC loss at zero images is the normalized data energy") {
  MiniSetup s = make_mini(2, 55);
  LevelPlan lp = build_level_plan(s.traj, s.coils, 2, s.grid);
  DcSetup dc = build_dc_setup(s.ks, lp);
  std::vector<std::vector<CVec>> rho(2);
  for (int t = 0; t < 2; ++t) {
    rho[t].resize(2);
    for (int k = 1; k <= 2; ++k)
      rho[t][k - 1].assign((size_t)lp.side(k) * lp.side(k), cd(0.0, 0.0));
  }
  double want = 0.0;
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k) {
      double e = 0.0;
      for (const cd& z : dc.data[(size_t)t * 2 + k]) e += std::norm(z);
      want += e / dc.norm[k];
    }
  CHECK(loss_dc_multilevel(dc, rho) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("train with zero iterations returns the decoded initialization") {
  const int T = 4;
  MiniSetup s = make_mini(T, 61);
  DecoderConfig cfg;
  cfg.grid_n = s.grid.n;
  cfg.K = 2;
  cfg.L = 2;
  cfg.mlp_hidden = {8};
  cfg.c0 = 4;
  cfg.min_channels = 2;
  cfg.noise_sigma_feat = 0.0;
  LatentMatrix v0 = random_latent(T, cfg.L, 71);
  TrainConfig tcfg;
  tcfg.iters = 0;
  tcfg.seed = 9;
  tcfg.D = 1;
  tcfg.P = 2;
  TrainResult res = train(s.ks, s.coils, s.grid, cfg, tcfg, v0);
  DecoderParams ref = init_params(cfg, v0, tcfg.seed);
  CHECK(res.params.theta == ref.theta);
  ImageSeries dec = decode_series(ref);
  CHECK(res.series.data == dec.data);
  CHECK_FALSE(res.aborted);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const int T = 4;
  MiniSetup s = make_mini(T, 81);
  DecoderConfig cfg;
  cfg.grid_n = s.grid.n;
  cfg.K = 2;
  cfg.L = 2;
  cfg.mlp_hidden = {8};
  cfg.c0 = 4;
  cfg.min_channels = 2;
  cfg.noise_sigma_feat = 0.05; // exercise the noise path
  LatentMatrix v0 = random_latent(T, cfg.L, 91);
  TrainConfig tcfg;
  tcfg.iters = 5;
  tcfg.seed = 4;
  tcfg.D = 1;
  tcfg.P = 2;
  TrainResult a = train(s.ks, s.coils, s.grid, cfg, tcfg, v0);
  TrainResult b = train(s.ks, s.coils, s.grid, cfg, tcfg, v0);
  CHECK(a.params.theta == b.params.theta);
  CHECK(a.trace.total == b.trace.total);
  CHECK(a.series.data == b.series.data);
  CHECK(a.trace.total.size() == 5);
  tcfg.seed = 5;
  TrainResult c = train(s.ks, s.coils, s.grid, cfg, tcfg, v0);
  CHECK(a.params.theta != c.params.theta);
}

TEST_CASE("decoder config validation") {
  DecoderConfig cfg;
  cfg.grid_n = 48; // not a power of two
  CHECK_THROWS(cfg.validate());
  cfg.grid_n = 16;
  cfg.L = 0;
  CHECK_THROWS(cfg.validate());
  cfg.L = 4;
  cfg.mlp_hidden = {};
  CHECK_THROWS(cfg.validate());
  cfg.linear_mode = true; // no MLP needed in linear mode
  cfg.K = 1;
  cfg.validate();
}

TEST_SUITE_END();
