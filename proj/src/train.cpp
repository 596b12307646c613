#include "elastorec/train.hpp"

#include <cmath>

namespace elastorec {

namespace {

bool all_finite(const CVec& v) {
  for (const cd& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

std::vector<std::vector<CVec>> zero_like(
    const std::vector<std::vector<CVec>>& rho) {
  std::vector<std::vector<CVec>> g(rho.size());
  for (size_t t = 0; t < rho.size(); ++t) {
    g[t].resize(rho[t].size());
    for (size_t k = 0; k < rho[t].size(); ++k)
      g[t][k].assign(rho[t][k].size(), cd(0.0, 0.0));
  }
  return g;
}

} // namespace

ImageSeries decode_series(const DecoderParams& p) {
  ImageSeries out(p.T, p.cfg.grid_n);
  for (int t = 0; t < p.T; ++t) {
    auto rho = decode(p, t, false);
    std::copy(rho.back().begin(), rho.back().end(), out.rep(t));
  }
  return out;
}

TrainResult train(const KSpaceSet& ks, const CoilSet& coils, const Grid& grid,
                  const DecoderConfig& dcfg, const TrainConfig& tcfg,
                  const LatentMatrix& v0) {
  dcfg.validate();
  require(grid.n == dcfg.grid_n, "train: grid/decoder size mismatch");
  const bool wave_on = tcfg.lambda_wave > 0.0 && ks.T == tcfg.D * 2 * tcfg.P;
  LevelPlan lp = build_level_plan(ks.traj, coils, dcfg.K, grid,
                                  tcfg.nested_levels);
  DcSetup dc = build_dc_setup(ks, lp);

  TrainResult res;
  res.params = init_params(dcfg, v0, tcfg.seed);
  DecoderParams& p = res.params;
  const size_t NP = p.theta.size();
  Rng noise_rng(tcfg.seed ^ 0x6e015eULL);
  const bool noisy = dcfg.noise_sigma_feat > 0.0 && !dcfg.linear_mode;

  // auto-normalize the regularizer weights against the initial DC term
  {
    std::vector<std::vector<CVec>> rho(p.T);
    for (int t = 0; t < p.T; ++t) rho[t] = decode(p, t, false);
    double dc0 = loss_dc_multilevel(dc, rho);
    double mag0 = loss_magnitude(rho, dcfg.K, nullptr, tcfg.pair_budget);
    double wave0 = wave_on ? loss_wave_tv(rho, dcfg.K, tcfg.D, tcfg.P, nullptr,
                                          tcfg.isotropic_tv)
                           : 0.0;
    double lat0 = loss_latent(p.v_row(0), p.v_count());
    auto eff = [&](double lam, double term) {
      return (lam > 0.0 && term > 0.0) ? lam * dc0 / term : 0.0;
    };
    res.lambda_mag_eff = eff(tcfg.lambda_mag, mag0);
    res.lambda_wave_eff = wave_on ? eff(tcfg.lambda_wave, wave0) : 0.0;
    res.lambda_lat_eff = eff(tcfg.lambda_lat, lat0);
  }

  std::vector<double> m(2 * NP, 0.0), v(2 * NP, 0.0);
  CVec gtheta(NP), snapshot = p.theta;
  std::vector<DecodeCache> caches(p.T);

  for (int it = 0; it < tcfg.iters; ++it) {
    std::vector<std::vector<CVec>> rho(p.T);
    for (int t = 0; t < p.T; ++t)
      rho[t] = decode(p, t, noisy, &noise_rng, &caches[t]);

    auto gdc = zero_like(rho);
    double ldc = loss_dc_multilevel(dc, rho, &gdc);
    double lmag = 0.0, lwave = 0.0;
    if (res.lambda_mag_eff > 0.0) {
      auto gm = zero_like(rho);
      lmag = loss_magnitude(rho, dcfg.K, &gm, tcfg.pair_budget);
      for (int t = 0; t < p.T; ++t)
        for (int k = 0; k < dcfg.K; ++k)
          for (size_t q = 0; q < gdc[t][k].size(); ++q)
            gdc[t][k][q] += res.lambda_mag_eff * gm[t][k][q];
    }
    if (res.lambda_wave_eff > 0.0) {
      auto gw = zero_like(rho);
      lwave = loss_wave_tv(rho, dcfg.K, tcfg.D, tcfg.P, &gw,
                           tcfg.isotropic_tv);
      for (int t = 0; t < p.T; ++t)
        for (int k = 0; k < dcfg.K; ++k)
          for (size_t q = 0; q < gdc[t][k].size(); ++q)
            gdc[t][k][q] += res.lambda_wave_eff * gw[t][k][q];
    }

    std::fill(gtheta.begin(), gtheta.end(), cd(0.0, 0.0));
    for (int t = 0; t < p.T; ++t)
      decode_backward(p, t, caches[t], gdc[t], gtheta);

    double llat = 0.0;
    if (res.lambda_lat_eff > 0.0) {
      CVec gl(p.v_count(), cd(0.0, 0.0));
      llat = loss_latent(p.v_row(0), p.v_count(), gl.data());
      cd* gv = gtheta.data() + p.v_offset;
      for (size_t i = 0; i < gl.size(); ++i)
        gv[i] += res.lambda_lat_eff * gl[i];
    } else {
      llat = loss_latent(p.v_row(0), p.v_count());
    }

    double total = ldc + res.lambda_mag_eff * lmag +
                   res.lambda_wave_eff * lwave + res.lambda_lat_eff * llat;
    res.trace.total.push_back(total);
    res.trace.dc.push_back(ldc);
    res.trace.mag.push_back(lmag);
    res.trace.wave.push_back(lwave);
    res.trace.lat.push_back(llat);

    if (!std::isfinite(total) || !all_finite(gtheta)) {
      p.theta = snapshot; // last finite state
      res.aborted = true;
      res.iterations = it;
      break;
    }
    snapshot = p.theta;
    res.iterations = it + 1;

    // Adam over the flat real view of theta
    double* th = reinterpret_cast<double*>(p.theta.data());
    const double* g = reinterpret_cast<const double*>(gtheta.data());
    double b1t = 1.0 - std::pow(tcfg.beta1, it + 1);
    double b2t = 1.0 - std::pow(tcfg.beta2, it + 1);
    for (size_t i = 0; i < 2 * NP; ++i) {
      m[i] = tcfg.beta1 * m[i] + (1.0 - tcfg.beta1) * g[i];
      v[i] = tcfg.beta2 * v[i] + (1.0 - tcfg.beta2) * g[i] * g[i];
      th[i] -= tcfg.lr * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + tcfg.adam_eps);
    }
  }

  res.series = decode_series(p);
  return res;
}

double grad_check(DecoderParams& p,
                  const std::function<double(const DecoderParams&, CVec*)>& f,
                  int probes, uint64_t seed, double h) {
  CVec g(p.theta.size(), cd(0.0, 0.0));
  f(p, &g);
  Rng rng(seed);
  double worst = 0.0;
  for (int j = 0; j < probes; ++j) {
    size_t i = (size_t)(rng.uniform() * p.theta.size());
    if (i >= p.theta.size()) i = p.theta.size() - 1;
    bool re = rng.uniform() < 0.5;
    cd save = p.theta[i];
    auto shift = [&](double d) {
      p.theta[i] = save + (re ? cd(d, 0.0) : cd(0.0, d));
    };
    shift(+h);
    double fp = f(p, nullptr);
    shift(-h);
    double fm = f(p, nullptr);
    p.theta[i] = save;
    double fd = (fp - fm) / (2.0 * h);
    double an = re ? g[i].real() : g[i].imag();
    double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

} // namespace elastorec
