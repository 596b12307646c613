#include "elastorec/losses.hpp"

#include <cmath>

#include "elastorec/sense.hpp"
#include "elastorec/simkit.hpp"

namespace elastorec {

DcSetup build_dc_setup(const KSpaceSet& ks, const LevelPlan& lp) {
  DcSetup dc;
  dc.lp = &lp;
  dc.T = ks.T;
  dc.C = ks.C;
  dc.K = lp.K;
  dc.idx.resize((size_t)ks.T * lp.K);
  dc.data.resize((size_t)ks.T * lp.K);
  dc.norm.assign(lp.K, 0.0);
  for (int t = 0; t < ks.T; ++t) {
    auto full = ks.full_indices(t);
    for (int k = 1; k <= lp.K; ++k) {
      auto& idx = dc.idx[(size_t)t * lp.K + k - 1];
      std::vector<int> off; // offsets into the repetition's data
      for (size_t j = 0; j < full.size(); ++j) {
        int pos = lp.segpos[k - 1][full[j]];
        if (pos >= 0) {
          idx.push_back(pos);
          off.push_back((int)j);
        }
      }
      require(!idx.empty(), "dc setup: repetition misses a level segment");
      auto& d = dc.data[(size_t)t * lp.K + k - 1];
      d.resize((size_t)ks.C * idx.size());
      for (int i = 0; i < ks.C; ++i) {
        const cd* src = ks.at(t, i);
        cd* dst = d.data() + (size_t)i * idx.size();
        for (size_t j = 0; j < off.size(); ++j) dst[j] = src[off[j]];
      }
      dc.norm[k - 1] += (double)idx.size() * ks.C;
    }
  }
  return dc;
}

double loss_dc_multilevel(const DcSetup& dc,
                          const std::vector<std::vector<CVec>>& rho,
                          std::vector<std::vector<CVec>>* grad) {
  const LevelPlan& lp = *dc.lp;
  double loss = 0.0;
  CVec resid;
  for (int t = 0; t < dc.T; ++t) {
    for (int k = 1; k <= dc.K; ++k) {
      const auto& idx = dc.idx[(size_t)t * dc.K + k - 1];
      const auto& d = dc.data[(size_t)t * dc.K + k - 1];
      const int m = (int)idx.size();
      resid.resize(d.size());
      sense_forward(rho[t][k - 1].data(), lp.coils[k - 1], lp.plans[k - 1],
                    resid.data(), idx.data(), m);
      double sq = 0.0;
      for (size_t q = 0; q < d.size(); ++q) {
        resid[q] -= d[q];
        sq += std::norm(resid[q]);
      }
      loss += sq / dc.norm[k - 1];
      if (grad) {
        const size_t npix = rho[t][k - 1].size();
        CVec g(npix);
        sense_adjoint(resid.data(), lp.coils[k - 1], lp.plans[k - 1], g.data(),
                      idx.data(), m);
        double s = 2.0 / dc.norm[k - 1];
        cd* acc = (*grad)[t][k - 1].data();
        for (size_t p = 0; p < npix; ++p) acc[p] += s * g[p];
      }
    }
  }
  return loss;
}

double loss_magnitude(const std::vector<std::vector<CVec>>& rho, int K,
                      std::vector<std::vector<CVec>>* grad, int pair_budget) {
  const int T = (int)rho.size();
  const double eps = 1e-12;
  const long npairs_all = (long)T * (T - 1) / 2;
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(npairs_all);
  for (int a = 0; a < T; ++a)
    for (int b = a + 1; b < T; ++b) pairs.push_back({a, b});
  if (pair_budget > 0 && pair_budget < npairs_all) {
    // deterministic stride subset
    std::vector<std::pair<int, int>> sub;
    double step = (double)pairs.size() / pair_budget;
    for (int j = 0; j < pair_budget; ++j)
      sub.push_back(pairs[(size_t)(j * step)]);
    pairs.swap(sub);
  }

  double loss = 0.0;
  for (auto [a, b] : pairs) {
    for (int k = 0; k < K; ++k) {
      const cd* ra = rho[a][k].data();
      const cd* rb = rho[b][k].data();
      cd* ga = grad ? (*grad)[a][k].data() : nullptr;
      cd* gb = grad ? (*grad)[b][k].data() : nullptr;
      const size_t npix = rho[a][k].size();
      for (size_t p = 0; p < npix; ++p) {
        double ma = std::abs(ra[p]), mb = std::abs(rb[p]);
        double d = ma - mb;
        loss += std::abs(d);
        if (grad && d != 0.0) {
          double s = d > 0.0 ? 1.0 : -1.0;
          ga[p] += s * ra[p] / (ma + eps);
          gb[p] -= s * rb[p] / (mb + eps);
        }
      }
    }
  }
  return loss;
}

double tv_complex(const CVec& w, int n, bool isotropic, CVec* grad) {
  const double eps = 1e-12;
  double tv = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      size_t p = (size_t)y * n + x;
      cd dx = x + 1 < n ? w[p + 1] - w[p] : cd(0.0, 0.0);
      cd dy = y + 1 < n ? w[p + n] - w[p] : cd(0.0, 0.0);
      if (isotropic) {
        double m = std::sqrt(std::norm(dx) + std::norm(dy));
        tv += m;
        if (grad && m > eps) {
          cd gx = dx / m, gy = dy / m;
          if (x + 1 < n) {
            (*grad)[p + 1] += gx;
            (*grad)[p] -= gx;
          }
          if (y + 1 < n) {
            (*grad)[p + n] += gy;
            (*grad)[p] -= gy;
          }
        }
      } else {
        double mx = std::abs(dx), my = std::abs(dy);
        tv += mx + my;
        if (grad) {
          if (x + 1 < n && mx > eps) {
            cd gx = dx / mx;
            (*grad)[p + 1] += gx;
            (*grad)[p] -= gx;
          }
          if (y + 1 < n && my > eps) {
            cd gy = dy / my;
            (*grad)[p + n] += gy;
            (*grad)[p] -= gy;
          }
        }
      }
    }
  return tv;
}

double loss_wave_tv(const std::vector<std::vector<CVec>>& rho, int K, int D,
                    int P, std::vector<std::vector<CVec>>* grad,
                    bool isotropic) {
  const size_t npix = rho[0][K - 1].size();
  const int n = (int)std::lround(std::sqrt((double)npix));
  const double eps = 1e-12;
  double loss = 0.0;
  CVec w(npix), gw(npix);
  for (int d = 0; d < D; ++d)
    for (int p = 0; p < P; ++p) {
      const int tp = rep_encode(d, +1, p, P);
      const int tm = rep_encode(d, -1, p, P);
      const cd* rp = rho[tp][K - 1].data();
      const cd* rm = rho[tm][K - 1].data();
      for (size_t q = 0; q < npix; ++q) {
        double th = 0.5 * std::arg(rp[q] * std::conj(rm[q]));
        w[q] = cd(std::cos(th), std::sin(th));
      }
      if (!grad) {
        loss += tv_complex(w, n, isotropic, nullptr);
        continue;
      }
      std::fill(gw.begin(), gw.end(), cd(0.0, 0.0));
      loss += tv_complex(w, n, isotropic, &gw);
      cd* gp = (*grad)[tp][K - 1].data();
      cd* gm = (*grad)[tm][K - 1].data();
      for (size_t q = 0; q < npix; ++q) {
        // dL/dtheta through w = e^{i theta}, then theta = arg(z)/2
        double dth =
            -gw[q].real() * w[q].imag() + gw[q].imag() * w[q].real();
        cd z = rp[q] * std::conj(rm[q]);
        double zn = std::norm(z);
        if (zn < eps) continue;
        cd gz = 0.5 * dth * cd(0.0, 1.0) * z / zn;
        gp[q] += gz * rm[q];
        gm[q] += std::conj(gz) * rp[q];
      }
    }
  return loss;
}

double loss_latent(const cd* v, size_t count, cd* grad) {
  double s = 0.0;
  for (size_t i = 0; i < count; ++i) s += std::norm(v[i]);
  if (grad)
    for (size_t i = 0; i < count; ++i) grad[i] += 2.0 * v[i];
  return s;
}

} // namespace elastorec
