#include "elastorec/wavestiff.hpp"

#include <algorithm>
#include <cmath>

#include "elastorec/fftutil.hpp"

namespace elastorec {

namespace {

double wrap_pi(double x) {
  x = std::fmod(x + M_PI, 2.0 * M_PI);
  if (x <= 0.0) x += 2.0 * M_PI;
  return x - M_PI; // (-pi, pi]
}

// DCT-based spectral Laplacian (grid units); inv applies the pseudo-inverse
// with the DC mode zeroed.
std::vector<double> spectral_laplacian(const std::vector<double>& f, int n,
                                       bool inv) {
  std::vector<double> spec((size_t)n * n), out((size_t)n * n);
  fftu::dct2(n, f.data(), spec.data());
  for (int qy = 0; qy < n; ++qy) {
    double ly = M_PI * qy / n;
    for (int qx = 0; qx < n; ++qx) {
      double lx = M_PI * qx / n;
      double lam = -(lx * lx + ly * ly);
      size_t p = (size_t)qy * n + qx;
      if (inv)
        spec[p] = (qx == 0 && qy == 0) ? 0.0 : spec[p] / lam;
      else
        spec[p] *= lam;
    }
  }
  fftu::idct2(n, spec.data(), out.data());
  double norm = 1.0 / (4.0 * n * n);
  for (double& v : out) v *= norm;
  return out;
}

double lower_median(std::vector<double> v) {
  require(!v.empty(), "median of empty set");
  size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

} // namespace

WrappedPhaseSet phase_difference(const ImageSeries& series, int D, int P) {
  require(series.T == D * 2 * P, "phase_difference: T != D*2*P");
  WrappedPhaseSet out;
  out.n = series.n;
  out.D = D;
  out.P = P;
  out.phi.resize((size_t)D * P);
  const size_t npix = series.npix();
  for (int d = 0; d < D; ++d) {
    for (int p = 0; p < P; ++p) {
      const cd* pos = series.rep(rep_encode(d, +1, p, P));
      const cd* neg = series.rep(rep_encode(d, -1, p, P));
      auto& phi = out.at(d, p);
      phi.resize(npix);
      for (size_t q = 0; q < npix; ++q)
        phi[q] = 0.5 * std::arg(pos[q] * std::conj(neg[q]));
    }
  }
  return out;
}

std::vector<double> remove_bulk(const std::vector<double>& phi, int n) {
  const size_t npix = (size_t)n * n;
  CVec w(npix), W(npix), lowspec(npix, cd(0.0, 0.0)), low(npix);
  for (size_t p = 0; p < npix; ++p) w[p] = cd(std::cos(phi[p]), std::sin(phi[p]));
  fftu::fft2(n, w.data(), W.data(), -1);
  for (int qy : {-1, 0, 1})
    for (int qx : {-1, 0, 1}) {
      int iy = (qy + n) % n, ix = (qx + n) % n;
      lowspec[(size_t)iy * n + ix] = W[(size_t)iy * n + ix];
    }
  fftu::fft2(n, lowspec.data(), low.data(), +1);
  std::vector<double> out(npix);
  for (size_t p = 0; p < npix; ++p) {
    double beta = std::abs(low[p]) > 1e-12 ? std::arg(low[p]) : 0.0;
    out[p] = wrap_pi(phi[p] - beta);
  }
  return out;
}

std::vector<double> unwrap_laplacian(const std::vector<double>& phi, int n,
                                     const std::vector<uint8_t>* mask) {
  const size_t npix = (size_t)n * n;
  std::vector<double> s(npix), c(npix);
  for (size_t p = 0; p < npix; ++p) {
    s[p] = std::sin(phi[p]);
    c[p] = std::cos(phi[p]);
  }
  std::vector<double> Ls = spectral_laplacian(s, n, false);
  std::vector<double> Lc = spectral_laplacian(c, n, false);
  std::vector<double> rhs(npix);
  for (size_t p = 0; p < npix; ++p) rhs[p] = c[p] * Ls[p] - s[p] * Lc[p];
  std::vector<double> est = spectral_laplacian(rhs, n, true);

  // realign the indeterminate constant, then snap to the input branch
  cd acc(0.0, 0.0);
  size_t cnt = 0;
  for (size_t p = 0; p < npix; ++p) {
    if (mask && !(*mask)[p]) continue;
    double d = phi[p] - est[p];
    acc += cd(std::cos(d), std::sin(d));
    ++cnt;
  }
  double delta = cnt ? std::arg(acc) : 0.0;
  double ksum = 0.0;
  cnt = 0;
  for (size_t p = 0; p < npix; ++p) {
    if (mask && !(*mask)[p]) continue;
    ksum += (phi[p] - est[p] - delta) / (2.0 * M_PI);
    ++cnt;
  }
  double shift = delta + 2.0 * M_PI * std::round(cnt ? ksum / cnt : 0.0);
  std::vector<double> out(npix);
  for (size_t p = 0; p < npix; ++p) {
    double e = est[p] + shift;
    out[p] = phi[p] + 2.0 * M_PI * std::round((e - phi[p]) / (2.0 * M_PI));
  }
  return out;
}

HarmonicField harmonic_extract(const std::vector<std::vector<double>>& phi,
                               int n, int D, int P, double gamma_enc,
                               double dx) {
  require(P >= 3, "harmonic_extract: need P >= 3");
  require((int)phi.size() == D * P, "harmonic_extract: D*P phase maps");
  HarmonicField out;
  out.n = n;
  out.dx = dx;
  out.u.assign(D, CVec((size_t)n * n, cd(0.0, 0.0)));
  const double scale = 2.0 / (P * gamma_enc);
  for (int d = 0; d < D; ++d) {
    for (int p = 0; p < P; ++p) {
      double a = 2.0 * M_PI * p / P;
      cd rot(std::cos(a), std::sin(a)); // e^{+i 2 pi p / P}
      const auto& m = phi[(size_t)d * P + p];
      for (size_t q = 0; q < m.size(); ++q) out.u[d][q] += scale * m[q] * rot;
    }
  }
  return out;
}

void butterworth_lowpass(CVec& field, int n, double dx, double cutoff_per_m,
                         int order, bool cutoff_in_rad_per_m) {
  const size_t npix = (size_t)n * n;
  double kc = cutoff_in_rad_per_m ? cutoff_per_m / (2.0 * M_PI) : cutoff_per_m;
  CVec spec(npix);
  fftu::fft2(n, field.data(), spec.data(), -1);
  for (int qy = 0; qy < n; ++qy) {
    int fy = qy <= n / 2 ? qy : qy - n;
    for (int qx = 0; qx < n; ++qx) {
      int fx = qx <= n / 2 ? qx : qx - n;
      double k = std::hypot(fx, fy) / (n * dx); // cycles/m
      double gain = 1.0 / std::sqrt(1.0 + std::pow(k / kc, 2.0 * order));
      spec[(size_t)qy * n + qx] *= gain;
    }
  }
  fftu::fft2(n, spec.data(), field.data(), +1);
  double norm = 1.0 / npix;
  for (cd& v : field) v *= norm;
}

ModulusMap invert_aide_fields(const std::vector<CVec>& u,
                              const std::vector<CVec>& lap, int n,
                              double omega, double density) {
  require(!u.empty() && u.size() == lap.size(), "invert: field mismatch");
  const size_t npix = (size_t)n * n;
  std::vector<double> den(npix, 0.0);
  CVec num(npix, cd(0.0, 0.0));
  for (size_t d = 0; d < u.size(); ++d)
    for (size_t p = 0; p < npix; ++p) {
      num[p] += std::conj(lap[d][p]) * u[d][p];
      den[p] += std::norm(lap[d][p]);
    }
  std::vector<double> dpos;
  dpos.reserve(npix);
  for (double v : den)
    if (v > 0.0) dpos.push_back(v);
  require(!dpos.empty(), "invert: Laplacian vanishes everywhere");
  double floor = 1e-6 * lower_median(dpos);

  ModulusMap out;
  out.n = n;
  out.Gstar.assign(npix, cd(0.0, 0.0));
  out.valid.assign(npix, 0);
  size_t nvalid = 0;
  for (size_t p = 0; p < npix; ++p) {
    if (den[p] < floor) continue;
    cd g = -density * omega * omega * num[p] / den[p];
    if (g.real() < 0.0) g = cd(0.0, g.imag());
    out.Gstar[p] = g;
    out.valid[p] = 1;
    ++nvalid;
  }
  require(nvalid > 0, "invert: all voxels below the Laplacian floor");
  return out;
}

ModulusMap invert_aide(const HarmonicField& field, double omega,
                       double density) {
  const int n = field.n;
  const double inv_dx2 = 1.0 / (field.dx * field.dx);
  std::vector<CVec> lap(field.u.size(), CVec((size_t)n * n, cd(0.0, 0.0)));
  for (size_t d = 0; d < field.u.size(); ++d) {
    const CVec& u = field.u[d];
    for (int y = 1; y < n - 1; ++y)
      for (int x = 1; x < n - 1; ++x) {
        size_t p = (size_t)y * n + x;
        lap[d][p] = (u[p - 1] + u[p + 1] + u[p - n] + u[p + n] - 4.0 * u[p]) *
                    inv_dx2;
      }
  }
  ModulusMap out = invert_aide_fields(field.u, lap, n, omega, density);
  // the stencil is undefined on the boundary ring
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (y == 0 || x == 0 || y == n - 1 || x == n - 1) {
        out.valid[(size_t)y * n + x] = 0;
        out.Gstar[(size_t)y * n + x] = cd(0.0, 0.0);
      }
  return out;
}

std::vector<double> stiffness(const ModulusMap& g) {
  std::vector<double> mu(g.Gstar.size(), 0.0);
  for (size_t p = 0; p < mu.size(); ++p) {
    if (!g.valid[p]) continue;
    double mag = std::abs(g.Gstar[p]);
    double denom = g.Gstar[p].real() + mag;
    if (denom <= 0.0) continue;
    mu[p] = 2.0 * mag * mag / denom;
  }
  return mu;
}

double median_stiffness(const std::vector<double>& mu,
                        const std::vector<uint8_t>& mask) {
  std::vector<double> vals;
  for (size_t p = 0; p < mu.size(); ++p)
    if (mask[p]) vals.push_back(mu[p]);
  require(!vals.empty(), "median_stiffness: empty mask");
  return lower_median(vals);
}

std::vector<double> median_filter(const std::vector<double>& mu, int n,
                                  int window) {
  require(window >= 1 && window % 2 == 1, "median_filter: odd window");
  int h = window / 2;
  std::vector<double> out((size_t)n * n);
  std::vector<double> box;
  box.reserve((size_t)window * window);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      box.clear();
      for (int dy = -h; dy <= h; ++dy)
        for (int dx = -h; dx <= h; ++dx) {
          int yy = std::clamp(y + dy, 0, n - 1);
          int xx = std::clamp(x + dx, 0, n - 1);
          box.push_back(mu[(size_t)yy * n + xx]);
        }
      out[(size_t)y * n + x] = lower_median(box);
    }
  return out;
}

} // namespace elastorec
