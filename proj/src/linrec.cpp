#include "elastorec/linrec.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "elastorec/nufft.hpp"
#include "elastorec/rng.hpp"
#include "elastorec/sense.hpp"

namespace elastorec {

namespace {

double norm2(const CVec& v) {
  double s = 0.0;
  for (const cd& z : v) s += std::norm(z);
  return std::sqrt(s);
}

cd dot(const CVec& a, const CVec& b) {
  cd s(0.0, 0.0);
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// CG on the (SPD) normal equations. The residual 2-norm is not monotone in
// CG, so the best iterate by residual norm is kept and returned; five
// consecutive residual increases are treated as divergence.
CVec run_cg(const std::function<void(const CVec&, CVec&)>& apply,
            const CVec& b, int max_iter, double tol, CGReport* report) {
  const size_t N = b.size();
  CVec x(N, cd(0.0, 0.0)), r = b, p = r, Ap(N);
  CVec best = x;
  double bnorm = norm2(b);
  if (report) {
    report->residuals.clear();
    report->diverged = false;
  }
  if (bnorm == 0.0) return x;
  double rr = dot(r, r).real();
  double best_res = std::sqrt(rr);
  if (report) report->residuals.push_back(best_res);
  int bad = 0;
  int it = 0;
  double prev_res = best_res;
  for (; it < max_iter; ++it) {
    apply(p, Ap);
    double pAp = dot(p, Ap).real();
    if (pAp <= 0.0 || !std::isfinite(pAp)) {
      if (report) report->diverged = pAp < 0.0 || !std::isfinite(pAp);
      break;
    }
    double alpha = rr / pAp;
    for (size_t i = 0; i < N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    double rr_new = dot(r, r).real();
    double res = std::sqrt(rr_new);
    if (res < best_res) {
      best_res = res;
      best = x;
      if (report) report->residuals.push_back(res);
    }
    bad = res >= prev_res ? bad + 1 : 0;
    prev_res = res;
    if (bad >= 5) {
      ++it;
      if (report) report->diverged = true;
      break;
    }
    if (res / bnorm < tol) {
      ++it;
      break;
    }
    double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < N; ++i) p[i] = r[i] + beta * p[i];
  }
  if (report) report->iterations = it;
  return best;
}

struct NavSetup {
  Grid navgrid;
  NufftPlan plan;                      // over the center samples
  std::vector<double> dcf;             // per center sample
  std::vector<int> center_pos;         // full index -> center pos, -1
  std::vector<std::vector<int>> ridx;  // per rep: center positions retained
  std::vector<std::vector<int>> rdata; // per rep: offsets into rep data
};

NavSetup build_nav(const KSpaceSet& ks, const Grid& grid,
                   double center_radius) {
  if (center_radius <= 0.0) center_radius = grid.kmax() / 8.0;
  NavSetup nav{{16, grid.fov}, {}, {}, {}, {}, {}};
  const Trajectory& traj = ks.traj;
  const int M = traj.size();
  std::vector<double> kx, ky;
  nav.center_pos.assign(M, -1);
  for (int m = 0; m < M; ++m) {
    if (std::hypot(traj.kx[m], traj.ky[m]) <= center_radius) {
      nav.center_pos[m] = (int)kx.size();
      kx.push_back(traj.kx[m]);
      ky.push_back(traj.ky[m]);
      nav.dcf.push_back(traj.dcf.empty() ? 1.0 : traj.dcf[m]);
    }
  }
  require(!kx.empty(), "temporal_basis: no samples within center radius");
  nav.plan = NufftPlan(nav.navgrid, kx, ky);
  nav.ridx.resize(ks.T);
  nav.rdata.resize(ks.T);
  for (int t = 0; t < ks.T; ++t) {
    auto full = ks.full_indices(t);
    for (size_t j = 0; j < full.size(); ++j) {
      int pos = nav.center_pos[full[j]];
      if (pos >= 0) {
        nav.ridx[t].push_back(pos);
        nav.rdata[t].push_back((int)j);
      }
    }
  }
  return nav;
}

// Casorati matrix of per-coil navigator images: rows (voxel, coil), cols T.
Eigen::MatrixXcd nav_casorati(const KSpaceSet& ks, const NavSetup& nav) {
  const size_t npix = (size_t)nav.navgrid.n * nav.navgrid.n;
  Eigen::MatrixXcd cas(npix * ks.C, ks.T);
  CVec img(npix);
  for (int t = 0; t < ks.T; ++t) {
    const auto& idx = nav.ridx[t];
    std::vector<cd> vals(idx.size());
    std::vector<double> w(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) w[j] = nav.dcf[idx[j]];
    for (int i = 0; i < ks.C; ++i) {
      const cd* d = ks.at(t, i);
      for (size_t j = 0; j < idx.size(); ++j) vals[j] = d[nav.rdata[t][j]];
      nav.plan.adjoint(vals.data(), img.data(), idx.data(), (int)idx.size(),
                       w.data());
      for (size_t p = 0; p < npix; ++p) cas((size_t)i * npix + p, t) = img[p];
    }
  }
  return cas;
}

} // namespace

ImageSeries cg_sense(const KSpaceSet& ks, const CoilSet& coils,
                     const Grid& grid, const CGOptions& opt,
                     std::vector<CGReport>* reports) {
  NufftPlan plan(grid, ks.traj.kx, ks.traj.ky);
  const size_t npix = (size_t)grid.n * grid.n;
  ImageSeries out(ks.T, grid.n);
  if (reports) reports->assign(ks.T, {});
  const int m = ks.samples_per_rep();
  for (int t = 0; t < ks.T; ++t) {
    auto idx = ks.full_indices(t);
    CVec b(npix);
    sense_adjoint(ks.at(t, 0), coils, plan, b.data(), idx.data(), m);
    CVec scratch((size_t)coils.C * m);
    auto normal_op = [&](const CVec& x, CVec& y) {
      sense_forward(x.data(), coils, plan, scratch.data(), idx.data(), m);
      sense_adjoint(scratch.data(), coils, plan, y.data(), idx.data(), m);
    };
    CVec x = run_cg(normal_op, b, opt.max_iter, opt.tol,
                    reports ? &(*reports)[t] : nullptr);
    std::copy(x.begin(), x.end(), out.rep(t));
  }
  return out;
}

std::vector<double> navigator_singular_values(const KSpaceSet& ks,
                                              const Grid& grid,
                                              double center_radius) {
  NavSetup nav = build_nav(ks, grid, center_radius);
  Eigen::MatrixXcd cas = nav_casorati(ks, nav);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(cas);
  std::vector<double> out(svd.singularValues().data(),
                          svd.singularValues().data() +
                              svd.singularValues().size());
  return out;
}

LatentMatrix temporal_basis(const KSpaceSet& ks, const Grid& grid, int L,
                            double center_radius, bool energy_weighted) {
  require(L >= 1 && L <= ks.T, "temporal_basis: need 1 <= L <= T");
  NavSetup nav = build_nav(ks, grid, center_radius);
  for (int t = 0; t < ks.T; ++t)
    require((int)nav.ridx[t].size() >= L,
            "temporal_basis: repetition has fewer center samples than L");
  Eigen::MatrixXcd cas = nav_casorati(ks, nav);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(cas, Eigen::ComputeThinV);
  require(svd.rank() >= L || svd.singularValues()(L - 1) > 0.0,
          "temporal_basis: requested rank not available");
  LatentMatrix out;
  out.T = ks.T;
  out.L = L;
  out.V.resize((size_t)ks.T * L);
  // rows are expansion coefficients: column t of the Casorati matrix is
  // U Sigma conj(V(t,:)), so rho_t = U_spatial v_t with v_t as below
  for (int t = 0; t < ks.T; ++t)
    for (int l = 0; l < L; ++l)
      out.at(t, l) = std::conj(svd.matrixV()(t, l)) *
                     (energy_weighted ? svd.singularValues()(l) : 1.0);
  return out;
}

std::pair<SpatialCoeffs, ImageSeries> subspace_recon(
    const KSpaceSet& ks, const CoilSet& coils, const Grid& grid,
    const LatentMatrix& V, double lambda_tik, int max_iter,
    CGReport* report) {
  require(V.T == ks.T, "subspace: basis/data repetition mismatch");
  const int L = V.L;
  const size_t npix = (size_t)grid.n * grid.n;
  NufftPlan plan(grid, ks.traj.kx, ks.traj.ky);
  const int m = ks.samples_per_rep();
  std::vector<std::vector<int>> idx(ks.T);
  for (int t = 0; t < ks.T; ++t) idx[t] = ks.full_indices(t);

  // rho_t = U v_t, solved in the column-normalized variable u_l = U_l |v^l|
  // as a diagonal preconditioner; the Tikhonov penalty lambda ||U||^2 then
  // becomes lambda / |v^l|^2 per column, so weak (energy-weighted) basis
  // directions are damped hard instead of letting CG fit aliasing through
  // them. The minimizer is identical to the unpreconditioned problem.
  std::vector<double> colnorm(L, 0.0);
  for (int t = 0; t < ks.T; ++t)
    for (int l = 0; l < L; ++l) colnorm[l] += std::norm(V.at(t, l));
  for (int l = 0; l < L; ++l) {
    colnorm[l] = std::sqrt(colnorm[l]);
    require(colnorm[l] > 0.0, "subspace: basis has a zero column");
  }
  auto coeff = [&](int t, int l) { return V.at(t, l) / colnorm[l]; };

  CVec scratch((size_t)coils.C * m), img(npix), y(npix);
  auto normal_op = [&](const CVec& u, CVec& out, double lam) {
    std::fill(out.begin(), out.end(), cd(0.0, 0.0));
    for (int t = 0; t < ks.T; ++t) {
      for (size_t p = 0; p < npix; ++p) {
        cd acc(0.0, 0.0);
        for (int l = 0; l < L; ++l) acc += u[p * L + l] * coeff(t, l);
        img[p] = acc;
      }
      sense_forward(img.data(), coils, plan, scratch.data(), idx[t].data(), m);
      sense_adjoint(scratch.data(), coils, plan, y.data(), idx[t].data(), m);
      for (size_t p = 0; p < npix; ++p)
        for (int l = 0; l < L; ++l)
          out[p * L + l] += y[p] * std::conj(coeff(t, l));
    }
    if (lam > 0.0)
      for (size_t p = 0; p < npix; ++p)
        for (int l = 0; l < L; ++l)
          out[p * L + l] += lam / (colnorm[l] * colnorm[l]) * u[p * L + l];
  };

  if (lambda_tik < 0.0) {
    // power iteration for the top eigenvalue of the normal operator
    Rng rng(0x5eed1234u);
    CVec u(npix * L), w(npix * L);
    for (cd& z : u) z = rng.cgauss();
    double eig = 0.0;
    for (int it = 0; it < 8; ++it) {
      normal_op(u, w, 0.0);
      eig = norm2(w) / std::max(norm2(u), 1e-300);
      double inv = 1.0 / std::max(norm2(w), 1e-300);
      for (size_t i = 0; i < u.size(); ++i) u[i] = w[i] * inv;
    }
    lambda_tik = 1e-6 * eig;
  }

  // b = sum_t A_t^H d_t c_t^H
  CVec b(npix * L, cd(0.0, 0.0));
  for (int t = 0; t < ks.T; ++t) {
    sense_adjoint(ks.at(t, 0), coils, plan, y.data(), idx[t].data(), m);
    for (size_t p = 0; p < npix; ++p)
      for (int l = 0; l < L; ++l)
        b[p * L + l] += y[p] * std::conj(coeff(t, l));
  }

  double lam = lambda_tik;
  auto op = [&](const CVec& u, CVec& out) { normal_op(u, out, lam); };
  CVec U = run_cg(op, b, max_iter, 1e-6, report);

  SpatialCoeffs sc;
  sc.N = (int)npix;
  sc.L = L;
  sc.U = U; // back to the raw variable: U_l = u_l / |v^l|
  for (size_t p = 0; p < npix; ++p)
    for (int l = 0; l < L; ++l) sc.U[p * L + l] /= colnorm[l];
  ImageSeries series(ks.T, grid.n);
  for (int t = 0; t < ks.T; ++t) {
    cd* r = series.rep(t);
    for (size_t p = 0; p < npix; ++p) {
      cd acc(0.0, 0.0);
      for (int l = 0; l < L; ++l) acc += U[p * L + l] * coeff(t, l);
      r[p] = acc;
    }
  }
  return {std::move(sc), std::move(series)};
}

} // namespace elastorec
