#include "elastorec/levels.hpp"

#include <cmath>
#include <string>

namespace elastorec {

CVec block_average(const cd* map, int n, int factor) {
  require(n % factor == 0, "block_average: size not divisible");
  int m = n / factor;
  CVec out((size_t)m * m, cd(0.0, 0.0));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      out[(size_t)(y / factor) * m + (x / factor)] += map[(size_t)y * n + x];
  double inv = 1.0 / (factor * factor);
  for (cd& v : out) v *= inv;
  return out;
}

LevelPlan build_level_plan(const Trajectory& traj, const CoilSet& coils,
                           int K, const Grid& grid, bool nested) {
  require(K >= 1, "level plan: K >= 1");
  require(grid.n % (1 << (K - 1)) == 0,
          "level plan: grid size not divisible by 2^(K-1)");
  LevelPlan lp;
  lp.K = K;
  lp.grid = grid;
  const double kmax = grid.kmax();
  const int M = traj.size();

  for (int k = 1; k <= K; ++k) {
    int nk = grid.n >> (K - k);
    Grid gk{nk, grid.fov};
    double rk = kmax * std::pow(2.0, k - K);
    double rlo = (nested || k == 1) ? -1.0 : kmax * std::pow(2.0, k - 1 - K);
    std::vector<int> idx;
    std::vector<double> kx, ky;
    std::vector<int> pos(M, -1);
    for (int m = 0; m < M; ++m) {
      double r = std::hypot(traj.kx[m], traj.ky[m]);
      if (r <= rk * (1.0 + 1e-12) && r > rlo) {
        pos[m] = (int)idx.size();
        idx.push_back(m);
        kx.push_back(traj.kx[m]);
        ky.push_back(traj.ky[m]);
      }
    }
    require(!idx.empty(), "level plan: empty k-space segment at level " +
                              std::to_string(k) + "; use a smaller K");
    lp.lgrid.push_back(gk);
    lp.plans.emplace_back(gk, kx, ky);
    lp.seg.push_back(std::move(idx));
    lp.segpos.push_back(std::move(pos));

    int factor = 1 << (K - k);
    CoilSet ck;
    ck.n = nk;
    ck.C = coils.C;
    ck.data.resize((size_t)coils.C * nk * nk);
    for (int i = 0; i < coils.C; ++i) {
      CVec small = block_average(coils.coil(i), grid.n, factor);
      std::copy(small.begin(), small.end(), ck.coil(i));
    }
    // renormalize to unit sum-of-squares on the support
    for (size_t p = 0; p < (size_t)nk * nk; ++p) {
      double sos = 0.0;
      for (int i = 0; i < coils.C; ++i) sos += std::norm(ck.coil(i)[p]);
      if (sos > 1e-20) {
        double inv = 1.0 / std::sqrt(sos);
        for (int i = 0; i < coils.C; ++i) ck.coil(i)[p] *= inv;
      }
    }
    lp.coils.push_back(std::move(ck));
  }
  return lp;
}

} // namespace elastorec
