#pragma once

#include "elastorec/core.hpp"
#include "elastorec/levels.hpp"

namespace elastorec {

// Precomputed per-(repetition, level) view of the acquired k-space: the
// segment-local sample positions and the matching data, gathered once so the
// training loop never touches full-trajectory indexing.
struct DcSetup {
  const LevelPlan* lp = nullptr;
  int T = 0, C = 0, K = 0;
  std::vector<std::vector<int>> idx; // [t*K + k-1] positions in lp->plans[k-1]
  std::vector<CVec> data;            // [t*K + k-1], C x m_tk contiguous
  std::vector<double> norm;          // per level: sum_t m_tk * C
};

DcSetup build_dc_setup(const KSpaceSet& ks, const LevelPlan& lp);

// Multi-level data-consistency loss
//   sum_k 1/M_k sum_{t,i} | F_k S_{k,i} rho_{t,k} - d_{t,k,i} |^2
// rho is indexed [t][k-1] (the decode output per repetition). When grad is
// non-null the gradient 2/M_k S^H F^H (F S rho - d) is accumulated into the
// matching entries.
double loss_dc_multilevel(const DcSetup& dc,
                          const std::vector<std::vector<CVec>>& rho,
                          std::vector<std::vector<CVec>>* grad = nullptr);

// Magnitude similarity: sum over repetition pairs and all levels of
// || |rho_{i,k}| - |rho_{j,k}| ||_1. Subgradient of |.| at 0 is 0; the |z|
// gradient uses z/(|z|+eps), eps = 1e-12. pair_budget > 0 restricts the sum
// to a deterministic stride subset of the pair list.
double loss_magnitude(const std::vector<std::vector<CVec>>& rho, int K,
                      std::vector<std::vector<CVec>>* grad = nullptr,
                      int pair_budget = 0);

// Raw anisotropic (or isotropic) total variation of one complex map,
// forward differences without wraparound.
double tv_complex(const CVec& w, int n, bool isotropic = false,
                  CVec* grad = nullptr);

// Wave-smoothness loss: for every (direction, offset) pair build the unit
// phasor of the half-angle phase difference,
//   w = exp(i/2 angle(rho_+ conj(rho_-))),
// and penalize its total variation, summed over the D*P paired maps.
// The static phase cancels inside the conjugate product.
double loss_wave_tv(const std::vector<std::vector<CVec>>& rho, int K, int D,
                    int P, std::vector<std::vector<CVec>>* grad = nullptr,
                    bool isotropic = false);

// Latent energy sum |v|^2; gradient 2v.
double loss_latent(const cd* v, size_t count, cd* grad = nullptr);

} // namespace elastorec
