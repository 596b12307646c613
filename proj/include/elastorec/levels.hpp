#pragma once

#include "elastorec/core.hpp"
#include "elastorec/nufft.hpp"

namespace elastorec {

// Multi-resolution machinery for the multi-level data-consistent loss.
// Level k (1-based) works on a grid of side n / 2^(K-k) and owns the k-space
// samples with |k| <= kmax * 2^(k-K); level K covers everything. Segments
// are nested by default (radial low-pass partition); the disjoint variant
// keeps only the annulus gained at each level.
struct LevelPlan {
  int K = 0;
  Grid grid; // full-resolution grid
  std::vector<Grid> lgrid;
  std::vector<NufftPlan> plans;         // per level, over that level's segment
  std::vector<std::vector<int>> seg;    // per level: full-trajectory indices
  std::vector<std::vector<int>> segpos; // full index -> position in seg[k], -1
  std::vector<CoilSet> coils;           // per level, SOS-renormalized

  int side(int k) const { return grid.n >> (K - k); } // k in 1..K
};

LevelPlan build_level_plan(const Trajectory& traj, const CoilSet& coils,
                           int K, const Grid& grid, bool nested = true);

// Block-average an n x n complex map down by an integer factor.
CVec block_average(const cd* map, int n, int factor);

} // namespace elastorec
