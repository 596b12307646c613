#pragma once

#include "elastorec/core.hpp"

namespace elastorec {

// ||ref - x||_2 / ||ref||_2
double nrmse(const cd* x, const cd* ref, size_t n);

// Per-repetition NRMSE plus the aggregate over the whole stack.
struct SeriesError {
  std::vector<double> per_rep;
  double aggregate = 0.0;
};
SeriesError series_nrmse(const ImageSeries& x, const ImageSeries& ref);

} // namespace elastorec
