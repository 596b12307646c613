#include "elastorec/metrics.hpp"

#include <cmath>

namespace elastorec {

double nrmse(const cd* x, const cd* ref, size_t n) {
  double err = 0.0, sig = 0.0;
  for (size_t i = 0; i < n; ++i) {
    err += std::norm(ref[i] - x[i]);
    sig += std::norm(ref[i]);
  }
  require(sig > 0.0, "nrmse: zero reference");
  return std::sqrt(err / sig);
}

SeriesError series_nrmse(const ImageSeries& x, const ImageSeries& ref) {
  require(x.T == ref.T && x.n == ref.n, "nrmse: shape mismatch");
  SeriesError out;
  for (int t = 0; t < x.T; ++t)
    out.per_rep.push_back(nrmse(x.rep(t), ref.rep(t), x.npix()));
  out.aggregate = nrmse(x.data.data(), ref.data.data(), x.data.size());
  return out;
}

} // namespace elastorec
