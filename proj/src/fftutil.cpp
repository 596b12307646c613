#include "elastorec/fftutil.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace elastorec::fftu {

namespace {

std::mutex plan_mutex;

// FFTW_ESTIMATE keeps planning deterministic; FFTW_UNALIGNED lets us execute
// on arbitrary caller buffers.
fftw_plan get_c2c_plan(int n, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lk(plan_mutex);
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cd> tmp((size_t)n * n);
  fftw_plan p = fftw_plan_dft_2d(
      n, n, reinterpret_cast<fftw_complex*>(tmp.data()),
      reinterpret_cast<fftw_complex*>(tmp.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache[key] = p;
  return p;
}

fftw_plan get_r2r_plan(int n, fftw_r2r_kind kind) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lk(plan_mutex);
  auto key = std::make_pair(n, (int)kind);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<double> tmp((size_t)n * n);
  fftw_plan p = fftw_plan_r2r_2d(n, n, tmp.data(), tmp.data(), kind, kind,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache[key] = p;
  return p;
}

} // namespace

void fft2(int n, const cd* in, cd* out, int sign) {
  fftw_plan p = get_c2c_plan(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void dct2(int n, const double* in, double* out) {
  fftw_plan p = get_r2r_plan(n, FFTW_REDFT10);
  fftw_execute_r2r(p, const_cast<double*>(in), out);
}

void idct2(int n, const double* in, double* out) {
  fftw_plan p = get_r2r_plan(n, FFTW_REDFT01);
  fftw_execute_r2r(p, const_cast<double*>(in), out);
}

} // namespace elastorec::fftu
