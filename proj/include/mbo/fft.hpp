#pragma once

// Thin FFTW3 wrapper: cached plans keyed by shape/stride signature, all
// created with FFTW_ESTIMATE so repeated runs use identical algorithms
// (measured planning would make results machine-state dependent).

#include <fftw3.h>

#include <map>
#include <mutex>
#include <array>
#include <vector>

#include "mbo/common.hpp"

namespace mbo {

namespace detail {

struct plan_key {
  std::vector<int> dims;
  int howmany, istride, idist, sign;
  bool operator<(const plan_key& o) const {
    return std::tie(dims, howmany, istride, idist, sign) <
           std::tie(o.dims, o.howmany, o.istride, o.idist, o.sign);
  }
};

class plan_cache {
public:
  static plan_cache& instance() {
    static plan_cache c;
    return c;
  }

  // Plan for `howmany` interleaved transforms of rank dims.size(). The j-th
  // transform starts at offset j*idist; elements along each transform are
  // spaced istride apart (row-major dims with that elementary stride).
  fftw_plan get(const std::vector<int>& dims, int howmany, int istride, int idist, int sign,
                cplx* buf) {
    std::lock_guard<std::mutex> lock(mu_);
    plan_key key{dims, howmany, istride, idist, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto* fbuf = reinterpret_cast<fftw_complex*>(buf);
    fftw_plan p = fftw_plan_many_dft(int(dims.size()), dims.data(), howmany, fbuf, nullptr,
                                     istride, idist, fbuf, nullptr, istride, idist, sign,
                                     FFTW_ESTIMATE);
    require(p != nullptr, errkind::numerical, "fftw plan creation failed");
    plans_[key] = p;
    return p;
  }

private:
  std::mutex mu_;
  std::map<plan_key, fftw_plan> plans_;
};

}  // namespace detail

// In-place transform of `buf`, laid out as `howmany` interleaved row-major
// arrays of shape `dims` (element stride istride, array stride idist).
// sign: FFTW_FORWARD or FFTW_BACKWARD. Unnormalized, like FFTW itself.
inline void fft_many(cplx* buf, const std::vector<int>& dims, int howmany, int istride, int idist,
                     int sign) {
  fftw_plan p = detail::plan_cache::instance().get(dims, howmany, istride, idist, sign, buf);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf), reinterpret_cast<fftw_complex*>(buf));
}

// Full row-major rank-d transform of a single contiguous array.
inline void fft_nd(cplx* buf, const std::vector<int>& dims, int sign) {
  fft_many(buf, dims, 1, 1, 1, sign);
}

inline void scale(cplx* buf, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) buf[i] *= s;
}

// Signed wavenumber for FFT bin j of an n-point grid over a box of length L.
inline double fft_wavenumber(int j, int n, double L) {
  int jj = (j <= n / 2 - 1) ? j : j - n;
  // The n/2 bin is its own negative; derivative multipliers treat it as n/2.
  if (j == n / 2 && n % 2 == 0) jj = n / 2;
  return 2.0 * pi * jj / L;
}

// Wavenumber vector with the Nyquist bin zeroed, for use in first-derivative
// multipliers (ik with k_nyq := 0 keeps real fields' derivatives real).
inline std::vector<double> derivative_wavenumbers(int n, double L) {
  std::vector<double> k(n);
  for (int j = 0; j < n; ++j) k[j] = fft_wavenumber(j, n, L);
  if (n % 2 == 0) k[n / 2] = 0.0;
  return k;
}

// Wavenumbers for quadratic (kinetic) multipliers; the Nyquist bin keeps its
// magnitude since k^2 is unambiguous there.
inline std::vector<double> kinetic_wavenumbers(int n, double L) {
  std::vector<double> k(n);
  for (int j = 0; j < n; ++j) k[j] = fft_wavenumber(j, n, L);
  return k;
}

}  // namespace mbo
