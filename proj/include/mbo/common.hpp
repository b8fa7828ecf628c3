#pragma once

// Shared aliases, error handling, and small numeric helpers used across the
// library. Error kinds map onto the driver's exit codes: assertion failures
// exit 1, configuration problems exit 2, numerical preconditions exit 3.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>
#include <cmath>
#include <functional>

namespace mbo {

using cplx = std::complex<double>;
inline constexpr cplx iu{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

inline const char* version_string() { return "magneto-bo 1.0.0"; }

enum class errkind { assertion = 1, config = 2, numerical = 3 };

class error : public std::runtime_error {
public:
  error(errkind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  errkind kind;
  int exit_code() const { return static_cast<int>(kind); }
};

inline void require(bool ok, errkind k, const std::string& msg) {
  if (!ok) throw error(k, msg);
}

// ---------------------------------------------------------------------------
// Multi-index helpers (exponent vectors for x- or xi-monomials).

using multi_index = std::vector<int>;

inline int mi_abs(const multi_index& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double mi_factorial(const multi_index& a) {
  double f = 1.0;
  for (int v : a) f *= factorial(v);
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// Enumerate all multi-indices of dimension d with |alpha| == total.
inline void enumerate_multi_indices(int d, int total,
                                    const std::function<void(const multi_index&)>& fn) {
  multi_index cur(d, 0);
  std::function<void(int, int)> rec = [&](int axis, int rem) {
    if (axis == d - 1) {
      cur[axis] = rem;
      fn(cur);
      return;
    }
    for (int v = 0; v <= rem; ++v) {
      cur[axis] = v;
      rec(axis + 1, rem - v);
    }
  };
  if (d == 0) {
    if (total == 0) fn(cur);
    return;
  }
  rec(0, total);
}

// ---------------------------------------------------------------------------
// Deterministic helpers.

// Least-squares slope of y against x. Returns {slope, intercept}.
inline std::pair<double, double> linear_fit(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, errkind::assertion,
          "linear_fit needs at least two points");
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

// FNV-1a 64-bit hash, used to fingerprint resolved configurations.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Minimal deterministic parallel map: splits [0,n) into contiguous slots, one
// per worker; reductions stay with the caller, who combines slot results in
// index order. With threads == 1 this is a plain loop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace mbo

#include <thread>

namespace mbo {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t nw = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    std::size_t lo = n * w / nw, hi = n * (w + 1) / nw;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mbo
