#pragma once

// Formal power series in the semiclassical parameter h with symbol-valued
// coefficients. The coefficient type S supplies pointwise algebra and
// phase-space derivatives:
//
//   S dx(int axis) const;        // d/dx_axis
//   S dxi(int axis) const;       // d/dxi_axis (backends with a hidden
//                                //  spectral variable fold its chain rule in)
//   static S mult(const S&, const S&);   // pointwise product, plain order
//   S adjoint() const;           // pointwise conjugate transpose
//   S zeros_like() const;  S identity_like() const;
//   double norm_sup() const;
//   operators +, -, and scalar *.

#include <vector>

#include "mbo/common.hpp"

namespace mbo {

template <class S>
struct HSeries {
  std::vector<S> c;  // c[j] multiplies h^j

  int order() const { return int(c.size()) - 1; }

  S& operator[](int j) { return c[j]; }
  const S& operator[](int j) const { return c[j]; }

  HSeries& operator+=(const HSeries& o) {
    require(c.size() == o.c.size(), errkind::assertion, "series order mismatch in +=");
    for (size_t j = 0; j < c.size(); ++j) c[j] = c[j] + o.c[j];
    return *this;
  }
  HSeries& operator-=(const HSeries& o) {
    require(c.size() == o.c.size(), errkind::assertion, "series order mismatch in -=");
    for (size_t j = 0; j < c.size(); ++j) c[j] = c[j] - o.c[j];
    return *this;
  }
  friend HSeries operator+(HSeries a, const HSeries& b) { return a += b; }
  friend HSeries operator-(HSeries a, const HSeries& b) { return a -= b; }
  friend HSeries operator*(cplx s, HSeries a) {
    for (auto& cj : a.c) cj = s * cj;
    return a;
  }
};

// Series whose h^0 coefficient is `like`'s identity and higher orders vanish.
template <class S>
HSeries<S> identity_series(const S& like, int N) {
  HSeries<S> out;
  out.c.push_back(like.identity_like());
  for (int j = 1; j <= N; ++j) out.c.push_back(like.zeros_like());
  return out;
}

template <class S>
HSeries<S> zero_series(const S& like, int N) {
  HSeries<S> out;
  for (int j = 0; j <= N; ++j) out.c.push_back(like.zeros_like());
  return out;
}

// Promote a single symbol to a series of order N (symbol at h^jth slot).
template <class S>
HSeries<S> promote(const S& s, int N, int j = 0) {
  HSeries<S> out = zero_series(s, N);
  out.c[j] = s;
  return out;
}

template <class S>
HSeries<S> truncate(const HSeries<S>& a, int N) {
  HSeries<S> out;
  for (int j = 0; j <= N && j <= a.order(); ++j) out.c.push_back(a.c[j]);
  while (out.order() < N) out.c.push_back(a.c[0].zeros_like());
  return out;
}

// Coefficient-wise conjugate transpose; h is real so orders do not mix.
template <class S>
HSeries<S> adjoint_symbol(const HSeries<S>& a) {
  HSeries<S> out;
  for (const auto& cj : a.c) out.c.push_back(cj.adjoint());
  return out;
}

// Per-order sup norms.
template <class S>
std::vector<double> series_norm(const HSeries<S>& a) {
  std::vector<double> out;
  for (const auto& cj : a.c) out.push_back(cj.norm_sup());
  return out;
}

// Numeric evaluation at a concrete h.
template <class S>
S eval_at_h(const HSeries<S>& a, double h) {
  S acc = a.c[0];
  double hj = 1.0;
  for (int j = 1; j <= a.order(); ++j) {
    hj *= h;
    acc = acc + cplx(hj, 0.0) * a.c[j];
  }
  return acc;
}

enum class Var { x, xi };

// Repeated phase-space derivative of every coefficient. The order cap keeps
// sampled backends inside their resolution budget: beyond 2N+2 derivatives the
// spectral accuracy assumptions behind the series tolerances break down.
template <class S>
HSeries<S> differentiate(const HSeries<S>& a, Var var, int axis, int order) {
  require(order >= 0, errkind::config, "differentiate: negative order");
  require(order <= 2 * a.order() + 2, errkind::config,
          "differentiate: order exceeds the 2N+2 accuracy budget");
  HSeries<S> out = a;
  for (int r = 0; r < order; ++r)
    for (auto& cj : out.c) cj = (var == Var::x) ? cj.dx(axis) : cj.dxi(axis);
  return out;
}

}  // namespace mbo
