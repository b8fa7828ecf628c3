#pragma once

// Center-of-mass and gauge transformation of the two-particle magnetic
// Hamiltonian, carried out on coefficient vectors rather than transcribed
// from any closed-form display. Each covariant momentum is a linear form in
// the four planar generators
//
//   G = (D_x, D_y, A(x), A(y)),     A(v) = b R v,  R = [[0,-1],[1,0]],
//
// and the substitutions (center-of-mass change of variables, multiplication
// by the gauge factor exp(-i e A(x).y)) act linearly on those coefficients.
// The Hamiltonian becomes an exact quadratic form in G, which both the
// reference propagator (numeric coefficients) and the symbol assembly
// (coefficients as truncated polynomials in h) consume. Because A is linear
// and divergence-free, symmetrized generator products need no ordering
// corrections.
//
// The scalar type T is double for numeric work or HPoly for the h-graded
// symbol expansion; the derivation code is shared.

#include <array>

#include "mbo/common.hpp"

namespace mbo {

// Physical data of the desk-scale pair system (one electron, one nucleus).
struct PairPhysics {
  double h = 0.3;      // mass ratio; nuclear mass m = 1/h^2 - 1, electron mass 1
  double b = 1.0;      // field gradient in A(v) = b R v (field strength 2b)
  double e_el = -1.0;  // electron charge
  double e_nuc = 1.0;  // nuclear charge
  bool gauged = true;  // work in the gauge-transformed representation

  double nuclear_mass() const { return 1.0 / (h * h) - 1.0; }
  double total_charge() const { return e_el + e_nuc; }
  bool neutral() const { return std::abs(total_charge()) < 1e-14; }
};

// Truncated polynomial in h (degree < 8); enough for the h^2-accurate symbol
// assembly, which divides by up to h^2 after grading.
struct HPoly {
  std::array<double, 8> c{};

  static HPoly constant(double v) {
    HPoly p;
    p.c[0] = v;
    return p;
  }
  static HPoly power(double v, int deg) {
    HPoly p;
    p.c[deg] = v;
    return p;
  }

  HPoly operator+(const HPoly& o) const {
    HPoly r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  HPoly operator-(const HPoly& o) const {
    HPoly r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  HPoly operator*(const HPoly& o) const {
    HPoly r;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; i + j < 8; ++j) r.c[i + j] += c[i] * o.c[j];
    return r;
  }
  HPoly operator*(double s) const {
    HPoly r;
    for (int i = 0; i < 8; ++i) r.c[i] = c[i] * s;
    return r;
  }

  // Exact division by h^k: the lower coefficients must vanish.
  HPoly shift_down(int k) const {
    for (int i = 0; i < k; ++i)
      require(std::abs(c[i]) < 1e-13, errkind::assertion,
              "h-grading: coefficient not divisible by h^" + std::to_string(k));
    HPoly r;
    for (int i = k; i < 8; ++i) r.c[i - k] = c[i];
    return r;
  }

  double at_order(int k) const { return c[k]; }
  double eval(double h) const {
    double acc = 0.0, hp = 1.0;
    for (int i = 0; i < 8; ++i) {
      acc += c[i] * hp;
      hp *= h;
    }
    return acc;
  }
};

// Scalar-parameter pack for the shared derivation.
template <class T>
struct FrameScalars {
  T h2;     // h^2
  T inv_m;  // 1/m = h^2/(1-h^2)
  T one;
};

inline FrameScalars<double> numeric_scalars(const PairPhysics& ph) {
  double h2 = ph.h * ph.h;
  return {h2, h2 / (1.0 - h2), 1.0};
}

// Polynomial scalars: 1/m expanded as h^2 + h^4 + h^6 (truncation far beyond
// the h^2 accuracy the symbol series keeps).
inline FrameScalars<HPoly> symbolic_scalars() {
  FrameScalars<HPoly> s;
  s.h2 = HPoly::power(1.0, 2);
  s.inv_m = HPoly::power(1.0, 2) + HPoly::power(1.0, 4) + HPoly::power(1.0, 6);
  s.one = HPoly::constant(1.0);
  return s;
}

// W = dx D_x + dy D_y + ax A(x) + ay A(y) (per planar component).
template <class T>
struct LinForm {
  T dx, dy, ax, ay;
};

// Lab-frame covariant momenta rewritten in center-of-mass coordinates
// x = (m x1 + x2)/(m+1), y = x2 - x1:
//   D_{x1} = (1-h^2) D_x - D_y,   D_{x2} = h^2 D_x + D_y,
//   A(x1) = A(x) - h^2 A(y),      A(x2) = A(x) + (1-h^2) A(y).
template <class T>
LinForm<T> com_nuclear_momentum(const FrameScalars<T>& s, double e_nuc) {
  return LinForm<T>{s.one - s.h2, s.one * (-1.0), s.one * (-e_nuc), s.h2 * e_nuc};
}

template <class T>
LinForm<T> com_electron_momentum(const FrameScalars<T>& s, double e_el) {
  return LinForm<T>{s.h2, s.one, s.one * (-e_el), (s.one - s.h2) * (-e_el)};
}

// Conjugation by exp(-i e_el A(x).y):  D_x -> D_x - e_el A(y),
// D_y -> D_y + e_el A(x), pure A-terms unchanged.
template <class T>
LinForm<T> gauge_transform(const LinForm<T>& w, double e_el) {
  LinForm<T> out = w;
  out.ay = out.ay + w.dx * (-e_el);
  out.ax = out.ax + w.dy * e_el;
  return out;
}

// Symmetric quadratic form over the generator basis (D_x, D_y, A(x), A(y)).
template <class T>
struct QuadForm {
  std::array<std::array<T, 4>, 4> q{};

  void add_square(const LinForm<T>& w, const T& weight) {
    std::array<T, 4> c{w.dx, w.dy, w.ax, w.ay};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q[i][j] = q[i][j] + weight * c[i] * c[j];
  }

  // Total coefficient of the symmetrized product G_i . G_j (i != j sums both
  // triangles; the diagonal is the plain square's coefficient).
  T at(int i, int j) const { return (i == j) ? q[i][j] : q[i][j] + q[j][i]; }
};

template <>
inline void QuadForm<double>::add_square(const LinForm<double>& w, const double& weight) {
  std::array<double, 4> c{w.dx, w.dy, w.ax, w.ay};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) q[i][j] += weight * c[i] * c[j];
}

// Kinetic + magnetic part of the transformed Hamiltonian (potentials handled
// separately): (1/m) W1^2 + W2^2.
template <class T>
QuadForm<T> pair_quadratic_form(const FrameScalars<T>& s, double e_nuc, double e_el,
                                bool gauged) {
  LinForm<T> w1 = com_nuclear_momentum(s, e_nuc);
  LinForm<T> w2 = com_electron_momentum(s, e_el);
  if (gauged) {
    w1 = gauge_transform(w1, e_el);
    w2 = gauge_transform(w2, e_el);
  }
  QuadForm<T> qf{};
  qf.add_square(w1, s.inv_m);
  qf.add_square(w2, s.one);
  return qf;
}

inline QuadForm<double> pair_quadratic_form(const PairPhysics& ph) {
  return pair_quadratic_form(numeric_scalars(ph), ph.e_nuc, ph.e_el, ph.gauged);
}

inline QuadForm<HPoly> pair_quadratic_form_symbolic(const PairPhysics& ph) {
  return pair_quadratic_form(symbolic_scalars(), ph.e_nuc, ph.e_el, ph.gauged);
}

// Generator indices for readability.
enum : int { G_DX = 0, G_DY = 1, G_AX = 2, G_AY = 3 };

// Translation invariance in x holds when no x-dependent field survives.
inline bool x_coupling_free(const QuadForm<double>& qf) {
  return std::abs(qf.at(G_DX, G_AX)) < 1e-14 && std::abs(qf.at(G_DY, G_AX)) < 1e-14 &&
         std::abs(qf.at(G_AX, G_AX)) < 1e-14 && std::abs(qf.at(G_AX, G_AY)) < 1e-14;
}

}  // namespace mbo
