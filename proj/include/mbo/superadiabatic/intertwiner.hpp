#pragma once

// Unitary intertwiner between the superadiabatic projection and the frozen
// band projector, and the reduced symbol it induces. The construction is the
// Kato rotation: with D = (pi0 - pi)^{#2} and the mixed product
// W ~ pi pi0 + (1 - pi)(1 - pi0), the series U = (1 - D)^{-#1/2} # W is
// star-unitary and carries pi0 to pi. Reducing p by the band frame theta then
// yields the k x k effective symbol g = (Theta U)^* ... in operator terms
// g quantizes to Theta U H U* Theta*.

#include "mbo/superadiabatic/projection.hpp"

namespace mbo {

struct EffectiveResult {
  HSeries<PolySymbol> u;       // n x n intertwiner symbol
  HSeries<PolySymbol> w;       // k x n reduction frame (operator Theta U)
  HSeries<PolySymbol> g;       // k x k effective symbol, hermitized
  double unitary_defect = 0.0;     // max over orders, both U*U and UU*
  double intertwine_defect = 0.0;  // |U P U* - P0| in symbol orders
  double frame_defect = 0.0;       // |Theta U U* Theta* - 1_k|
  double herm_defect = 0.0;        // raw hermiticity of g before symmetrizing
};

// Intertwiner series: Op(u) maps range(Op(pi)) onto range(Op(pi0)).
inline HSeries<PolySymbol> nagy_intertwiner(const HSeries<PolySymbol>& pi,
                                            const HSeries<PolySymbol>& pi0, int N, int dim) {
  HSeries<PolySymbol> dpi = truncate(pi0, N) - truncate(pi, N);
  HSeries<PolySymbol> d = moyal_product(dpi, dpi, N, dim);

  // (1 - t)^{-1/2} = sum_k binom(2k, k) / 4^k t^k, truncated; d = O(h) at
  // worst, O(h^2) when pi0 is the exact leading order, so N terms suffice.
  HSeries<PolySymbol> sigma = identity_series(pi.c[0], N);
  HSeries<PolySymbol> dpow = d;
  double coef = 1.0;
  for (int k = 1; k <= N; ++k) {
    coef *= double(2 * k - 1) / double(2 * k);  // binom(2k,k)/4^k stepwise
    sigma += cplx(coef, 0.0) * dpow;
    if (k < N) dpow = moyal_product(dpow, d, N, dim);
  }

  HSeries<PolySymbol> one = identity_series(pi.c[0], N);
  HSeries<PolySymbol> a = moyal_product(truncate(pi, N), truncate(pi0, N), N, dim);
  HSeries<PolySymbol> b =
      moyal_product(one - truncate(pi, N), one - truncate(pi0, N), N, dim);
  return moyal_product(sigma, a + b, N, dim);
}

// Full reduction: projection -> intertwiner -> band frame -> effective symbol.
// theta holds the k x n frame rows; pi0 defaults to the frozen eigenprojector
// of m0 promoted to order zero.
inline EffectiveResult effective_hamiltonian(const HSeries<PolySymbol>& p,
                                             const HSeries<PolySymbol>& pi,
                                             const MatrixField& m0, const MatrixField& theta,
                                             int band_lo, int band_hi, int N) {
  int dim = p.c[0].dim();
  MatrixField proj0 = band_eigenprojector(m0, band_lo, band_hi);
  HSeries<PolySymbol> pi0 = promote(PolySymbol::from_field(proj0, p.c[0].xi_range()), N);

  EffectiveResult res;
  res.u = nagy_intertwiner(pi, pi0, N, dim);

  HSeries<PolySymbol> uadj = adjoint_symbol(res.u);
  HSeries<PolySymbol> one = identity_series(res.u.c[0], N);
  auto max_norm = [](const HSeries<PolySymbol>& s) {
    double best = 0.0;
    for (const auto& c : s.c) best = std::max(best, c.norm_sup());
    return best;
  };
  res.unitary_defect = std::max(max_norm(moyal_product(res.u, uadj, N, dim) - one),
                                max_norm(moyal_product(uadj, res.u, N, dim) - one));
  // symbol of U P U*: reversed-composition chain u* # pi # u
  HSeries<PolySymbol> carried =
      moyal_product(moyal_product(uadj, truncate(pi, N), N, dim), res.u, N, dim);
  res.intertwine_defect = max_norm(carried - pi0);

  HSeries<PolySymbol> thetas = promote(PolySymbol::from_field(theta, p.c[0].xi_range()), N);
  res.w = moyal_product(res.u, thetas, N, dim);
  HSeries<PolySymbol> wadj = adjoint_symbol(res.w);
  PolySymbol band_probe = PolySymbol::mult(res.w.c[0], wadj.c[0]);  // k x k shape
  HSeries<PolySymbol> onek = identity_series(band_probe, N);
  res.frame_defect = max_norm(moyal_product(wadj, res.w, N, dim) - onek);

  HSeries<PolySymbol> g =
      moyal_product(moyal_product(wadj, truncate(p, N), N, dim), res.w, N, dim);
  double herm = 0.0;
  for (auto& c : g.c) {
    herm = std::max(herm, (c - c.adjoint()).norm_sup());
    c = hermitize(c);
    c.prune(1e-14);
  }
  res.herm_defect = herm;
  res.g = std::move(g);
  res.u.c[0].prune(1e-14);
  return res;
}

inline EffectiveResult effective_hamiltonian(const FiberModel& model,
                                             const HSeries<PolySymbol>& pi, int N) {
  return effective_hamiltonian(model.p, pi, model.m0, model.theta, model.band_lo, model.band_hi,
                               N);
}

}  // namespace mbo
