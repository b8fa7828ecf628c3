#pragma once

// Riesz purification: project an approximate projection symbol back onto an
// exact-to-order idempotent by integrating its own resolvent around the
// eigenvalue 1. Unlike the band projection, the spectrum of pi is {0, 1} up
// to the defect, so a fixed circle |z - 1| = 1/2 works and no kinetic shift
// is needed: nodes are plain symbol series inverted order by order.

#include "mbo/superadiabatic/projection.hpp"

namespace mbo {

// Star-inverse of s = pi - z for a single fixed z, order by order. The order
// zero inverts pointwise; each higher order solves the triangular relation
// (s # v)_j = 0 from below.
inline HSeries<PolySymbol> star_inverse_at(const HSeries<PolySymbol>& s, int N, int dim,
                                           double min_sv, const std::string& what) {
  const PolySymbol& s0 = s.c[0];
  require(s0.terms().size() == 1 && s0.term(PolySymbol::Key(dim, 0)) != nullptr,
          errkind::assertion, "star inverse expects a xi-free leading symbol");
  MatrixField s0inv = s0.term(PolySymbol::Key(dim, 0))->inverse_checked(min_sv, what);
  PolySymbol s0inv_sym = PolySymbol::from_field(s0inv, s0.xi_range());

  std::vector<detail::DerivCache<PolySymbol>> ds;
  for (const auto& c : s.c) ds.emplace_back(c, dim);

  HSeries<PolySymbol> v;
  v.c.push_back(s0inv_sym);
  std::vector<detail::DerivCache<PolySymbol>> dv;
  dv.emplace_back(v.c[0], dim);

  PolySymbol probe = PolySymbol::mult(s.c[0], v.c[0]);
  for (int j = 1; j <= N; ++j) {
    PolySymbol rest = probe.zeros_like();
    for (int k = 0; k <= j; ++k)
      for (int l = 0; l + k <= j; ++l) {
        int m = j - k - l;
        if (m == j && k == 0 && l == 0) continue;  // the unknown v_j itself
        if (m >= int(v.c.size())) continue;
        if (l > s.order()) continue;
        rest = rest + moyal_term(ds[l], dv[m], k, dim, probe);
      }
    // 0 = (s # v)_j = v_j s0 + rest, so v_j = -rest s0^{-1}
    PolySymbol vj = cplx(-1.0, 0.0) * PolySymbol::mult(rest, s0inv_sym);
    v.c.push_back(vj);
    dv.emplace_back(v.c.back(), dim);
  }
  return v;
}

struct PurifyDiagnostics {
  double pre_defect = 0.0;   // sup over orders of |pi # pi - pi| on entry
  double post_defect = 0.0;  // same measure for the purified output
  double quad_err = 0.0;     // node-doubling check of the z quadrature
};

// Purified projection pi' = (i/2pi) int_{|z-1|=1/2} (pi - z)^{-#} dz. The
// input must already be close to idempotent (precondition 0.1) or the circle
// does not separate the spectrum and the result is meaningless.
inline HSeries<PolySymbol> riesz_purify(const HSeries<PolySymbol>& pi, int N, int base_nodes = 32,
                                        PurifyDiagnostics* diag = nullptr) {
  int dim = pi.c[0].dim();
  HSeries<PolySymbol> pin = truncate(pi, N);
  HSeries<PolySymbol> idem = moyal_product(pin, pin, N, dim) - pin;
  double pre = 0.0;
  for (const auto& c : idem.c) pre = std::max(pre, c.norm_sup());
  require(pre <= 0.1, errkind::numerical,
          "purification precondition violated: idempotency defect " + std::to_string(pre));

  Contour ct{1.0, 0.5, 2 * base_nodes};
  std::vector<HSeries<PolySymbol>> v_nodes;
  v_nodes.reserve(ct.nodes);
  for (int m = 0; m < ct.nodes; ++m) {
    HSeries<PolySymbol> s = pin;
    PolySymbol zsym = s.c[0].identity_like();
    s.c[0] = s.c[0] - ct.point(m) * zsym;
    v_nodes.push_back(star_inverse_at(s, N, dim, 1e-6, "purification resolvent"));
  }

  HSeries<PolySymbol> out;
  double quad_err = 0.0;
  for (int j = 0; j <= N; ++j) {
    PolySymbol full = pin.c[0].zeros_like();
    PolySymbol half = full;
    for (int m = 0; m < ct.nodes; ++m) {
      cplx wgt = iu * ct.tangent(m) / double(ct.nodes);
      full = full + wgt * v_nodes[m].c[j];
      if (m % 2 == 0) half = half + (2.0 * wgt) * v_nodes[m].c[j];
    }
    quad_err = std::max(quad_err, (full - half).norm_sup());
    PolySymbol sym = hermitize(full);
    sym.prune(1e-14);
    out.c.push_back(std::move(sym));
  }

  HSeries<PolySymbol> idem2 = moyal_product(out, out, N, dim) - out;
  double post = 0.0;
  for (const auto& c : idem2.c) post = std::max(post, c.norm_sup());
  if (diag) *diag = PurifyDiagnostics{pre, post, quad_err};
  return out;
}

}  // namespace mbo
