#pragma once

// Superadiabatic projection symbol. The resolvent of p - z is built order by
// order in h at contour nodes around the frozen band, then integrated to the
// projection series pi = (i/2pi) contour-int (p - z)^{-#} dz. The kinetic
// shift is absorbed by z = w + xi^2, so the order-zero resolvent is the plain
// matrix inverse (M0(x) - w)^{-1} and all xi-dependence enters through the
// higher symbol orders and the node chain rule.

#include "mbo/models/build.hpp"
#include "mbo/superadiabatic/node_symbol.hpp"
#include "mbo/symbols/moyal.hpp"

namespace mbo {

inline Contour contour_from_gap(const GapRecord& gap, int nodes) {
  require(nodes >= 4 && nodes % 2 == 0, errkind::config, "contour needs an even node count >= 4");
  return Contour{gap.center, gap.radius, nodes};
}

inline PolySymbol hermitize(const PolySymbol& s) {
  return cplx(0.5, 0.0) * (s + s.adjoint());
}

// Order-zero resolvent (M0(x) - w)^{-1} at every node. The contour keeps a
// distance of at least the gap clearance from the spectrum, which bounds the
// inverse's conditioning; min_sv guards against a misplaced contour.
inline NodeSymbol resolvent_q0(const MatrixField& m0, const Contour& ct,
                               const std::vector<std::array<double, 2>>& xi_range) {
  std::vector<PolySymbol> nodes;
  nodes.reserve(ct.nodes);
  MatrixField id = MatrixField::identity(m0.grid(), m0.rows());
  for (int m = 0; m < ct.nodes; ++m) {
    MatrixField shifted = m0;
    shifted -= ct.point(m) * id;
    MatrixField inv = shifted.inverse_checked(1e-10, "contour resolvent");
    nodes.push_back(PolySymbol::from_field(inv, xi_range));
  }
  return NodeSymbol(ct, std::move(nodes));
}

// The symbol p - z at the nodes: order zero is M0 - w (the xi^2 of p and the
// xi^2 of z cancel exactly), higher orders are the p coefficients unchanged.
inline HSeries<NodeSymbol> node_series_from_symbol(const HSeries<PolySymbol>& p,
                                                   const MatrixField& m0, const Contour& ct,
                                                   int N) {
  const PolySymbol& p0 = p.c[0];
  MatrixField id = MatrixField::identity(m0.grid(), m0.rows());
  std::vector<PolySymbol> lead;
  lead.reserve(ct.nodes);
  for (int m = 0; m < ct.nodes; ++m) {
    MatrixField shifted = m0;
    shifted -= ct.point(m) * id;
    lead.push_back(PolySymbol::from_field(shifted, p0.xi_range()));
  }
  HSeries<NodeSymbol> s;
  s.c.push_back(NodeSymbol(ct, std::move(lead)));
  for (int j = 1; j <= N; ++j) {
    if (j <= p.order())
      s.c.push_back(NodeSymbol::uniform(ct, p.c[j]));
    else
      s.c.push_back(s.c[0].zeros_like());
  }
  return s;
}

// r = 1 - (p - z) # q0, the star-product defect of the frozen resolvent.
// Its order-zero part vanishes identically; each higher order is O(h).
inline HSeries<NodeSymbol> remainder_r(const HSeries<NodeSymbol>& s, const NodeSymbol& q0,
                                       int N, int dim) {
  HSeries<NodeSymbol> q0s = promote(q0, N);
  HSeries<NodeSymbol> r = identity_series(q0, N) - moyal_product(s, q0s, N, dim);
  require(r.c[0].norm_sup() < 1e-10, errkind::assertion,
          "resolvent remainder has a nonzero leading order");
  return r;
}

// Geometric resolution q = q0 # (1 + r + r^2 + ... + r^N), giving
// (p - z) # q = 1 + O(h^{N+1}).
inline HSeries<NodeSymbol> resolvent_series(const HSeries<NodeSymbol>& s, const NodeSymbol& q0,
                                            int N, int dim) {
  HSeries<NodeSymbol> q0s = promote(q0, N);
  if (N == 0) return q0s;
  HSeries<NodeSymbol> r = remainder_r(s, q0, N, dim);
  HSeries<NodeSymbol> rsum = r;
  HSeries<NodeSymbol> rpow = r;
  for (int j = 2; j <= N; ++j) {
    rpow = moyal_product(rpow, r, N, dim);
    rsum += rpow;
  }
  return q0s + moyal_product(q0s, rsum, N, dim);
}

struct ProjectionDiagnostics {
  double quad_err = 0.0;     // doubling check: full vs half node quadrature
  double herm_defect = 0.0;  // hermiticity of the raw quadrature output
  int nodes = 0;             // nodes actually used (twice the requested base)
};

// Projection symbol series through h^N. Runs the quadrature at 2M nodes and
// requires the M-node subsample to agree to quad_tol, which certifies the
// geometric convergence of the trapezoid rule on the analytic annulus.
inline HSeries<PolySymbol> projection_series(const HSeries<PolySymbol>& p, const MatrixField& m0,
                                             const GapRecord& gap, int N, int base_nodes = 32,
                                             ProjectionDiagnostics* diag = nullptr,
                                             double quad_tol = 1e-8) {
  int dim = p.c[0].dim();
  Contour ct = contour_from_gap(gap, 2 * base_nodes);
  NodeSymbol q0 = resolvent_q0(m0, ct, p.c[0].xi_range());
  HSeries<NodeSymbol> s = node_series_from_symbol(p, m0, ct, N);
  HSeries<NodeSymbol> q = resolvent_series(s, q0, N, dim);

  HSeries<PolySymbol> out;
  double quad_err = 0.0, herm = 0.0;
  for (int j = 0; j <= N; ++j) {
    PolySymbol full = q.c[j].integrate(1);
    PolySymbol half = q.c[j].integrate(2);
    quad_err = std::max(quad_err, (full - half).norm_sup());
    herm = std::max(herm, (full - full.adjoint()).norm_sup());
    PolySymbol sym = hermitize(full);
    sym.prune(1e-14);
    out.c.push_back(std::move(sym));
  }
  require(quad_err <= quad_tol, errkind::numerical,
          "contour quadrature did not converge: doubling check " + std::to_string(quad_err));
  if (diag) *diag = ProjectionDiagnostics{quad_err, herm, ct.nodes};
  return out;
}

inline HSeries<PolySymbol> projection_series(const FiberModel& model, int N, int base_nodes = 32,
                                             ProjectionDiagnostics* diag = nullptr) {
  require(model.p.order() >= 0, errkind::config, "model carries no symbol series");
  return projection_series(model.p, model.m0, model.gap, N, base_nodes, diag);
}

// Frozen band eigenprojector, the order-zero reference: sum over the band of
// |u_j(x)><u_j(x)| from a pointwise eigendecomposition of M0.
inline MatrixField band_eigenprojector(const MatrixField& m0, int band_lo, int band_hi) {
  int n = m0.rows();
  require(band_lo >= 0 && band_hi >= band_lo && band_hi < n, errkind::config,
          "band indices out of range");
  MatrixField out(m0.grid(), n, n);
  for (std::size_t p = 0; p < m0.npoints(); ++p) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m0.at(p)));
    require(es.info() == Eigen::Success, errkind::numerical, "frozen matrix eigensolve failed");
    Mat acc = Mat::Zero(n, n);
    for (int j = band_lo; j <= band_hi; ++j)
      acc += es.eigenvectors().col(j) * es.eigenvectors().col(j).adjoint();
    out.at(p) = acc;
  }
  return out;
}

}  // namespace mbo
