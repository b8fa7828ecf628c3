#pragma once

// Contour-node symbol backend. The resolvent family (p - xi^2 - w)^{-#} is
// held at quadrature nodes w_m on a circle around the frozen band. Because
// the substitution z = w + xi^2 removes the kinetic shift, the leading symbol
// at each node is xi-free; the price is a chain rule: a xi-derivative taken
// at fixed z turns into d/dxi - 2 xi d/dw at fixed w. NodeSymbol folds that
// rule into dxi(), with d/dw evaluated spectrally over the node angle, so the
// generic star-product engine applies unchanged.

#include <cmath>
#include <set>

#include "mbo/common.hpp"
#include "mbo/symbols/hseries.hpp"
#include "mbo/symbols/poly_symbol.hpp"

namespace mbo {

struct Contour {
  double center = 0.0;
  double radius = 0.0;
  int nodes = 0;

  double theta(int m) const { return 2.0 * pi * m / nodes; }
  cplx point(int m) const { return center + radius * std::exp(cplx(0.0, theta(m))); }
  // dw at node m for quadrature weights: i rho e^{i theta_m} (2 pi / M)
  cplx tangent(int m) const { return cplx(0.0, radius) * std::exp(cplx(0.0, theta(m))); }
};

class NodeSymbol {
public:
  NodeSymbol() = default;
  NodeSymbol(Contour ct, std::vector<PolySymbol> nodes) : ct_(ct), nodes_(std::move(nodes)) {
    require(int(nodes_.size()) == ct_.nodes && ct_.nodes > 0, errkind::assertion,
            "node symbol: node count mismatch");
  }

  // Same xi-free or polynomial symbol at every node (w-independent data).
  static NodeSymbol uniform(const Contour& ct, const PolySymbol& s) {
    return NodeSymbol(ct, std::vector<PolySymbol>(ct.nodes, s));
  }

  const Contour& contour() const { return ct_; }
  const PolySymbol& node(int m) const { return nodes_[m]; }
  int count() const { return ct_.nodes; }

  // -- calculus interface for the star-product engine -----------------------

  NodeSymbol dx(int axis) const {
    NodeSymbol out = *this;
    for (auto& n : out.nodes_) n = n.dx(axis);
    return out;
  }

  // xi-derivative at fixed z = w + xi^2: per-node dxi minus 2 xi dw.
  NodeSymbol dxi(int axis) const {
    NodeSymbol der = dw();
    NodeSymbol out = *this;
    for (int m = 0; m < count(); ++m)
      out.nodes_[m] = out.nodes_[m].dxi(axis) - cplx(2.0, 0.0) * der.nodes_[m].xi_shift(axis);
    return out;
  }

  // Spectral derivative in w across the contour angle. Node values of any
  // resolvent-derived symbol are analytic in an annulus around the circle, so
  // the angular Fourier series converges geometrically.
  NodeSymbol dw() const {
    int M = count();
    NodeSymbol out = *this;
    for (auto& n : out.nodes_) n = n.zeros_like();
    auto wave = derivative_wavenumbers(M, 2.0 * pi);
    for (const auto& key : key_union()) {
      const MatrixField* probe = first_field(key);
      if (!probe) continue;
      std::size_t P = probe->npoints() * probe->rows() * probe->cols();
      std::vector<cplx> buf(P * M, cplx(0.0, 0.0));
      for (int m = 0; m < M; ++m) {
        const MatrixField* f = nodes_[m].term(key);
        if (!f) continue;
        const cplx* src = f->data();
        for (std::size_t q = 0; q < P; ++q) buf[q * M + m] = src[q];
      }
      fft_many(buf.data(), {M}, int(P), 1, M, FFTW_FORWARD);
      for (std::size_t q = 0; q < P; ++q)
        for (int m = 0; m < M; ++m) buf[q * M + m] *= cplx(0.0, wave[m] / M);
      fft_many(buf.data(), {M}, int(P), 1, M, FFTW_BACKWARD);
      for (int m = 0; m < M; ++m) {
        MatrixField f(probe->grid(), probe->rows(), probe->cols());
        cplx* dst = f.data();
        cplx scale = 1.0 / ct_.tangent(m);  // d/dw = (i rho e^{i theta})^{-1} d/dtheta
        for (std::size_t q = 0; q < P; ++q) dst[q] = buf[q * M + m] * scale;
        out.nodes_[m].set_term(key, std::move(f));
      }
    }
    return out;
  }

  static NodeSymbol mult(const NodeSymbol& a, const NodeSymbol& b) {
    require(a.count() == b.count(), errkind::assertion, "node symbol mult: node mismatch");
    NodeSymbol out = a;
    for (int m = 0; m < a.count(); ++m) out.nodes_[m] = PolySymbol::mult(a.nodes_[m], b.nodes_[m]);
    return out;
  }

  NodeSymbol adjoint() const {
    NodeSymbol out = *this;
    for (auto& n : out.nodes_) n = n.adjoint();
    return out;
  }

  NodeSymbol zeros_like() const {
    NodeSymbol out = *this;
    for (auto& n : out.nodes_) n = n.zeros_like();
    return out;
  }

  NodeSymbol identity_like() const {
    NodeSymbol out = *this;
    for (auto& n : out.nodes_) n = n.identity_like();
    return out;
  }

  double norm_sup() const {
    double best = 0.0;
    for (const auto& n : nodes_) best = std::max(best, n.norm_sup());
    return best;
  }

  NodeSymbol operator+(const NodeSymbol& o) const {
    require(count() == o.count(), errkind::assertion, "node symbol +: node mismatch");
    NodeSymbol out = *this;
    for (int m = 0; m < count(); ++m) out.nodes_[m] = out.nodes_[m] + o.nodes_[m];
    return out;
  }
  NodeSymbol operator-(const NodeSymbol& o) const { return *this + (cplx(-1.0, 0.0) * o); }
  friend NodeSymbol operator*(cplx s, NodeSymbol a) {
    for (auto& n : a.nodes_) n = s * n;
    return a;
  }

  // (i / 2 pi) contour integral of the node values, using every stride-th
  // node. With the trapezoid weights this is -(rho / M_used) sum e^{i theta}.
  PolySymbol integrate(int stride = 1) const {
    require(stride >= 1 && count() % stride == 0, errkind::assertion,
            "contour integral: stride must divide the node count");
    int used = count() / stride;
    PolySymbol acc = nodes_[0].zeros_like();
    for (int m = 0; m < count(); m += stride) {
      cplx wgt = cplx(0.0, 1.0) * ct_.tangent(m) / double(used);  // (i/2pi)(2pi/M) i rho e^{it}
      acc = acc + wgt * nodes_[m];
    }
    return acc;
  }

private:
  std::set<PolySymbol::Key> key_union() const {
    std::set<PolySymbol::Key> keys;
    for (const auto& n : nodes_)
      for (const auto& [k, f] : n.terms()) keys.insert(k);
    return keys;
  }
  const MatrixField* first_field(const PolySymbol::Key& key) const {
    for (const auto& n : nodes_) {
      const MatrixField* f = n.term(key);
      if (f) return f;
    }
    return nullptr;
  }

  Contour ct_;
  std::vector<PolySymbol> nodes_;
};

}  // namespace mbo
