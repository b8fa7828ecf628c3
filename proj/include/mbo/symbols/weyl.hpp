#pragma once

// Weyl quantization acting on one-dimensional grid waves.
//
// Polynomial-in-xi symbols use the exact operator-ordering identity
//   Op(xi^m a(x)) = 2^{-m} sum_nu C(m,nu) (hD)^nu a(x) (hD)^{m-nu},
// so polynomial examples quantize without discretization error beyond the
// grid's own spectral representation of D.
//
// Sampled symbols are quantized through the midpoint kernel
//   K(x,y) = (2 pi h)^{-1} sum_xi a((x+y)/2, xi) e^{i xi (x-y)/h} dxi,
// which is exact for the periodized symbol when the xi sampling is conjugate
// to the x box (dxi = 2 pi h / L). A mismatched xi grid is refused.

#include "mbo/common.hpp"
#include "mbo/symbols/poly_phase.hpp"
#include "mbo/symbols/poly_symbol.hpp"
#include "mbo/symbols/sampled.hpp"
#include "mbo/wave.hpp"

namespace mbo {

namespace detail {

inline Wave1D apply_matrix(const Mat& m, const Wave1D& w) {
  Wave1D out(w.axis, int(m.rows()));
  for (int p = 0; p < w.axis.n; ++p)
    for (int r = 0; r < m.rows(); ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < m.cols(); ++c) acc += m(r, c) * w.at(p, c);
      out.at(p, r) = acc;
    }
  return out;
}

inline Wave1D multiply_pointwise(const MatrixField& f, const Wave1D& w) {
  Wave1D out(w.axis, f.rows());
  for (int p = 0; p < w.axis.n; ++p) {
    auto m = f.at(p);
    for (int r = 0; r < f.rows(); ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < f.cols(); ++c) acc += m(r, c) * w.at(p, c);
      out.at(p, r) = acc;
    }
  }
  return out;
}

inline Wave1D multiply_power_of_x(int a, const Wave1D& w) {
  Wave1D out = w;
  for (int p = 0; p < w.axis.n; ++p) {
    double xp = 1.0;
    for (int r = 0; r < a; ++r) xp *= w.axis.point(p);
    for (int c = 0; c < w.comps; ++c) out.at(p, c) *= xp;
  }
  return out;
}

}  // namespace detail

// -- exact polynomial paths -------------------------------------------------

inline Wave1D weyl_apply(const PolyPhase& sym, double h, const Wave1D& psi) {
  require(sym.dim() == 1, errkind::config, "weyl_apply: one-dimensional symbols only");
  require(sym.cols() == psi.comps, errkind::config, "weyl_apply: component count mismatch");
  Wave1D out(psi.axis, sym.rows());
  for (const auto& [key, m] : sym.terms()) {
    int a = key[0], b = key[1];
    Wave1D term(psi.axis, psi.comps);
    for (int nu = 0; nu <= b; ++nu) {
      Wave1D piece = psi.hD_pow(h, b - nu);
      piece = detail::multiply_power_of_x(a, piece);
      piece = piece.hD_pow(h, nu);
      piece *= binomial(b, nu) / std::pow(2.0, b);
      term += piece;
    }
    out += detail::apply_matrix(m, term);
  }
  return out;
}

inline Wave1D weyl_apply(const PolySymbol& sym, double h, const Wave1D& psi) {
  require(sym.dim() == 1, errkind::config, "weyl_apply: one-dimensional symbols only");
  require(sym.cols() == psi.comps, errkind::config, "weyl_apply: component count mismatch");
  require(sym.xgrid().axes[0].n == psi.axis.n &&
              std::abs(sym.xgrid().axes[0].lo - psi.axis.lo) < 1e-12,
          errkind::config, "weyl_apply: symbol and wave grids differ");
  Wave1D out(psi.axis, sym.rows());
  for (const auto& [key, f] : sym.terms()) {
    int b = key[0];
    for (int nu = 0; nu <= b; ++nu) {
      Wave1D piece = psi.hD_pow(h, b - nu);
      piece = detail::multiply_pointwise(f, piece);
      piece = piece.hD_pow(h, nu);
      piece *= binomial(b, nu) / std::pow(2.0, b);
      out += piece;
    }
  }
  return out;
}

// -- sampled midpoint path --------------------------------------------------

inline Wave1D weyl_apply(const SampledSymbol& sym, double h, const Wave1D& psi) {
  require(sym.cols() == psi.comps, errkind::config, "weyl_apply: component count mismatch");
  const AxisSpec& xa = sym.xaxis();
  const AxisSpec& qa = sym.xiaxis();
  require(xa.n == psi.axis.n && std::abs(xa.lo - psi.axis.lo) < 1e-12, errkind::config,
          "weyl_apply: symbol and wave grids differ");
  double conjugate_dxi = 2.0 * pi * h / xa.length();
  require(std::abs(qa.spacing() - conjugate_dxi) < 1e-10 * conjugate_dxi, errkind::config,
          "weyl_apply: xi sampling must be conjugate to the x box (dxi = 2 pi h / L)");

  // Trigonometric refinement of the symbol onto the half-step x lattice.
  const int nx = xa.n, nxi = qa.n, E = sym.rows() * sym.cols();
  std::vector<cplx> fine(std::size_t(2 * nx) * nxi * E, 0.0);
  {
    std::vector<cplx> spec(sym.field().data(), sym.field().data() + std::size_t(nx) * nxi * E);
    fft_many(spec.data(), {nx}, nxi * E, nxi * E, 1, FFTW_FORWARD);
    // Zero-pad modes into the doubled grid (split the Nyquist bin).
    for (int j = 0; j < nx; ++j) {
      int jj = (j <= nx / 2) ? j : j + nx;
      double wgt = (j == nx / 2) ? 0.5 : 1.0;
      for (int t = 0; t < nxi * E; ++t) {
        fine[std::size_t(jj) * nxi * E + t] += wgt * spec[std::size_t(j) * nxi * E + t];
        if (j == nx / 2)
          fine[std::size_t(jj + nx) * nxi * E + t] += wgt * spec[std::size_t(j) * nxi * E + t];
      }
    }
    fft_many(fine.data(), {2 * nx}, nxi * E, nxi * E, 1, FFTW_BACKWARD);
    for (auto& v : fine) v /= double(nx);  // forward had no 1/nx; doubled inverse keeps values
  }
  auto sym_mid = [&](int twice_index, int q, int e) -> cplx {
    int idx = ((twice_index % (2 * nx)) + 2 * nx) % (2 * nx);
    return fine[(std::size_t(idx) * nxi + q) * E + e];
  };

  Wave1D out(psi.axis, sym.rows());
  const double pref = qa.spacing() / (2.0 * pi * h) * psi.axis.spacing();
  std::vector<cplx> kacc(E);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) {
      double dxy = xa.point(i) - xa.point(j);
      // Midpoint (x_i + x_j)/2 sits on the half lattice at index i + j.
      std::fill(kacc.begin(), kacc.end(), cplx(0.0, 0.0));
      for (int q = 0; q < nxi; ++q) {
        cplx phase = std::exp(iu * qa.point(q) * dxy / h);
        for (int e = 0; e < E; ++e) kacc[e] += sym_mid(i + j, q, e) * phase;
      }
      for (int r = 0; r < sym.rows(); ++r)
        for (int c = 0; c < sym.cols(); ++c)
          out.at(i, r) += pref * kacc[std::size_t(r) * sym.cols() + c] * psi.at(j, c);
    }
  }
  return out;
}

}  // namespace mbo
