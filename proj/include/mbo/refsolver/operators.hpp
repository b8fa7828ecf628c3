#pragma once

// Discrete Hamiltonians for the brute-force reference propagation. Each
// operator applies pseudospectrally: derivatives through per-axis FFTs,
// field couplings and potentials pointwise in position space.
//
// The pair operator consumes the same generator quadratic form as the symbol
// assembly, so both sides of every consistency test inherit one derivation.
// Unlike the symbol side, external potentials here act at the exact particle
// positions x1 = x - h^2 y, x2 = x + (1-h^2) y; the frozen-position Taylor
// expansion on the symbol side is part of what the comparison measures.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mbo/common.hpp"
#include "mbo/field.hpp"
#include "mbo/fft.hpp"
#include "mbo/grid.hpp"
#include "mbo/models/pair_frame.hpp"
#include "mbo/models/potentials.hpp"
#include "mbo/refsolver/state.hpp"

namespace mbo {

namespace detail {

// Shared pseudospectral core: out accumulates the kinetic term
// sum_a c_a D_a^2 psi and the derivative couplings sum_a w_a(x) D_a psi,
// with one forward and at most two backward passes per axis.
struct SpectralTerms {
  std::vector<int> dims;
  std::vector<std::vector<double>> kd;    // derivative multiplier per axis
  std::vector<std::vector<double>> kk2c;  // c_a k^2 per axis
  std::vector<std::vector<double>> w;     // coupling field per axis (empty if none)
  std::vector<int> inner;                 // row-major inner size per axis
  std::vector<char> active;               // axes with a nonzero kinetic weight

  void init(const UniformGrid& g, const std::vector<double>& cdiag) {
    dims = g.dims();
    const int rank = int(dims.size());
    kd.resize(rank);
    kk2c.resize(rank);
    w.assign(rank, {});
    inner.assign(rank, 1);
    active.resize(rank);
    for (int a = 0; a < rank; ++a) {
      active[a] = cdiag[a] != 0.0;
      kd[a] = derivative_wavenumbers(dims[a], g.axes[a].length());
      kk2c[a] = kinetic_wavenumbers(dims[a], g.axes[a].length());
      for (double& v : kk2c[a]) v = cdiag[a] * v * v;
      for (int b = a + 1; b < rank; ++b) inner[a] *= dims[b];
    }
  }

  void accumulate(const std::vector<cplx>& in, std::vector<cplx>& out,
                  std::vector<cplx>& spec, std::vector<cplx>& kin) const {
    const std::size_t np = in.size();
    for (std::size_t a = 0; a < dims.size(); ++a) {
      if (!active[a] && w[a].empty()) continue;
      spec = in;
      fft_axis(spec.data(), dims, int(a), FFTW_FORWARD);
      const double invn = 1.0 / dims[a];
      const bool deriv = !w[a].empty();
      if (deriv) {
        kin.resize(np);
        for (std::size_t p = 0; p < np; ++p) {
          const int bin = int(p / inner[a]) % dims[a];
          kin[p] = spec[p] * (kk2c[a][bin] * invn);
          spec[p] *= kd[a][bin] * invn;
        }
        fft_axis(kin.data(), dims, int(a), FFTW_BACKWARD);
        fft_axis(spec.data(), dims, int(a), FFTW_BACKWARD);
        for (std::size_t p = 0; p < np; ++p) out[p] += kin[p] + w[a][p] * spec[p];
      } else {
        for (std::size_t p = 0; p < np; ++p)
          spec[p] *= kk2c[a][int(p / inner[a]) % dims[a]] * invn;
        fft_axis(spec.data(), dims, int(a), FFTW_BACKWARD);
        for (std::size_t p = 0; p < np; ++p) out[p] += spec[p];
      }
    }
  }

  // Largest kinetic eigenvalue of the discretization; the step-size guard
  // resolves this scale. Bounded couplings and potentials are excluded on
  // purpose: the short-step residual check catches any slack they add.
  double lambda_bound() const {
    double s = 0.0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      double k2max = 0.0;
      for (double v : kk2c[a]) k2max = std::max(k2max, std::abs(v));
      s += k2max;
    }
    return s;
  }
};

}  // namespace detail

// Two-particle operator in center-of-mass coordinates (x1, x2, y1, y2),
// gauged or ungauged according to the physics flag.
struct PairOperator {
  UniformGrid grid;  // four axes, nuclear pair first
  PairPhysics physics;
  QuadForm<double> qf;
  std::vector<double> pot;
  detail::SpectralTerms terms;
  double lambda = 0.0;

  static constexpr bool x_spectral_input = false;
  Frame frame() const { return physics.gauged ? Frame::gauged : Frame::ungauged; }
  double hbar() const { return physics.h; }

  void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    require(in.size() == std::size_t(grid.npoints()), errkind::assertion,
            "pair operator: state size mismatch");
    out.resize(in.size());
    for (std::size_t p = 0; p < in.size(); ++p) out[p] = pot[p] * in[p];
    terms.accumulate(in, out, scratch_a_, scratch_b_);
  }

private:
  mutable std::vector<cplx> scratch_a_, scratch_b_;
};

inline PairOperator make_pair_operator(const PairPhysics& ph, const UniformGrid& xgrid,
                                       const UniformGrid& ygrid, const Potential2D& v12,
                                       const Potential2D& v_nuc, const Potential2D& v_el) {
  require(xgrid.rank() == 2 && ygrid.rank() == 2, errkind::config,
          "pair operator needs planar nuclear and electronic grids");
  PairOperator op;
  op.grid = UniformGrid{{xgrid.axes[0], xgrid.axes[1], ygrid.axes[0], ygrid.axes[1]}};
  op.grid.validate("pair grid");
  op.physics = ph;
  op.qf = pair_quadratic_form(ph);
  const auto& qf = op.qf;
  // The center-of-mass momenta carry no mixed D_x.D_y term in either frame;
  // the axis-separable kinetic path below relies on that.
  require(std::abs(qf.at(G_DX, G_DY)) < 1e-12, errkind::assertion,
          "pair operator: unexpected mixed momentum coupling");

  const int n0 = xgrid.axes[0].n, n1 = xgrid.axes[1].n;
  const int n2 = ygrid.axes[0].n, n3 = ygrid.axes[1].n;
  const std::size_t np = std::size_t(n0) * n1 * n2 * n3;
  const double h2 = ph.h * ph.h;
  const double cxa = qf.at(G_DX, G_AX), cxy = qf.at(G_DX, G_AY);
  const double cya = qf.at(G_DY, G_AX), cyy = qf.at(G_DY, G_AY);
  const double paa = qf.at(G_AX, G_AX), pay = qf.at(G_AX, G_AY), pyy = qf.at(G_AY, G_AY);

  op.terms.init(op.grid, {qf.at(G_DX, G_DX), qf.at(G_DX, G_DX), qf.at(G_DY, G_DY),
                          qf.at(G_DY, G_DY)});
  op.pot.resize(np);
  const bool need_w0 = std::abs(cxa) + std::abs(cxy) > 1e-14;
  const bool need_w2 = std::abs(cya) + std::abs(cyy) > 1e-14;
  if (need_w0) {
    op.terms.w[0].resize(np);
    op.terms.w[1].resize(np);
  }
  if (need_w2) {
    op.terms.w[2].resize(np);
    op.terms.w[3].resize(np);
  }

  std::size_t p = 0;
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < n1; ++i1) {
      const double x1 = xgrid.axes[0].point(i0), x2 = xgrid.axes[1].point(i1);
      const double ax1 = -ph.b * x2, ax2 = ph.b * x1;  // A(x) = b R x
      for (int i2 = 0; i2 < n2; ++i2)
        for (int i3 = 0; i3 < n3; ++i3, ++p) {
          const double y1 = ygrid.axes[0].point(i2), y2 = ygrid.axes[1].point(i3);
          const double ay1 = -ph.b * y2, ay2 = ph.b * y1;
          double v = v12.is_zero ? 0.0 : v12.value(y1, y2);
          if (!v_nuc.is_zero) v += v_nuc.value(x1 - h2 * y1, x2 - h2 * y2);
          if (!v_el.is_zero) v += v_el.value(x1 + (1.0 - h2) * y1, x2 + (1.0 - h2) * y2);
          v += paa * (ax1 * ax1 + ax2 * ax2) + pay * (ax1 * ay1 + ax2 * ay2) +
               pyy * (ay1 * ay1 + ay2 * ay2);
          op.pot[p] = v;
          if (need_w0) {
            op.terms.w[0][p] = cxa * ax1 + cxy * ay1;
            op.terms.w[1][p] = cxa * ax2 + cxy * ay2;
          }
          if (need_w2) {
            op.terms.w[2][p] = cya * ax1 + cyy * ay1;
            op.terms.w[3][p] = cya * ax2 + cyy * ay2;
          }
        }
    }
  op.lambda = op.terms.lambda_bound();
  return op;
}

// Single charged particle on a planar grid: |h D - q A(x)|^2 with
// A(x) = b R x. The control configuration whose center follows a cyclotron
// circle of frequency 4 q b.
struct Single2DOperator {
  UniformGrid grid;
  double h = 0.1, b = 0.0, q = 1.0;
  std::vector<double> pot;
  detail::SpectralTerms terms;
  double lambda = 0.0;

  static constexpr bool x_spectral_input = false;
  Frame frame() const { return Frame::gauged; }
  double hbar() const { return h; }

  void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    require(in.size() == std::size_t(grid.npoints()), errkind::assertion,
            "single-particle operator: state size mismatch");
    out.resize(in.size());
    for (std::size_t p = 0; p < in.size(); ++p) out[p] = pot[p] * in[p];
    terms.accumulate(in, out, scratch_a_, scratch_b_);
  }

private:
  mutable std::vector<cplx> scratch_a_, scratch_b_;
};

inline Single2DOperator make_single_operator(const UniformGrid& grid, double h, double b,
                                             double q) {
  require(grid.rank() == 2, errkind::config, "single-particle operator needs a planar grid");
  Single2DOperator op;
  op.grid = grid;
  op.h = h;
  op.b = b;
  op.q = q;
  const int n0 = grid.axes[0].n, n1 = grid.axes[1].n;
  op.terms.init(grid, {h * h, h * h});
  op.pot.resize(std::size_t(n0) * n1);
  if (b != 0.0) {
    op.terms.w[0].resize(op.pot.size());
    op.terms.w[1].resize(op.pot.size());
  }
  std::size_t p = 0;
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < n1; ++i1, ++p) {
      const double a1 = -b * grid.axes[1].point(i1), a2 = b * grid.axes[0].point(i0);
      op.pot[p] = q * q * (a1 * a1 + a2 * a2);
      if (b != 0.0) {
        op.terms.w[0][p] = -2.0 * q * h * a1;
        op.terms.w[1][p] = -2.0 * q * h * a2;
      }
    }
  op.lambda = op.terms.lambda_bound();
  return op;
}

// One-dimensional nuclear coordinate coupled to a small matrix fiber:
// (h D_x)^2 I + M(x). The cheap testbed for band leakage. Layout matches the
// packet assembly: x outer, fiber level inner.
struct BandOperator1D {
  UniformGrid grid;  // one axis
  MatrixField m;     // n x n hermitian blocks per x-point
  double h = 0.1;
  int n = 0;
  std::vector<double> kk2;  // (h k)^2 per x-bin
  double lambda = 0.0;

  static constexpr bool x_spectral_input = false;
  Frame frame() const { return Frame::gauged; }
  double hbar() const { return h; }

  void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    const int nx = grid.axes[0].n;
    require(in.size() == std::size_t(nx) * n, errkind::assertion,
            "band operator: state size mismatch");
    out.resize(in.size());
    std::vector<cplx> spec = in;
    fft_many(spec.data(), {nx}, n, n, 1, FFTW_FORWARD);
    const double invn = 1.0 / nx;
    for (int j = 0; j < nx; ++j)
      for (int l = 0; l < n; ++l) spec[std::size_t(j) * n + l] *= kk2[j] * invn;
    fft_many(spec.data(), {nx}, n, n, 1, FFTW_BACKWARD);
    for (int j = 0; j < nx; ++j) {
      Eigen::Map<const Eigen::VectorXcd> vin(in.data() + std::size_t(j) * n, n);
      Eigen::Map<Eigen::VectorXcd> vout(out.data() + std::size_t(j) * n, n);
      vout = m.at(j) * vin;
      for (int l = 0; l < n; ++l) vout[l] += spec[std::size_t(j) * n + l];
    }
  }
};

inline BandOperator1D make_band_operator(const UniformGrid& xgrid, const MatrixField& m,
                                         double h) {
  require(xgrid.rank() == 1, errkind::config, "band operator needs a one-dimensional x-grid");
  require(m.rows() == m.cols(), errkind::config, "band operator needs square fiber blocks");
  require(m.npoints() == std::size_t(xgrid.npoints()), errkind::config,
          "band operator: fiber field does not match the x-grid");
  BandOperator1D op;
  op.grid = xgrid;
  op.m = m;
  op.h = h;
  op.n = m.rows();
  const int nx = xgrid.axes[0].n;
  auto k = kinetic_wavenumbers(nx, xgrid.axes[0].length());
  op.kk2.resize(nx);
  double k2max = 0.0;
  for (int j = 0; j < nx; ++j) {
    op.kk2[j] = h * h * k[j] * k[j];
    k2max = std::max(k2max, op.kk2[j]);
  }
  op.lambda = k2max;
  return op;
}

// Move the nuclear axes of a four-axis pair state into Fourier bins with
// unitary scaling (norms and inner products carry over unchanged). The fast
// operator below acts on that layout; everything else expects positions.
inline GridState to_kx(const GridState& s) {
  require(s.grid.rank() == 4 && s.nfiber == 1, errkind::config,
          "nuclear Fourier layout needs a four-axis scalar pair state");
  require(!s.x_spectral, errkind::config, "state is already in the nuclear Fourier layout");
  GridState out = s;
  const auto dims = s.grid.dims();
  detail::fft_axis(out.data.data(), dims, 0, FFTW_FORWARD);
  detail::fft_axis(out.data.data(), dims, 1, FFTW_FORWARD);
  const double scale = 1.0 / std::sqrt(double(dims[0]) * dims[1]);
  for (cplx& v : out.data) v *= scale;
  out.x_spectral = true;
  return out;
}

inline GridState from_kx(const GridState& s) {
  require(s.grid.rank() == 4 && s.nfiber == 1 && s.x_spectral, errkind::config,
          "state is not in the nuclear Fourier layout");
  GridState out = s;
  const auto dims = s.grid.dims();
  detail::fft_axis(out.data.data(), dims, 0, FFTW_BACKWARD);
  detail::fft_axis(out.data.data(), dims, 1, FFTW_BACKWARD);
  const double scale = 1.0 / std::sqrt(double(dims[0]) * dims[1]);
  for (cplx& v : out.data) v *= scale;
  out.x_spectral = false;
  return out;
}

// Pair operator specialized to the translation-invariant case (gauged
// neutral pair, no external potentials): with no x-dependent field left, the
// whole nuclear part is diagonal in the nuclear Fourier layout, so one apply
// costs only the two electronic FFT passes plus pointwise work. Agrees with
// the general operator through to_kx / from_kx to roundoff.
struct KxPairOperator {
  UniformGrid grid;  // position-semantics axes, shared with the general operator
  PairPhysics physics;
  QuadForm<double> qf;
  std::vector<double> diag;  // kinetic + nuclear-momentum coupling + potential
  detail::SpectralTerms terms;  // electronic axes only
  double lambda = 0.0;

  static constexpr bool x_spectral_input = true;
  Frame frame() const { return Frame::gauged; }
  double hbar() const { return physics.h; }

  void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    require(in.size() == std::size_t(grid.npoints()), errkind::assertion,
            "fast pair operator: state size mismatch");
    out.resize(in.size());
    for (std::size_t p = 0; p < in.size(); ++p) out[p] = diag[p] * in[p];
    terms.accumulate(in, out, scratch_a_, scratch_b_);
  }

private:
  mutable std::vector<cplx> scratch_a_, scratch_b_;
};

inline KxPairOperator make_kx_pair_operator(const PairPhysics& ph, const UniformGrid& xgrid,
                                            const UniformGrid& ygrid, const Potential2D& v12) {
  require(ph.gauged, errkind::config, "fast pair operator works in the gauged frame");
  require(xgrid.rank() == 2 && ygrid.rank() == 2, errkind::config,
          "fast pair operator needs planar nuclear and electronic grids");
  KxPairOperator op;
  op.grid = UniformGrid{{xgrid.axes[0], xgrid.axes[1], ygrid.axes[0], ygrid.axes[1]}};
  op.grid.validate("pair grid");
  op.physics = ph;
  op.qf = pair_quadratic_form(ph);
  const auto& qf = op.qf;
  require(x_coupling_free(qf), errkind::config,
          "fast pair operator needs a translation-invariant configuration");
  require(std::abs(qf.at(G_DX, G_DY)) < 1e-12, errkind::assertion,
          "fast pair operator: unexpected mixed momentum coupling");

  const int n0 = xgrid.axes[0].n, n1 = xgrid.axes[1].n;
  const int n2 = ygrid.axes[0].n, n3 = ygrid.axes[1].n;
  const std::size_t np = std::size_t(n0) * n1 * n2 * n3;
  const double cxx = qf.at(G_DX, G_DX), cxy = qf.at(G_DX, G_AY);
  const double cyy = qf.at(G_DY, G_AY), pyy = qf.at(G_AY, G_AY);

  auto kk0 = kinetic_wavenumbers(n0, xgrid.axes[0].length());
  auto kk1 = kinetic_wavenumbers(n1, xgrid.axes[1].length());
  auto kd0 = derivative_wavenumbers(n0, xgrid.axes[0].length());
  auto kd1 = derivative_wavenumbers(n1, xgrid.axes[1].length());
  double k2max = 0.0;
  for (double v : kk0) k2max = std::max(k2max, cxx * v * v);
  double k2max1 = 0.0;
  for (double v : kk1) k2max1 = std::max(k2max1, cxx * v * v);

  op.terms.init(op.grid, {0.0, 0.0, qf.at(G_DY, G_DY), qf.at(G_DY, G_DY)});
  const bool need_wy = std::abs(cyy) > 1e-14;
  if (need_wy) {
    op.terms.w[2].resize(np);
    op.terms.w[3].resize(np);
  }
  op.diag.resize(np);
  std::size_t p = 0;
  for (int b0 = 0; b0 < n0; ++b0)
    for (int b1 = 0; b1 < n1; ++b1) {
      const double kin = cxx * (kk0[b0] * kk0[b0] + kk1[b1] * kk1[b1]);
      for (int i2 = 0; i2 < n2; ++i2)
        for (int i3 = 0; i3 < n3; ++i3, ++p) {
          const double y1 = ygrid.axes[0].point(i2), y2 = ygrid.axes[1].point(i3);
          const double ay1 = -ph.b * y2, ay2 = ph.b * y1;
          op.diag[p] = kin + cxy * (ay1 * kd0[b0] + ay2 * kd1[b1]) +
                       (v12.is_zero ? 0.0 : v12.value(y1, y2)) +
                       pyy * (ay1 * ay1 + ay2 * ay2);
          if (need_wy) {
            op.terms.w[2][p] = cyy * ay1;
            op.terms.w[3][p] = cyy * ay2;
          }
        }
    }
  op.lambda = k2max + k2max1 + op.terms.lambda_bound();
  return op;
}

}  // namespace mbo
