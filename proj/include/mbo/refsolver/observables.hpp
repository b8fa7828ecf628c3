#pragma once

// Measurement and state construction around the grid reference solver:
// expectation values, band-projected mass, coherent initial states, and the
// pointwise unitary relating the gauged and ungauged pair frames.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "mbo/common.hpp"
#include "mbo/models/build.hpp"
#include "mbo/refsolver/operators.hpp"
#include "mbo/refsolver/state.hpp"

namespace mbo {

// Orthonormal band columns in the fiber inner product, either one block per
// nuclear grid point or a single block shared by all of them.
struct BandBasis {
  std::vector<Eigen::MatrixXcd> cols;
  bool per_x = false;
  double weight = 1.0;  // fiber quadrature weight behind the orthonormality

  const Eigen::MatrixXcd& at(std::size_t p) const { return per_x ? cols[p] : cols[0]; }
};

// Band columns of an x-dependent matrix-model frame.
inline BandBasis band_basis_from_frames(const FiberBasis& fb, int lo, int hi) {
  require(fb.matrix_pathway(), errkind::config, "frame band basis needs the matrix pathway");
  require(0 <= lo && lo <= hi && hi < fb.n, errkind::config, "band range out of bounds");
  BandBasis b;
  b.per_x = true;
  b.weight = 1.0;
  b.cols.reserve(fb.frames.size());
  for (const auto& u : fb.frames) b.cols.push_back(u.middleCols(lo, hi - lo + 1));
  return b;
}

// x-independent band from electronic eigenvectors on the y-grid (unit
// continuum norm, so the weight is the y-cell volume).
inline BandBasis band_basis_from_vectors(const std::vector<std::vector<cplx>>& vecs,
                                         double y_cell, int lo, int hi) {
  require(0 <= lo && lo <= hi && hi < int(vecs.size()), errkind::config,
          "band range out of bounds");
  BandBasis b;
  b.per_x = false;
  b.weight = y_cell;
  const int k = hi - lo + 1;
  const long nf = long(vecs[lo].size());
  Eigen::MatrixXcd m(nf, k);
  for (int i = 0; i < k; ++i)
    m.col(i) = Eigen::Map<const Eigen::VectorXcd>(vecs[lo + i].data(), nf);
  b.cols.push_back(m);
  return b;
}

struct Observables {
  double t = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  Eigen::VectorXd x_mean, xi_mean;
  double band_mass = -1.0;  // fraction of mass in the projected band; -1 if no basis
};

// Expectation values over the first nx_axes continuum axes (the nuclear
// coordinates); everything to their right counts as fiber for band_mass.
template <class Op>
Observables measure(const GridState& s, const Op& op, int nx_axes,
                    const BandBasis* basis = nullptr) {
  const auto dims = s.grid.dims();
  require(!s.x_spectral, errkind::config,
          "measurement expects position-space states; convert from the Fourier layout first");
  require(nx_axes >= 1 && nx_axes <= int(dims.size()), errkind::config,
          "measurement: nuclear axis count out of range");
  Observables o;
  o.t = s.t;
  const double cv = s.grid.cell_volume() * s.fiber_weight;

  double raw2 = 0.0;
  for (const cplx& z : s.data) raw2 += std::norm(z);
  require(raw2 > 0.0, errkind::numerical, "measurement on a vanished state");
  o.norm = std::sqrt(raw2 * cv);

  o.x_mean.setZero(nx_axes);
  std::vector<std::size_t> inner(nx_axes, s.nfiber);
  for (int a = 0; a < nx_axes; ++a)
    for (std::size_t b = a + 1; b < dims.size(); ++b) inner[a] *= dims[b];
  for (std::size_t p = 0; p < s.data.size(); ++p) {
    const double w = std::norm(s.data[p]);
    for (int a = 0; a < nx_axes; ++a)
      o.x_mean[a] += w * s.grid.axes[a].point(int(p / inner[a]) % dims[a]);
  }
  o.x_mean /= raw2;

  o.xi_mean.setZero(nx_axes);
  for (int a = 0; a < nx_axes; ++a) {
    const auto d = axis_momentum(s.data, s.grid, a, s.nfiber);
    cplx acc = 0.0;
    for (std::size_t p = 0; p < s.data.size(); ++p) acc += std::conj(s.data[p]) * d[p];
    o.xi_mean[a] = s.h * acc.real() / raw2;
  }

  std::vector<cplx> hpsi;
  op.apply(s.data, hpsi);
  cplx eacc = 0.0;
  for (std::size_t p = 0; p < s.data.size(); ++p) eacc += std::conj(s.data[p]) * hpsi[p];
  o.energy = eacc.real() / raw2;

  if (basis) {
    const long fibdim = basis->at(0).rows();
    std::size_t nxp = 1;
    for (int a = 0; a < nx_axes; ++a) nxp *= dims[a];
    require(s.data.size() == nxp * std::size_t(fibdim), errkind::config,
            "band basis does not match the state layout");
    double mass = 0.0;
    for (std::size_t j = 0; j < nxp; ++j) {
      Eigen::Map<const Eigen::VectorXcd> seg(s.data.data() + j * fibdim, fibdim);
      const Eigen::VectorXcd c = basis->at(j).adjoint() * seg * basis->weight;
      mass += c.squaredNorm();
    }
    double outer_cell = 1.0;
    for (int a = 0; a < nx_axes; ++a) outer_cell *= s.grid.axes[a].spacing();
    o.band_mass = mass * outer_cell / (raw2 * cv);
  }
  return o;
}

namespace detail {

inline cplx gauss_profile(double amp, double h, const double* x, const double* x0,
                          const double* xi0, int d) {
  double phase = 0.0, decay = 0.0;
  for (int a = 0; a < d; ++a) {
    phase += x[a] * xi0[a];
    decay += (x[a] - x0[a]) * (x[a] - x0[a]);
  }
  return amp * std::exp(cplx(-decay / (2.0 * h), phase / h));
}

// Coherent profile summed over the nearest periodic images, so the sampled
// data is smooth across the box seam. Bare samples leave a wrap jump of
// order exp(-(L-d0)^2/2h) that the spectral kinetic term would ring up by
// the squared grid bandwidth.
inline cplx gauss_profile_periodic(double amp, double h, const double* x, const double* x0,
                                   const double* xi0, const double* len, int d) {
  require(d >= 1 && d <= 2, errkind::assertion, "periodized profile supports d = 1, 2");
  cplx s = 0.0;
  double xs[2];
  for (int m0 = -1; m0 <= 1; ++m0)
    for (int m1 = (d > 1 ? -1 : 0); m1 <= (d > 1 ? 1 : 0); ++m1) {
      xs[0] = x[0] + m0 * len[0];
      if (d > 1) xs[1] = x[1] + m1 * len[1];
      s += gauss_profile(amp, h, xs, x0, xi0, d);
    }
  return s;
}

}  // namespace detail

// Product state: coherent nuclear Gaussian times a fixed fiber vector, built
// in the gauged frame and then normalized on the grid.
inline GridState initial_pair_packet(const PairOperator& op, const std::vector<cplx>& fiber_u,
                                     const Eigen::Vector2d& x0, const Eigen::Vector2d& xi0) {
  require(op.frame() == Frame::gauged, errkind::config,
          "pair packets are built in the gauged frame");
  const auto dims = op.grid.dims();
  const std::size_t ny = std::size_t(dims[2]) * dims[3];
  require(fiber_u.size() == ny, errkind::config,
          "fiber vector does not match the electronic grid");
  GridState s;
  s.grid = op.grid;
  s.frame = Frame::gauged;
  s.h = op.physics.h;
  s.data.resize(op.grid.npoints());
  const double amp = std::pow(pi * s.h, -0.5);  // (pi h)^(-d/4), d = 2
  const double len[2] = {op.grid.axes[0].length(), op.grid.axes[1].length()};
  std::size_t p = 0;
  for (int i0 = 0; i0 < dims[0]; ++i0)
    for (int i1 = 0; i1 < dims[1]; ++i1) {
      const double x[2] = {op.grid.axes[0].point(i0), op.grid.axes[1].point(i1)};
      const cplx g = detail::gauss_profile_periodic(amp, s.h, x, x0.data(), xi0.data(), len, 2);
      for (std::size_t q = 0; q < ny; ++q, ++p) s.data[p] = g * fiber_u[q];
    }
  const double nrm = s.norm();
  require(nrm > 0.0, errkind::numerical, "initial packet vanished on the grid");
  for (auto& z : s.data) z /= nrm;
  return s;
}

// Coherent packet on one nuclear axis riding a selected fiber column.
inline GridState initial_band_packet(const BandOperator1D& op, const FiberBasis& fb, int level,
                                     double x0, double xi0) {
  require(fb.matrix_pathway(), errkind::config, "band packet needs frame columns");
  require(int(fb.frames.size()) == op.grid.axes[0].n && fb.n == op.n, errkind::config,
          "band packet: frame does not match the operator");
  require(level >= 0 && level < op.n, errkind::config, "band packet: level out of range");
  GridState s;
  s.grid = op.grid;
  s.nfiber = op.n;
  s.h = op.h;
  s.frame = Frame::gauged;
  s.data.resize(std::size_t(op.grid.axes[0].n) * op.n);
  const double amp = std::pow(pi * s.h, -0.25);
  const double len = op.grid.axes[0].length();
  for (int j = 0; j < op.grid.axes[0].n; ++j) {
    const double xj = op.grid.axes[0].point(j);
    const cplx g = detail::gauss_profile_periodic(amp, s.h, &xj, &x0, &xi0, &len, 1);
    for (int i = 0; i < op.n; ++i) s.data[std::size_t(j) * op.n + i] = g * fb.frames[j](i, level);
  }
  const double nrm = s.norm();
  require(nrm > 0.0, errkind::numerical, "initial packet vanished on the grid");
  for (auto& z : s.data) z /= nrm;
  return s;
}

// Plain planar Gaussian for the single-particle control.
inline GridState initial_single_packet(const Single2DOperator& op, const Eigen::Vector2d& x0,
                                       const Eigen::Vector2d& xi0) {
  GridState s;
  s.grid = op.grid;
  s.h = op.h;
  s.frame = op.frame();
  s.data.resize(op.grid.npoints());
  const auto dims = op.grid.dims();
  const double amp = std::pow(pi * s.h, -0.5);
  const double len[2] = {op.grid.axes[0].length(), op.grid.axes[1].length()};
  std::size_t p = 0;
  for (int i0 = 0; i0 < dims[0]; ++i0)
    for (int i1 = 0; i1 < dims[1]; ++i1, ++p) {
      const double x[2] = {op.grid.axes[0].point(i0), op.grid.axes[1].point(i1)};
      s.data[p] = detail::gauss_profile_periodic(amp, s.h, x, x0.data(), xi0.data(), len, 2);
    }
  const double nrm = s.norm();
  require(nrm > 0.0, errkind::numerical, "initial packet vanished on the grid");
  for (auto& z : s.data) z /= nrm;
  return s;
}

enum class GaugeDirection { to_gauged, to_ungauged };

// Pointwise unitary between the pair frames: multiplication by
// exp(-i e A(x).y) moves ungauged states to the gauged frame, its conjugate
// moves them back. The modulus is untouched either way.
inline GridState gauge_conjugate(const GridState& s, const PairPhysics& ph, GaugeDirection dir) {
  require(s.grid.rank() == 4 && s.nfiber == 1 && !s.x_spectral, errkind::config,
          "gauge conjugation acts on position-space pair states");
  const Frame want = (dir == GaugeDirection::to_gauged) ? Frame::ungauged : Frame::gauged;
  require(s.frame == want, errkind::config, "gauge conjugation: state already in target frame");
  GridState out = s;
  out.frame = (dir == GaugeDirection::to_gauged) ? Frame::gauged : Frame::ungauged;
  const auto dims = s.grid.dims();
  std::size_t p = 0;
  for (int i0 = 0; i0 < dims[0]; ++i0)
    for (int i1 = 0; i1 < dims[1]; ++i1) {
      const double x1 = s.grid.axes[0].point(i0), x2 = s.grid.axes[1].point(i1);
      for (int i2 = 0; i2 < dims[2]; ++i2)
        for (int i3 = 0; i3 < dims[3]; ++i3, ++p) {
          cplx f = gauge_phase(ph, x1, x2, s.grid.axes[2].point(i2), s.grid.axes[3].point(i3));
          if (dir == GaugeDirection::to_ungauged) f = std::conj(f);
          out.data[p] = f * s.data[p];
        }
    }
  return out;
}

}  // namespace mbo
