#pragma once

// Per-x electronic eigendata. Two pathways share the type: matrix models
// carry an n x n eigenframe at every nuclear grid point, grid models carry a
// fixed reference frame of y-grid eigenfunctions (conjugating by an
// x-independent frame commutes with D_x, so no derivative couplings are
// dropped by the truncation). Alignment makes the per-x frames smooth along
// the grid; the gap report turns the band structure into contour data for the
// resolvent calculus.

#include <vector>

#include <Eigen/Dense>

#include "mbo/common.hpp"
#include "mbo/grid.hpp"
#include "mbo/models/electronic.hpp"
#include "mbo/models/matrix_models.hpp"

namespace mbo {

struct FiberBasis {
  UniformGrid xgrid;
  int n = 0;                                   // fiber truncation size
  std::vector<std::vector<double>> energies;   // [x-point][level], ascending
  std::vector<Mat> frames;                     // matrix pathway: columns per x
  std::vector<std::vector<cplx>> ref_vectors;  // grid pathway: fixed frame
  double y_cell = 0.0;                         // quadrature weight, grid pathway
  bool aligned = false;
  double align_bound = 0.0;  // max ||u(x+dx) - u(x)|| / dx after alignment
  std::vector<DecayFit> decay;

  bool matrix_pathway() const { return !frames.empty(); }
};

// Max deviation of the frame Gram matrices from the identity.
inline double orthonormality_defect(const FiberBasis& b) {
  double worst = 0.0;
  if (b.matrix_pathway()) {
    for (const auto& u : b.frames) {
      Mat g = u.adjoint() * u;
      worst = std::max(worst, (g - Mat::Identity(b.n, b.n)).cwiseAbs().maxCoeff());
    }
  } else {
    long np = b.ref_vectors.empty() ? 0 : (long)b.ref_vectors[0].size();
    for (int i = 0; i < (int)b.ref_vectors.size(); ++i)
      for (int j = 0; j < (int)b.ref_vectors.size(); ++j) {
        cplx g = detail::wdot(b.ref_vectors[i].data(), b.ref_vectors[j].data(), np, b.y_cell);
        worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
      }
  }
  return worst;
}

// Eigendecompose a matrix model on a 1D nuclear grid. Frames come out of the
// dense solver with arbitrary per-point phases; run phase_align_basis before
// differentiating anything built from them.
inline FiberBasis fiber_basis_from_matrix_model(const MatrixModel& model,
                                                const UniformGrid& xgrid) {
  require(xgrid.rank() == 1, errkind::config, "matrix models use a one-dimensional x-grid");
  FiberBasis b;
  b.xgrid = xgrid;
  b.n = model.n;
  long np = xgrid.npoints();
  b.energies.resize(np);
  b.frames.resize(np);
  Eigen::SelfAdjointEigenSolver<Mat> eig;
  for (long p = 0; p < np; ++p) {
    double x = xgrid.axes[0].point((int)p);
    eig.compute(model.V(x));
    require(eig.info() == Eigen::Success, errkind::numerical, "fiber eigensolve failed");
    b.energies[p].resize(model.n);
    for (int i = 0; i < model.n; ++i) b.energies[p][i] = eig.eigenvalues()(i);
    b.frames[p] = eig.eigenvectors();
  }
  return b;
}

// Parallel-transport phase alignment along the 1D grid, plus a wrap check:
// on the periodic nuclear box the frame must return to itself around the
// loop, otherwise spectral differentiation of anything frame-dependent is
// meaningless and the model/grid combination is refused.
inline FiberBasis phase_align_basis(const FiberBasis& in) {
  FiberBasis b = in;
  if (!b.matrix_pathway()) {  // fixed frame: nothing to align
    b.aligned = true;
    return b;
  }
  require(b.xgrid.rank() == 1, errkind::config, "phase alignment expects a 1D grid");
  long np = b.xgrid.npoints();
  double dx = b.xgrid.axes[0].spacing();
  double bound = 0.0;
  for (long p = 1; p < np; ++p) {
    for (int j = 0; j < b.n; ++j) {
      cplx ov = b.frames[p - 1].col(j).dot(b.frames[p].col(j));  // conj on the left
      require(std::abs(ov) >= 0.5, errkind::numerical,
              "phase alignment: neighbor overlap below 0.5 near x = " +
                  std::to_string(b.xgrid.axes[0].point((int)p)) +
                  " (grid too coarse or bands too close)");
      cplx phase = std::polar(1.0, -std::arg(ov));
      b.frames[p].col(j) *= phase;
      bound = std::max(bound, (b.frames[p].col(j) - b.frames[p - 1].col(j)).norm() / dx);
    }
  }
  for (int j = 0; j < b.n; ++j) {  // periodic wrap must close
    cplx ov = b.frames[np - 1].col(j).dot(b.frames[0].col(j));
    require(std::abs(ov) >= 0.5 && std::abs(std::arg(ov)) <= 0.1, errkind::numerical,
            "phase alignment: frame does not close around the periodic box "
            "(non-trivial holonomy or non-periodic model)");
  }
  b.aligned = true;
  b.align_bound = bound;
  return b;
}

// Band-gap analysis and suggested resolvent contour for the level group
// [lo, hi]. The contour is a single circle used at every x, so the band must
// stay separated from the rest of the spectrum uniformly in x.
struct GapRecord {
  int lo = 0, hi = 0;
  double pointwise_gap = 0.0;  // min over x of dist(band(x), rest(x))
  double crossing_x = 0.0;     // argmin location of the pointwise gap
  double band_min = 0.0, band_max = 0.0;
  double below_max = 0.0, above_min = 0.0;
  double center = 0.0, radius = 0.0, clearance = 0.0;
};

inline GapRecord gap_report(const FiberBasis& b, int lo, int hi, double threshold = 0.05) {
  require(0 <= lo && lo <= hi && hi < b.n, errkind::config, "gap report: bad band indices");
  require(hi + 1 < b.n, errkind::config,
          "gap report: need at least one level above the band in the fiber truncation");
  GapRecord r;
  r.lo = lo;
  r.hi = hi;
  long np = (long)b.energies.size();
  r.pointwise_gap = std::numeric_limits<double>::infinity();
  r.band_min = std::numeric_limits<double>::infinity();
  r.band_max = -std::numeric_limits<double>::infinity();
  r.below_max = -std::numeric_limits<double>::infinity();
  r.above_min = std::numeric_limits<double>::infinity();
  for (long p = 0; p < np; ++p) {
    const auto& e = b.energies[p];
    double g = e[hi + 1] - e[hi];
    if (lo > 0) g = std::min(g, e[lo] - e[lo - 1]);
    if (g < r.pointwise_gap) {
      r.pointwise_gap = g;
      r.crossing_x = b.xgrid.rank() == 1 ? b.xgrid.axes[0].point((int)p) : (double)p;
    }
    r.band_min = std::min(r.band_min, e[lo]);
    r.band_max = std::max(r.band_max, e[hi]);
    r.above_min = std::min(r.above_min, e[hi + 1]);
    if (lo > 0) r.below_max = std::max(r.below_max, e[lo - 1]);
  }
  require(r.pointwise_gap >= threshold, errkind::numerical,
          "gap report: band gap " + std::to_string(r.pointwise_gap) + " below threshold near x = " +
              std::to_string(r.crossing_x) + " (crossing model rejected)");
  require(r.band_max < r.above_min && (lo == 0 || r.below_max < r.band_min), errkind::numerical,
          "gap report: band ranges overlap across x; a single contour cannot separate them");
  r.center = 0.5 * (r.band_min + r.band_max);
  double r_in = 0.5 * (r.band_max - r.band_min);
  double r_out = r.above_min - r.center;
  if (lo > 0) r_out = std::min(r_out, r.center - r.below_max);
  r.clearance = 0.25 * (r_out - r_in);
  r.radius = r_in + r.clearance;
  return r;
}

}  // namespace mbo
