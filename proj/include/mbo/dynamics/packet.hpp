#pragma once

// Coherent-state assembly from a trajectory sample: the leading Gaussian with
// either the frame-squeezed width Z Y^{-1} (default) or the frozen isotropic
// width, the continuously tracked det(Y)^{-1/2} prefactor, the accumulated
// action phase, and the squeezed Hermite ladder generated by the frame.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mbo/common.hpp"
#include "mbo/dynamics/flow.hpp"
#include "mbo/grid.hpp"

namespace mbo {

inline double grid_norm(const std::vector<cplx>& psi, const UniformGrid& g) {
  double s = 0.0;
  for (const cplx& v : psi) s += std::norm(v);
  return std::sqrt(s * g.cell_volume());
}

// Nuclear-profile coherent state on the given grid. mu is the ladder
// multi-index (all zeros for the leading Gaussian); frozen_width selects the
// isotropic width of the leading-order formula instead of the evolved frame.
inline std::vector<cplx> assemble_packet(const TrajectoryBundle& b, std::size_t sample,
                                         double h, const UniformGrid& nuclear,
                                         const multi_index& mu, bool frozen_width = false) {
  require(h > 0.0, errkind::config, "packet needs a positive h");
  require(sample < b.states.size(), errkind::config, "packet sample index out of range");
  const int d = b.dim;
  require(nuclear.rank() == d, errkind::config, "packet grid rank mismatches the trajectory");
  require(int(mu.size()) == d, errkind::config, "ladder index rank mismatches the trajectory");
  for (int m : mu) require(m >= 0, errkind::config, "ladder index must be nonnegative");

  const Eigen::VectorXd& q = b.states[sample].x;
  const Eigen::VectorXd& xi = b.states[sample].xi;
  const double delta = b.delta.empty() ? 0.0 : b.delta[sample];

  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd Z = iu * Eigen::MatrixXcd::Identity(d, d);
  cplx detfac = 1.0;
  if (!frozen_width) {
    require(sample < b.frames.size(), errkind::config,
            "packet needs the variational frame; run the linearized flow first");
    Y = b.frames[sample].Y;
    Z = b.frames[sample].Z;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Y);
    const double smax = svd.singularValues()(0), smin = svd.singularValues()(d - 1);
    const double scale = std::max({smax, Z.cwiseAbs().maxCoeff(), 1.0});
    require(smin > 1e-12 * scale, errkind::numerical,
            "packet frame is singular; condition number " + std::to_string(scale / smin));
    const double mag = std::abs(Y.determinant());
    detfac = std::pow(mag, -0.5) * std::exp(-0.5 * iu * b.dety_phase[sample]);
  }

  Eigen::MatrixXcd A = Z * Y.inverse();
  A = 0.5 * (A + A.transpose().eval());
  const Eigen::MatrixXcd Yinv = Y.inverse();
  const Eigen::MatrixXcd B = Yinv * Y.conjugate();

  const std::size_t np = nuclear.npoints();
  const double norm0 = std::pow(pi * h, -0.25 * d);
  std::vector<cplx> base(np);
  Eigen::VectorXd x(d), dx(d);
  for (std::size_t p = 0; p < np; ++p) {
    auto id = nuclear.unflatten(p);
    for (int a = 0; a < d; ++a) x[a] = nuclear.axes[a].point(id[a]);
    dx = x - q;
    const Eigen::VectorXcd dxc = dx.cast<cplx>();
    const Eigen::MatrixXcd qm = dxc.transpose() * A * dxc;
    cplx phase = iu * (x.dot(xi) / h) + iu * qm(0, 0) / (2.0 * h) + iu * (delta / h);
    base[p] = norm0 * detfac * std::exp(phase);
  }
  if (mi_abs(mu) == 0) return base;

  // Squeezed Hermite ladder, built index by index so every recursion step has
  // its two predecessors available.
  std::map<multi_index, std::vector<cplx>> table;
  table[multi_index(d, 0)] = std::move(base);
  const double rt2h = std::sqrt(2.0 / h);

  multi_index target = mu;
  for (int total = 1; total <= mi_abs(mu); ++total) {
    std::vector<multi_index> level;
    std::function<void(multi_index&, int, int)> enumerate = [&](multi_index& k, int axis, int left) {
      if (axis == d) {
        if (left == 0) level.push_back(k);
        return;
      }
      for (int v = 0; v <= std::min(left, target[axis]); ++v) {
        k[axis] = v;
        enumerate(k, axis + 1, left - v);
      }
      k[axis] = 0;
    };
    multi_index scratch(d, 0);
    enumerate(scratch, 0, total);

    for (const auto& k : level) {
      int j = 0;
      while (k[j] == 0) ++j;
      multi_index km = k;
      km[j] -= 1;
      const auto& prev = table.at(km);
      std::vector<cplx> cur(np);
      std::vector<const std::vector<cplx>*> prev2(d, nullptr);
      for (int l = 0; l < d; ++l) {
        if (km[l] == 0) continue;
        multi_index kml = km;
        kml[l] -= 1;
        prev2[l] = &table.at(kml);
      }
      const double inv = 1.0 / std::sqrt(double(k[j]));
      for (std::size_t p = 0; p < np; ++p) {
        auto id = nuclear.unflatten(p);
        for (int a = 0; a < d; ++a) dx[a] = nuclear.axes[a].point(id[a]) - q[a];
        Eigen::VectorXcd w = Yinv * dx.cast<cplx>();
        cplx v = rt2h * w[j] * prev[p];
        for (int l = 0; l < d; ++l)
          if (prev2[l]) v -= B(j, l) * std::sqrt(double(km[l])) * (*prev2[l])[p];
        cur[p] = inv * v;
      }
      table[k] = std::move(cur);
    }
  }
  return table.at(mu);
}

// Tensor a nuclear profile with a per-point electronic fiber vector, nuclear
// index outermost. Unit fiber vectors preserve the profile norm.
inline std::vector<cplx> tensor_with_fiber(const std::vector<cplx>& profile,
                                           const std::vector<Eigen::VectorXcd>& fiber_at_x) {
  require(profile.size() == fiber_at_x.size(), errkind::config,
          "fiber table length mismatches the nuclear grid");
  const int nf = int(fiber_at_x.front().size());
  std::vector<cplx> out(profile.size() * nf);
  for (std::size_t p = 0; p < profile.size(); ++p) {
    require(int(fiber_at_x[p].size()) == nf, errkind::config, "ragged fiber table");
    for (int f = 0; f < nf; ++f) out[p * nf + f] = profile[p] * fiber_at_x[p][f];
  }
  return out;
}

}  // namespace mbo
