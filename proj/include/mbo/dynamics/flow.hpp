#pragma once

// Classical transport for the reduced dynamics: Hamilton flow of the effective
// symbol, the linearized (variational) frame along it, and the action phase.
// Fixed-step classical RK4 throughout: deterministic, reversible at the tested
// tolerances, no adaptive stepping.

#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mbo/common.hpp"
#include "mbo/dynamics/hamiltonian.hpp"

namespace mbo {

struct ClassicalState {
  Eigen::VectorXd x, xi;
};

struct VariationalFrame {
  Eigen::MatrixXcd Y, Z;  // columns are the independent solutions
  double t = 0.0;
  double cond = 1.0;  // condition number of Y

  double pairing_defect() const {
    return (Y.transpose() * Z - Z.transpose() * Y).cwiseAbs().maxCoeff();
  }
  double canonical_defect() const {
    Eigen::MatrixXcd c = Y.adjoint() * Z - Z.adjoint() * Y;
    c -= 2.0 * iu * Eigen::MatrixXcd::Identity(Y.rows(), Y.cols());
    return c.cwiseAbs().maxCoeff();
  }
};

struct TrajectoryBundle {
  int dim = 0;
  double dt = 0.0;  // realized step (input dt shrunk to divide T exactly)
  std::vector<double> times;
  std::vector<ClassicalState> states;
  std::vector<Eigen::VectorXd> velocity;  // dx/dt at each sample
  std::vector<double> energy;
  std::vector<VariationalFrame> frames;
  std::vector<double> delta;
  std::vector<double> dety_phase;  // continuously tracked arg det Y
  bool truncated = false;
  std::string exit_report;
};

namespace detail {

inline void hamilton_rhs(const Hamiltonian& h, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& xi, Eigen::VectorXd& fx,
                         Eigen::VectorXd& fxi) {
  fx = h.grad_xi(x, xi);
  fxi = -h.grad_x(x, xi);
}

}  // namespace detail

// Integrate dx/dt = dg/dxi, dxi/dt = -dg/dx from (x0, xi0) for time T (either
// sign) with steps no larger than dt. A trajectory leaving the Hamiltonian's
// trust box is truncated at the last interior sample, with the exit recorded.
inline TrajectoryBundle integrate_flow(const Hamiltonian& h, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& xi0, double T, double dt) {
  require(dt > 0.0, errkind::config, "flow integrator needs a positive step");
  require(T != 0.0, errkind::config, "flow integrator needs a nonzero horizon");
  require(int(x0.size()) == h.dim && int(xi0.size()) == h.dim, errkind::config,
          "flow initial data dimension mismatch");
  require(h.inside(x0, xi0), errkind::config, "flow initial data outside the trust box");

  const int n = std::max(1, int(std::ceil(std::abs(T) / dt - 1e-12)));
  const double step = T / n;

  TrajectoryBundle b;
  b.dim = h.dim;
  b.dt = step;

  Eigen::VectorXd x = x0, xi = xi0;
  Eigen::VectorXd k1x, k1xi, k2x, k2xi, k3x, k3xi, k4x, k4xi;
  auto record = [&](double t) {
    b.times.push_back(t);
    b.states.push_back({x, xi});
    b.velocity.push_back(h.grad_xi(x, xi));
    b.energy.push_back(h.value(x, xi));
  };
  record(0.0);

  for (int j = 0; j < n; ++j) {
    detail::hamilton_rhs(h, x, xi, k1x, k1xi);
    detail::hamilton_rhs(h, x + 0.5 * step * k1x, xi + 0.5 * step * k1xi, k2x, k2xi);
    detail::hamilton_rhs(h, x + 0.5 * step * k2x, xi + 0.5 * step * k2xi, k3x, k3xi);
    detail::hamilton_rhs(h, x + step * k3x, xi + step * k3xi, k4x, k4xi);
    x += (step / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    xi += (step / 6.0) * (k1xi + 2.0 * k2xi + 2.0 * k3xi + k4xi);
    if (!h.inside(x, xi)) {
      std::ostringstream os;
      os << "trajectory left the sampled region at t = " << (j + 1) * step
         << "; kept " << b.times.size() << " samples";
      b.truncated = true;
      b.exit_report = os.str();
      return b;
    }
    record((j + 1) * step);
  }
  return b;
}

// Attach the variational frame to every sample of a trajectory: the columns of
// (Y, Z) solve d/dt (eta, zeta)^T = J M_t (eta, zeta)^T with M_t the Hessian
// of g along the flow, from Y = I, Z = iI. The classical state is re-integrated
// jointly so the frame sees the same RK4 stages.
inline void integrate_linearized(TrajectoryBundle& b, const Hamiltonian& h) {
  require(!b.states.empty(), errkind::config, "linearized flow needs a trajectory");
  const int d = b.dim;
  const double step = b.dt;

  Eigen::VectorXd x = b.states.front().x, xi = b.states.front().xi;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd Z = iu * Eigen::MatrixXcd::Identity(d, d);

  b.frames.clear();
  b.dety_phase.clear();
  double phase = 0.0;
  cplx det_prev = Y.determinant();

  auto record = [&](double t) {
    VariationalFrame f;
    f.Y = Y;
    f.Z = Z;
    f.t = t;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Y);
    f.cond = svd.singularValues()(0) / svd.singularValues()(d - 1);
    cplx det = Y.determinant();
    phase += std::arg(det / det_prev);
    det_prev = det;
    b.frames.push_back(std::move(f));
    b.dety_phase.push_back(phase);
  };
  record(0.0);

  struct Stage {
    Eigen::VectorXd fx, fxi;
    Eigen::MatrixXcd fy, fz;
  };
  auto rhs = [&](const Eigen::VectorXd& sx, const Eigen::VectorXd& sxi,
                 const Eigen::MatrixXcd& sy, const Eigen::MatrixXcd& sz) {
    Stage s;
    detail::hamilton_rhs(h, sx, sxi, s.fx, s.fxi);
    Eigen::MatrixXd m = hessian_at(h, sx, sxi);
    Eigen::MatrixXd gxx = m.topLeftCorner(d, d), gxxi = m.topRightCorner(d, d);
    Eigen::MatrixXd gxix = m.bottomLeftCorner(d, d), gxixi = m.bottomRightCorner(d, d);
    s.fy = gxix * sy + gxixi * sz;
    s.fz = -(gxx * sy) - gxxi * sz;
    return s;
  };

  const std::size_t nsteps = b.times.size() - 1;
  for (std::size_t j = 0; j < nsteps; ++j) {
    Stage s1 = rhs(x, xi, Y, Z);
    Stage s2 = rhs(x + 0.5 * step * s1.fx, xi + 0.5 * step * s1.fxi, Y + 0.5 * step * s1.fy,
                   Z + 0.5 * step * s1.fz);
    Stage s3 = rhs(x + 0.5 * step * s2.fx, xi + 0.5 * step * s2.fxi, Y + 0.5 * step * s2.fy,
                   Z + 0.5 * step * s2.fz);
    Stage s4 = rhs(x + step * s3.fx, xi + step * s3.fxi, Y + step * s3.fy, Z + step * s3.fz);
    x += (step / 6.0) * (s1.fx + 2.0 * s2.fx + 2.0 * s3.fx + s4.fx);
    xi += (step / 6.0) * (s1.fxi + 2.0 * s2.fxi + 2.0 * s3.fxi + s4.fxi);
    Y += (step / 6.0) * (s1.fy + 2.0 * s2.fy + 2.0 * s3.fy + s4.fy);
    Z += (step / 6.0) * (s1.fz + 2.0 * s2.fz + 2.0 * s3.fz + s4.fz);
    record(b.times[j + 1]);
  }

  require((x - b.states.back().x).cwiseAbs().maxCoeff() < 1e-10 &&
              (xi - b.states.back().xi).cwiseAbs().maxCoeff() < 1e-10,
          errkind::assertion, "linearized re-integration drifted off the stored trajectory");

  double worst = 0.0;
  for (const auto& f : b.frames)
    worst = std::max({worst, f.pairing_defect(), f.canonical_defect()});
  require(worst <= 1e-6, errkind::numerical,
          "variational frame invariants drifted to " + std::to_string(worst) +
              "; reduce the integrator step");
}

// Action phase per sample: the integral of (dx/dt . xi - g) accumulated by
// piecewise-quadratic (Simpson-type) quadrature on the stored samples, plus
// the boundary term (x0.xi0 - x_t.xi_t)/2.
inline std::vector<double> action_phase(TrajectoryBundle& b) {
  require(b.states.size() >= 2, errkind::config, "action phase needs at least two samples");
  const std::size_t n = b.states.size();
  const double dt = b.dt;

  std::vector<double> f(n);
  for (std::size_t j = 0; j < n; ++j)
    f[j] = b.velocity[j].dot(b.states[j].xi) - b.energy[j];

  b.delta.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double piece;
    if (n == 2)
      piece = 0.5 * dt * (f[0] + f[1]);
    else if (j == 0)
      piece = dt * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0;
    else
      piece = dt * (-f[j - 1] + 8.0 * f[j] + 5.0 * f[j + 1]) / 12.0;
    acc += piece;
    b.delta[j + 1] = acc;
  }

  const double boundary0 = b.states.front().x.dot(b.states.front().xi);
  for (std::size_t j = 0; j < n; ++j)
    b.delta[j] += 0.5 * (boundary0 - b.states[j].x.dot(b.states[j].xi));
  return b.delta;
}

// Flat CSV export: t, x, xi, Re/Im of the frame matrices when present, the
// action phase when computed, and the energy.
inline void write_trajectory_csv(const TrajectoryBundle& b, std::ostream& os) {
  const int d = b.dim;
  os << "t";
  for (int a = 0; a < d; ++a) os << ",x" << a;
  for (int a = 0; a < d; ++a) os << ",xi" << a;
  if (!b.frames.empty())
    for (const char* m : {"Y", "Z"})
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) os << "," << m << "_re_" << r << c << "," << m << "_im_" << r << c;
  if (!b.delta.empty()) os << ",delta";
  os << ",energy\n";

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.16e", v);
    os << "," << buf;
  };
  for (std::size_t j = 0; j < b.times.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.16e", b.times[j]);
    os << buf;
    for (int a = 0; a < d; ++a) put(b.states[j].x[a]);
    for (int a = 0; a < d; ++a) put(b.states[j].xi[a]);
    if (!b.frames.empty())
      for (const Eigen::MatrixXcd* m : {&b.frames[j].Y, &b.frames[j].Z})
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) {
            put((*m)(r, c).real());
            put((*m)(r, c).imag());
          }
    if (!b.delta.empty()) put(b.delta[j]);
    put(b.energy[j]);
    os << "\n";
  }
}

}  // namespace mbo
