#pragma once

// Short-step Krylov propagation for the grid reference solver. Each step
// applies exp(-i dt H / h) through a Lanczos basis with full
// reorthogonalization; the step is accepted only when the a-posteriori
// residual estimate, the norm drift, and the periodic-wrap monitor all stay
// inside tolerance. Failing any of them raises instead of degrading.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mbo/common.hpp"
#include "mbo/refsolver/state.hpp"

namespace mbo {

struct PropagatorConfig {
  double dt = 1e-3;
  double T = 1.0;           // signed; negative runs backwards
  int krylov = 24;          // Lanczos dimension per step
  int stride = 10;          // sample every this many steps
  double resid_tol = 1e-9;  // per-step Krylov residual estimate
  double step_drift_tol = 1e-9;
  double total_drift_tol = 1e-7;
  double wrap_tol = 1e-6;  // boundary shell mass allowed at samples
  int wrap_cells = 2;
  bool store_samples = true;
  std::function<void(const GridState&)> on_sample;  // optional observer
};

struct PropagationRun {
  std::vector<double> times;
  std::vector<GridState> samples;
  int steps = 0;
  double dt = 0.0;  // realized signed step
  double max_residual = 0.0;
  double max_step_drift = 0.0;
  double total_drift = 0.0;
  double max_shell_mass = 0.0;
};

namespace detail {

inline double vec_l2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline cplx vec_dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += std::conj(a[p]) * b[p];
  return s;
}

// One exp(-i dt H / h) step in place. Returns the residual estimate
// beta_m |y_m| |dt|/h; basis and work persist across steps as scratch.
template <class Op>
double krylov_step(const Op& op, std::vector<cplx>& psi, double dt, double h, int m,
                   std::vector<std::vector<cplx>>& basis, std::vector<cplx>& work) {
  const std::size_t n = psi.size();
  basis.resize(m);
  const double nrm = vec_l2(psi);
  require(nrm > 0.0, errkind::numerical, "propagation state has vanished");

  std::vector<double> alpha, beta;  // beta[j] couples basis j and j+1
  basis[0] = psi;
  for (auto& z : basis[0]) z /= nrm;

  int used = m;
  double beta_tail = 0.0;
  for (int j = 0; j < m; ++j) {
    op.apply(basis[j], work);
    alpha.push_back(vec_dot(basis[j], work).real());
    for (int i = 0; i <= j; ++i) {  // full reorthogonalization
      const cplx c = vec_dot(basis[i], work);
      const cplx* vi = basis[i].data();
      for (std::size_t p = 0; p < n; ++p) work[p] -= c * vi[p];
    }
    const double b = vec_l2(work);
    if (j == m - 1 || b < 1e-13 * (std::abs(alpha[j]) + 1.0)) {
      beta_tail = b;
      used = j + 1;
      break;
    }
    beta.push_back(b);
    basis[j + 1] = work;
    for (auto& z : basis[j + 1]) z /= b;
  }

  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(used, used);
  for (int j = 0; j < used; ++j) tri(j, j) = alpha[j];
  for (int j = 0; j + 1 < used; ++j) tri(j, j + 1) = tri(j + 1, j) = beta[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tri);
  Eigen::VectorXcd phase(used);
  for (int j = 0; j < used; ++j)
    phase[j] = std::polar(1.0, -dt / h * eig.eigenvalues()[j]);
  const Eigen::VectorXd e1 = eig.eigenvectors().row(0).transpose();
  const Eigen::VectorXcd y = eig.eigenvectors() * phase.cwiseProduct(e1.cast<cplx>());

  for (std::size_t p = 0; p < n; ++p) {
    cplx acc = 0.0;
    for (int j = 0; j < used; ++j) acc += y[j] * basis[j][p];
    psi[p] = nrm * acc;
  }
  return beta_tail * std::abs(y[used - 1]) * std::abs(dt) / h;
}

}  // namespace detail

template <class Op>
PropagationRun propagate(const Op& op, const GridState& init, const PropagatorConfig& cfg) {
  require(init.frame == op.frame(), errkind::config,
          "propagation: state frame does not match the operator");
  require(init.x_spectral == Op::x_spectral_input, errkind::config,
          "propagation: state layout does not match the operator");
  require(init.grid.dims() == op.grid.dims(), errkind::config,
          "propagation: state grid does not match the operator");
  require(cfg.dt > 0.0 && cfg.T != 0.0, errkind::config,
          "propagation needs dt > 0 and a nonzero time span");
  require(cfg.krylov >= 2, errkind::config, "Krylov dimension must be at least 2");
  const double h = op.hbar();
  require(std::abs(init.h - h) < 1e-12, errkind::config,
          "propagation: state and operator disagree on h");
  const double load = cfg.dt * op.lambda / h;
  require(load <= 0.5 * cfg.krylov, errkind::config,
          "time step too coarse for the Krylov depth: dt*lambda/h = " + std::to_string(load) +
              " exceeds m/2 = " + std::to_string(0.5 * cfg.krylov) +
              "; reduce dt or raise the Krylov dimension");

  const int nsteps = std::max(1, int(std::ceil(std::abs(cfg.T) / cfg.dt - 1e-12)));
  const double sdt = cfg.T / nsteps;

  PropagationRun run;
  run.steps = nsteps;
  run.dt = sdt;

  GridState cur = init;
  const double norm0 = detail::vec_l2(cur.data);
  double prev_norm = norm0;

  auto record = [&](const GridState& s) {
    const double shell = boundary_shell_mass(s, cfg.wrap_cells);
    run.max_shell_mass = std::max(run.max_shell_mass, shell);
    require(shell <= cfg.wrap_tol, errkind::numerical,
            "probability reached the periodic boundary (shell mass " + std::to_string(shell) +
                "); enlarge the box or shorten the run");
    run.times.push_back(s.t);
    if (cfg.store_samples) run.samples.push_back(s);
    if (cfg.on_sample) cfg.on_sample(s);
  };
  record(cur);

  std::vector<std::vector<cplx>> basis;
  std::vector<cplx> work;
  for (int step = 1; step <= nsteps; ++step) {
    const double resid =
        detail::krylov_step(op, cur.data, sdt, h, cfg.krylov, basis, work);
    run.max_residual = std::max(run.max_residual, resid);
    require(resid <= cfg.resid_tol, errkind::numerical,
            "short-step propagator residual " + std::to_string(resid) +
                " above tolerance; reduce dt or increase the Krylov dimension");
    const double nn = detail::vec_l2(cur.data);
    const double drift = std::abs(nn - prev_norm) / norm0;
    run.max_step_drift = std::max(run.max_step_drift, drift);
    require(drift <= cfg.step_drift_tol, errkind::numerical,
            "propagation norm drifted by " + std::to_string(drift) + " in one step");
    prev_norm = nn;
    cur.t = init.t + step * sdt;
    if (step % cfg.stride == 0 || step == nsteps) record(cur);
  }
  run.total_drift = std::abs(prev_norm - norm0) / norm0;
  require(run.total_drift <= cfg.total_drift_tol, errkind::numerical,
          "propagation norm drifted by " + std::to_string(run.total_drift) + " overall");
  return run;
}

}  // namespace mbo
