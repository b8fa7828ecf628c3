#pragma once

// Convergence certificates for the projection series: the idempotency defect
// pi # pi - pi and the commutation defect p # pi - pi # p, evaluated as
// numeric symbols at concrete h values. Both are O(h^{N+1}) when the series
// is built correctly, so the log-log slope over a decreasing h ladder is the
// end-to-end correctness check of the whole symbol calculus.

#include "mbo/superadiabatic/projection.hpp"

namespace mbo {

struct DefectReport {
  std::vector<double> h;
  std::vector<double> idempotency;  // sup spectral norms at each h
  std::vector<double> commutation;
  double idem_slope = 0.0, idem_resid = 0.0;
  double comm_slope = 0.0, comm_resid = 0.0;
  bool idem_floored = false, comm_floored = false;  // all values below 1e-8
};

namespace detail {

// Largest pointwise deviation of the numeric symbol over the x-grid and a xi
// sample lattice.
inline double numeric_sup(const PolySymbol& s, int xi_samples) { return s.norm_sup(xi_samples); }

inline void fit_defect(const std::vector<double>& hs, const std::vector<double>& vals,
                       double& slope, double& resid, bool& floored) {
  floored = true;
  for (double v : vals)
    if (v >= 1e-8) floored = false;
  if (floored) {
    slope = 0.0;
    resid = 0.0;
    return;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    lx.push_back(std::log(hs[i]));
    ly.push_back(std::log(std::max(vals[i], 1e-300)));
  }
  auto fit = linear_fit(lx, ly);
  slope = fit.first;
  resid = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i)
    resid = std::max(resid, std::abs(fit.first * lx[i] + fit.second - ly[i]));
}

}  // namespace detail

// Measures the raw series defects through order N + 2: orders <= N cancel by
// construction, so the numeric evaluation at h is dominated by the first
// surviving orders and decays like h^{N+1}.
inline DefectReport defect_report(const HSeries<PolySymbol>& p, const HSeries<PolySymbol>& pi,
                                  int N, const std::vector<double>& hs, int xi_samples = 5) {
  require(hs.size() >= 2, errkind::config, "defect report needs at least two h values");
  int dim = p.c[0].dim();
  int M = N + 2;
  HSeries<PolySymbol> idem = moyal_product(truncate(pi, M), truncate(pi, M), M, dim)
                             - truncate(pi, M);
  HSeries<PolySymbol> comm = moyal_commutator(truncate(p, M), truncate(pi, M), M, dim);

  DefectReport rep;
  rep.h = hs;
  for (double h : hs) {
    rep.idempotency.push_back(detail::numeric_sup(eval_at_h(idem, h), xi_samples));
    rep.commutation.push_back(detail::numeric_sup(eval_at_h(comm, h), xi_samples));
  }
  detail::fit_defect(hs, rep.idempotency, rep.idem_slope, rep.idem_resid, rep.idem_floored);
  detail::fit_defect(hs, rep.commutation, rep.comm_slope, rep.comm_resid, rep.comm_floored);
  return rep;
}

}  // namespace mbo
