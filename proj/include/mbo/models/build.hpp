#pragma once

// Model construction: validate the physical data, run the center-of-mass and
// gauge transformations, solve the electronic fiber problem, and assemble the
// full symbol p as a series of xi-polynomial coefficients in the truncated
// fiber basis. Two pathways produce the same FiberModel shape: the 2D neutral
// pair on a tensor grid, and 1D matrix-fiber surrogates whose symbol is
// xi^2 I + V(x) exactly.

#include <memory>
#include <string>
#include <vector>

#include "mbo/common.hpp"
#include "mbo/field.hpp"
#include "mbo/models/electronic.hpp"
#include "mbo/models/fiber.hpp"
#include "mbo/models/matrix_models.hpp"
#include "mbo/models/pair_frame.hpp"
#include "mbo/models/potentials.hpp"
#include "mbo/symbols/hseries.hpp"
#include "mbo/symbols/poly_symbol.hpp"

namespace mbo {

struct PairModelConfig {
  PairPhysics physics;
  Potential2D v12 = Potential2D::harmonic(1.0);
  Potential2D v_nuc = Potential2D::zero();  // external, nuclear coordinate
  Potential2D v_el = Potential2D::zero();   // external, electron coordinate
  UniformGrid ygrid;
  UniformGrid xgrid;
  std::vector<std::array<double, 2>> xi_range;
  int nfiber = 4;
  int band_lo = 0, band_hi = 0;
  int order = 2;  // number of h-orders beyond the leading one
  bool allow_same_sign = false;
  bool resolution_check = true;
  bool build_fiber = true;
  double gap_threshold = 0.05;
  std::array<double, 2> xref{0.0, 0.0};  // reference point for the fixed frame
};

struct MatrixModelConfig {
  MatrixModel model;
  double h = 0.1;
  UniformGrid xgrid;
  std::vector<std::array<double, 2>> xi_range;
  int band_lo = 0, band_hi = 0;
  int order = 2;
  double gap_threshold = 0.05;
};

struct FiberModel {
  bool pair_pathway = false;
  int d = 1;  // nuclear dimension
  int n = 0;  // fiber size
  int band_lo = 0, band_hi = 0;
  double h = 0.1;
  PairPhysics physics;
  MatrixModel matrix;
  UniformGrid xgrid;
  std::vector<std::array<double, 2>> xi_range;
  FiberBasis basis;
  GapRecord gap;
  HSeries<PolySymbol> p;
  MatrixField theta;  // k x n band-frame rows per x-point
  MatrixField m0;     // n x n frozen fiber matrix per x-point
  std::shared_ptr<ElectronicSolver> electronic;
  Potential2D v12, v_nuc, v_el;
  std::vector<std::string> warnings;
  bool same_sign_control = false;
  int order = 2;

  int band_size() const { return band_hi - band_lo + 1; }
};

// exp(-i e A(x).y) with A(x) = b R x; the unitary relating the gauged and
// ungauged center-of-mass frames, applied pointwise.
inline cplx gauge_phase(const PairPhysics& ph, double x1, double x2, double y1, double y2) {
  double axy = ph.b * (-x2 * y1 + x1 * y2);
  return std::polar(1.0, -ph.e_el * axy);
}

// Frozen external scalar part at nuclear position x, sampled on the y-grid.
inline std::vector<double> external_field_on_y(const ElectronicSolver& es,
                                               const Potential2D& v_nuc, const Potential2D& v_el,
                                               double x1, double x2) {
  long np = es.grid().npoints();
  std::vector<double> f(np, 0.0);
  if (!v_nuc.is_zero) {
    double vn = v_nuc.value(x1, x2);
    for (long p = 0; p < np; ++p) f[p] += vn;
  }
  if (!v_el.is_zero)
    for (long p = 0; p < np; ++p)
      f[p] += v_el.value(x1 + es.coord1()[p], x2 + es.coord2()[p]);
  return f;
}

// Lowest-n eigendata of the fiber operator at nuclear position x.
inline ElectronicEig electronic_eigensolve(const FiberModel& model, double x1, double x2,
                                           double resid_tol = 1e-8) {
  require(model.pair_pathway && model.electronic, errkind::config,
          "per-x electronic solve needs the grid pathway");
  auto vx = external_field_on_y(*model.electronic, model.v_nuc, model.v_el, x1, x2);
  return model.electronic->eigensolve(model.n, vx, resid_tol);
}

namespace detail {

inline void add_constant_term(PolySymbol& s, const PolySymbol::Key& k, const Mat& m) {
  MatrixField f(s.xgrid(), int(m.rows()), int(m.cols()));
  for (std::size_t p = 0; p < f.npoints(); ++p) f.at(p) = m;
  s.add_term(k, f);
}

// Fiber matrix elements of everything the quadratic form and the potential
// Taylor terms can ask for.
struct FiberMatrices {
  Mat id, d2, adotd, a2;
  std::array<Mat, 2> dm, am, ym;
  Mat v12m;
};

inline FiberMatrices fiber_matrices(const ElectronicSolver& es, const Potential2D& v12,
                                    const std::vector<std::vector<cplx>>& u,
                                    std::vector<std::string>& warnings) {
  int n = int(u.size());
  long np = es.grid().npoints();
  double w = es.cell_volume();
  FiberMatrices fm;
  fm.id = Mat::Identity(n, n);

  std::vector<std::vector<cplx>> d1(n), d2v(n);
  for (int j = 0; j < n; ++j) {
    d1[j] = es.apply_d(0, u[j]);
    d2v[j] = es.apply_d(1, u[j]);
  }
  std::vector<double> a1f(np), a2f(np), aa(np), y1f(np), y2f(np), v12f(np);
  for (long p = 0; p < np; ++p) {
    a1f[p] = es.a1(p);
    a2f[p] = es.a2(p);
    aa[p] = a1f[p] * a1f[p] + a2f[p] * a2f[p];
    y1f[p] = es.coord1()[p];
    y2f[p] = es.coord2()[p];
    v12f[p] = v12.value(y1f[p], y2f[p]);
  }

  auto dot = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    return wdot(a.data(), b.data(), np, w);
  };
  fm.d2 = Mat(n, n);
  fm.adotd = Mat(n, n);
  fm.dm[0] = Mat(n, n);
  fm.dm[1] = Mat(n, n);
  for (int j = 0; j < n; ++j) {
    auto dd = es.apply_d2(u[j]);
    std::vector<cplx> ad(np);
    for (long p = 0; p < np; ++p) ad[p] = a1f[p] * d1[j][p] + a2f[p] * d2v[j][p];
    for (int i = 0; i < n; ++i) {
      fm.d2(i, j) = dot(u[i], dd);
      fm.adotd(i, j) = dot(u[i], ad);
      fm.dm[0](i, j) = dot(u[i], d1[j]);
      fm.dm[1](i, j) = dot(u[i], d2v[j]);
    }
  }
  fm.am[0] = es.mat_mult(u, a1f);
  fm.am[1] = es.mat_mult(u, a2f);
  fm.ym[0] = es.mat_mult(u, y1f);
  fm.ym[1] = es.mat_mult(u, y2f);
  fm.a2 = es.mat_mult(u, aa);
  fm.v12m = es.mat_mult(u, v12f);

  // Truncation diagnostics: how much of each operator image leaves the span.
  auto check = [&](const std::vector<cplx>& img, const std::string& what, int j) {
    double loss = es.truncation_defect(u, img);
    if (loss > 0.05)
      warnings.push_back("fiber truncation: ||(1-P_n) " + what + " u_" + std::to_string(j + 1) +
                         "|| = " + std::to_string(loss));
  };
  for (int j = 0; j < n; ++j) {
    check(d1[j], "D_1", j);
    check(d2v[j], "D_2", j);
    std::vector<cplx> tmp(np);
    for (long p = 0; p < np; ++p) tmp[p] = a1f[p] * u[j][p];
    check(tmp, "A_1", j);
    for (long p = 0; p < np; ++p) tmp[p] = a2f[p] * u[j][p];
    check(tmp, "A_2", j);
  }
  return fm;
}

}  // namespace detail

// Assemble the symbol series for the neutral pair in the gauged frame. Every
// coefficient of the transformed quadratic form is a truncated polynomial in
// h; dividing the D_x-carrying terms by the matching power of h turns the
// operator into a series of xi-polynomial symbol coefficients. Potentials
// contribute their frozen part at order 0 and the -grad V . y Taylor shift at
// order 2 (the shift of the arguments is quadratic in h).
inline HSeries<PolySymbol> assemble_p_symbol(const PairModelConfig& cfg,
                                             const ElectronicSolver& es,
                                             const ElectronicEig& eig,
                                             std::vector<std::string>& warnings) {
  require(cfg.physics.gauged, errkind::config, "symbol assembly requires the gauged frame");
  require(cfg.physics.neutral(), errkind::config, "symbol assembly requires a neutral pair");
  int n = int(eig.vecs.size());
  int nord = cfg.order + 1;
  QuadForm<HPoly> qf = pair_quadratic_form_symbolic(cfg.physics);
  auto fm = detail::fiber_matrices(es, cfg.v12, eig.vecs, warnings);

  // The gauge removes every A(x)-coupled entry; a nonzero one here means the
  // frame derivation is broken, not that the model is unusual.
  for (int gi = 0; gi < 4; ++gi) {
    HPoly c = qf.at(gi, G_AX);
    for (int k = 0; k < 8; ++k)
      require(std::abs(c.at_order(k)) < 1e-13, errkind::assertion,
              "gauged pair retained an A(x) coupling");
  }

  HSeries<PolySymbol> p;
  for (int k = 0; k < nord; ++k) p.c.push_back(PolySymbol(cfg.xgrid, n, n, cfg.xi_range));

  PolySymbol::Key k0(2, 0);
  auto ekey = [](int a, int deg) {
    PolySymbol::Key k(2, 0);
    k[a] = deg;
    return k;
  };
  auto add = [&](const HPoly& c, int hshift, const PolySymbol::Key& key, const Mat& m) {
    HPoly cs = c.shift_down(hshift);
    for (int k = 0; k < nord; ++k) {
      double v = cs.at_order(k);
      if (std::abs(v) > 1e-15) detail::add_constant_term(p.c[k], key, Mat(v * m));
    }
  };

  for (int a = 0; a < 2; ++a) {
    add(qf.at(G_DX, G_DX), 2, ekey(a, 2), fm.id);
    add(qf.at(G_DX, G_DY), 1, ekey(a, 1), fm.dm[a]);
    add(qf.at(G_DX, G_AY), 1, ekey(a, 1), fm.am[a]);
  }
  add(qf.at(G_DY, G_DY), 0, k0, fm.d2);
  add(qf.at(G_DY, G_AY), 0, k0, fm.adotd);
  add(qf.at(G_AY, G_AY), 0, k0, fm.a2);
  add(HPoly::constant(1.0), 0, k0, fm.v12m);

  // Externals: frozen part at order 0, argument-shift Taylor term at order 2.
  bool have_ext = !cfg.v_nuc.is_zero || !cfg.v_el.is_zero;
  if (have_ext) {
    long nx = cfg.xgrid.npoints();
    MatrixField frozen(cfg.xgrid, n, n), taylor(cfg.xgrid, n, n);
    long np = es.grid().npoints();
    std::vector<double> f0(np), f2(np);
    for (long q = 0; q < nx; ++q) {
      auto idx = cfg.xgrid.unflatten(q);
      double x1 = cfg.xgrid.axes[0].point(idx[0]), x2 = cfg.xgrid.axes[1].point(idx[1]);
      for (long pp = 0; pp < np; ++pp) {
        double y1 = es.coord1()[pp], y2 = es.coord2()[pp];
        double v0 = 0.0, grad = 0.0;
        if (!cfg.v_nuc.is_zero) {
          v0 += cfg.v_nuc.value(x1, x2);
          grad += cfg.v_nuc.d1(x1, x2) * y1 + cfg.v_nuc.d2(x1, x2) * y2;
        }
        if (!cfg.v_el.is_zero) {
          v0 += cfg.v_el.value(x1 + y1, x2 + y2);
          grad += cfg.v_el.d1(x1 + y1, x2 + y2) * y1 + cfg.v_el.d2(x1 + y1, x2 + y2) * y2;
        }
        f0[pp] = v0;
        f2[pp] = grad;
      }
      frozen.at(q) = es.mat_mult(eig.vecs, f0);
      taylor.at(q) = es.mat_mult(eig.vecs, f2);
    }
    p.c[0].add_term(k0, frozen);
    if (cfg.order >= 2) {
      taylor *= cplx(-1.0);
      p.c[2].add_term(k0, taylor);
    }
  }

  for (int k = 0; k < nord; ++k) {
    PolySymbol herm = p.c[k] - p.c[k].adjoint();
    for (const auto& [key, f] : herm.terms())
      require(f.max_abs_entry() < 1e-10, errkind::assertion,
              "assembled symbol coefficient " + std::to_string(k) + " lost hermiticity");
  }
  return p;
}

inline FiberModel build_matrix_model(const MatrixModelConfig& cfg) {
  FiberModel fm;
  fm.pair_pathway = false;
  fm.d = 1;
  fm.n = cfg.model.n;
  fm.band_lo = cfg.band_lo;
  fm.band_hi = cfg.band_hi;
  fm.h = cfg.h;
  fm.matrix = cfg.model;
  fm.xgrid = cfg.xgrid;
  fm.xi_range = cfg.xi_range;
  fm.order = cfg.order;
  require(cfg.xgrid.rank() == 1, errkind::config, "matrix models use a 1D nuclear grid");
  require(0 <= cfg.band_lo && cfg.band_lo <= cfg.band_hi && cfg.band_hi < fm.n, errkind::config,
          "matrix model: bad band indices");

  fm.basis = phase_align_basis(fiber_basis_from_matrix_model(cfg.model, cfg.xgrid));
  fm.gap = gap_report(fm.basis, cfg.band_lo, cfg.band_hi, cfg.gap_threshold);

  long nx = cfg.xgrid.npoints();
  fm.m0 = MatrixField(cfg.xgrid, fm.n, fm.n);
  for (long p = 0; p < nx; ++p) fm.m0.at(p) = cfg.model.V(cfg.xgrid.axes[0].point((int)p));

  int k = fm.band_size();
  fm.theta = MatrixField(cfg.xgrid, k, fm.n);
  for (long p = 0; p < nx; ++p)
    fm.theta.at(p) = fm.basis.frames[p].block(0, cfg.band_lo, fm.n, k).adjoint();

  int nord = cfg.order + 1;
  for (int j = 0; j < nord; ++j) fm.p.c.push_back(PolySymbol(cfg.xgrid, fm.n, fm.n, cfg.xi_range));
  PolySymbol::Key kxi(1, 2), kc(1, 0);
  detail::add_constant_term(fm.p.c[0], kxi, Mat(Mat::Identity(fm.n, fm.n)));
  fm.p.c[0].add_term(kc, fm.m0);
  return fm;
}

inline FiberModel build_pair_model(const PairModelConfig& cfg) {
  FiberModel fm;
  fm.pair_pathway = true;
  fm.d = 2;
  fm.n = cfg.nfiber;
  fm.band_lo = cfg.band_lo;
  fm.band_hi = cfg.band_hi;
  fm.h = cfg.physics.h;
  fm.physics = cfg.physics;
  fm.xgrid = cfg.xgrid;
  fm.xi_range = cfg.xi_range;
  fm.v12 = cfg.v12;
  fm.v_nuc = cfg.v_nuc;
  fm.v_el = cfg.v_el;
  fm.order = cfg.order;

  require(cfg.physics.h > 0 && cfg.physics.h < 1, errkind::config,
          "pair model: h must lie in (0, 1)");
  require(cfg.physics.b >= 0, errkind::config, "pair model: negative field strength");
  if (!cfg.physics.neutral()) {
    require(cfg.allow_same_sign, errkind::config,
            "pair model: total charge must vanish (set the same-sign override for the "
            "control experiment)");
    fm.same_sign_control = true;
    fm.warnings.push_back("same-sign control pair: not neutral, straight-line reduction "
                          "does not apply");
  }
  require(cfg.xgrid.rank() == 2 && cfg.ygrid.rank() == 2, errkind::config,
          "pair model: nuclear and electronic grids must be two-dimensional");
  require(cfg.physics.gauged || !cfg.build_fiber, errkind::config,
          "pair model: the fiber basis lives in the gauged frame (x-independent "
          "electronic operator); disable the fiber build for ungauged work");
  require(0 <= cfg.band_lo && cfg.band_lo <= cfg.band_hi && cfg.band_hi < cfg.nfiber,
          errkind::config, "pair model: bad band indices");

  // Bounded-derivative sample check on the externals over the working boxes.
  for (const Potential2D* v : {&cfg.v_nuc, &cfg.v_el}) {
    if (v->is_zero) continue;
    double lo = std::min(cfg.xgrid.axes[0].lo + cfg.ygrid.axes[0].lo,
                         cfg.xgrid.axes[1].lo + cfg.ygrid.axes[1].lo);
    double hi = std::max(cfg.xgrid.axes[0].hi + cfg.ygrid.axes[0].hi,
                         cfg.xgrid.axes[1].hi + cfg.ygrid.axes[1].hi);
    double g = max_gradient_sample(*v, lo, hi);
    require(std::isfinite(g) && g < 1e4, errkind::config,
            "external potential fails the bounded-derivative sample check");
  }

  fm.electronic = std::make_shared<ElectronicSolver>(cfg.ygrid, cfg.physics.b, cfg.physics.e_el,
                                                     cfg.v12);
  if (!cfg.build_fiber) return fm;

  auto vref = external_field_on_y(*fm.electronic, cfg.v_nuc, cfg.v_el, cfg.xref[0], cfg.xref[1]);
  ElectronicEig eig = fm.electronic->eigensolve(cfg.nfiber, vref);

  if (cfg.resolution_check) {
    UniformGrid fine = cfg.ygrid;
    for (auto& ax : fine.axes) ax.n *= 2;
    ElectronicSolver esf(fine, cfg.physics.b, cfg.physics.e_el, cfg.v12);
    std::vector<std::vector<cplx>> seeds;
    for (const auto& u : eig.vecs) seeds.push_back(esf.refine_from(*fm.electronic, u));
    auto vreff = external_field_on_y(esf, cfg.v_nuc, cfg.v_el, cfg.xref[0], cfg.xref[1]);
    ElectronicEig fineeig = esf.eigensolve(cfg.nfiber, vreff, 1e-5, 160, &seeds);
    for (int j = 0; j < cfg.nfiber; ++j)
      require(std::abs(fineeig.evals[j] - eig.evals[j]) <= 1e-6, errkind::numerical,
              "electronic y-grid under-resolved: doubling moves level " + std::to_string(j + 1) +
                  " by " + std::to_string(std::abs(fineeig.evals[j] - eig.evals[j])));
  }

  // Frozen fiber matrix per nuclear grid point and its spectrum.
  long nx = cfg.xgrid.npoints();
  fm.m0 = MatrixField(cfg.xgrid, fm.n, fm.n);
  Mat diag = Mat::Zero(fm.n, fm.n);
  for (int i = 0; i < fm.n; ++i) diag(i, i) = eig.evals[i];
  Mat vref_m;
  bool have_ext = !cfg.v_nuc.is_zero || !cfg.v_el.is_zero;
  if (have_ext) vref_m = fm.electronic->mat_mult(eig.vecs, vref);

  fm.basis.xgrid = cfg.xgrid;
  fm.basis.n = fm.n;
  fm.basis.energies.resize(nx);
  Eigen::SelfAdjointEigenSolver<Mat> seig;
  for (long q = 0; q < nx; ++q) {
    Mat m = diag;
    if (have_ext) {
      auto idx = cfg.xgrid.unflatten(q);
      auto vx = external_field_on_y(*fm.electronic, cfg.v_nuc, cfg.v_el,
                                    cfg.xgrid.axes[0].point(idx[0]),
                                    cfg.xgrid.axes[1].point(idx[1]));
      m += fm.electronic->mat_mult(eig.vecs, vx) - vref_m;
    }
    fm.m0.at(q) = m;
    fm.basis.energies[q].resize(fm.n);
    if (have_ext) {
      seig.compute(m);
      for (int i = 0; i < fm.n; ++i) fm.basis.energies[q][i] = seig.eigenvalues()(i);
    } else {
      for (int i = 0; i < fm.n; ++i) fm.basis.energies[q][i] = eig.evals[i];
    }
  }
  fm.basis.ref_vectors = eig.vecs;
  fm.basis.y_cell = fm.electronic->cell_volume();
  fm.basis = phase_align_basis(fm.basis);
  for (const auto& u : fm.basis.ref_vectors) {
    DecayFit dfit = fm.electronic->decay_fit(u);
    require(dfit.alpha > 0, errkind::numerical,
            "fiber basis function shows no exponential decay on the y-box");
    fm.basis.decay.push_back(dfit);
  }

  fm.gap = gap_report(fm.basis, cfg.band_lo, cfg.band_hi, cfg.gap_threshold);

  if (cfg.physics.neutral() && cfg.physics.gauged)
    fm.p = assemble_p_symbol(cfg, *fm.electronic, eig, fm.warnings);

  // Band frame rows: the fixed reference frame makes theta the coordinate
  // projection onto the band levels.
  int k = fm.band_size();
  fm.theta = MatrixField(cfg.xgrid, k, fm.n);
  Mat th = Mat::Zero(k, fm.n);
  for (int i = 0; i < k; ++i) th(i, cfg.band_lo + i) = 1.0;
  for (long q = 0; q < nx; ++q) fm.theta.at(q) = th;

  // Consistency: the assembled frozen coefficient must reproduce the fiber
  // spectrum at the reference point.
  if (!fm.p.c.empty()) {
    const MatrixField* f = fm.p.c[0].term(PolySymbol::Key(2, 0));
    require(f != nullptr, errkind::assertion, "assembled symbol lost its frozen part");
    long qref = 0;  // compare x-independent part: any point works when V_i = 0
    Mat err = Mat(f->at(qref)) - Mat(fm.m0.at(qref));
    if (!have_ext)
      require(err.cwiseAbs().maxCoeff() < 1e-7, errkind::assertion,
              "assembled frozen coefficient disagrees with the fiber spectrum");
  }
  return fm;
}

}  // namespace mbo
