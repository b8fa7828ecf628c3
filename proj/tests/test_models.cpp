#include <catch2/catch_amalgamated.hpp>

#include "mbo/models/build.hpp"

using namespace mbo;

namespace {

UniformGrid square_grid(double half, int n) {
  return UniformGrid{{AxisSpec{-half, half, n}, AxisSpec{-half, half, n}}};
}

UniformGrid line_grid(double half, int n) { return UniformGrid{{AxisSpec{-half, half, n}}}; }

// Closed-form levels of D^2 + (b^2 + gamma/2)|y|^2 + 2 b L_z (electron charge
// -1): (2n + |l| + 1) Omega - 2 b l with Omega = sqrt(4 b^2 + 2 gamma).
double fiber_level(double b, double gamma, int n, int l) {
  double om = std::sqrt(4.0 * b * b + 2.0 * gamma);
  return (2 * n + std::abs(l) + 1) * om - 2.0 * b * l;
}

PairPhysics neutral_physics(double h = 0.3, double b = 1.0) {
  PairPhysics ph;
  ph.h = h;
  ph.b = b;
  ph.e_el = -1.0;
  ph.e_nuc = 1.0;
  ph.gauged = true;
  return ph;
}

// Shared expensive build: neutral pair, harmonic binding, no externals.
const FiberModel& neutral_model() {
  static FiberModel m = [] {
    PairModelConfig cfg;
    cfg.physics = neutral_physics();
    cfg.v12 = Potential2D::harmonic(1.0);
    cfg.ygrid = square_grid(6.0, 32);
    cfg.xgrid = square_grid(4.0, 8);
    cfg.xi_range = {{-1.0, 1.0}, {-1.0, 1.0}};
    cfg.nfiber = 4;
    cfg.order = 2;
    return build_pair_model(cfg);
  }();
  return m;
}

Mat quad_mult(const ElectronicSolver& es, const std::vector<std::vector<cplx>>& u,
              const std::function<double(double, double)>& f) {
  std::vector<double> field(es.grid().npoints());
  for (long p = 0; p < es.grid().npoints(); ++p)
    field[p] = f(es.coord1()[p], es.coord2()[p]);
  return es.mat_mult(u, field);
}

}  // namespace

TEST_CASE("center-of-mass and gauge frame derivation") {
  PairPhysics ph = neutral_physics(0.3);
  double h2 = 0.09, e = ph.e_el;

  SECTION("numeric coefficients of the gauged neutral pair") {
    QuadForm<double> qf = pair_quadratic_form(ph);
    double invm = h2 / (1.0 - h2);
    REQUIRE(std::abs(qf.at(G_DX, G_DX) - h2) < 1e-15);
    REQUIRE(std::abs(qf.at(G_DX, G_AY) - (-4.0 * e * h2)) < 1e-15);
    REQUIRE(std::abs(qf.at(G_DX, G_DY)) < 1e-15);
    REQUIRE(std::abs(qf.at(G_DY, G_DY) - 1.0 / (1.0 - h2)) < 1e-15);
    // L^2 + (h^2/(1-h^2)) (L + 2eA)^2 written out in generator products
    REQUIRE(std::abs(qf.at(G_DY, G_AY) - (-2.0 * e + invm * 2.0 * e)) < 1e-14);
    REQUIRE(std::abs(qf.at(G_AY, G_AY) - (e * e + invm * e * e)) < 1e-14);
    REQUIRE(x_coupling_free(qf));

    PairPhysics ung = ph;
    ung.gauged = false;
    REQUIRE_FALSE(x_coupling_free(pair_quadratic_form(ung)));

    PairPhysics same = ph;
    same.e_nuc = -1.0;  // same sign as the electron: A(x) survives the gauge
    REQUIRE_FALSE(x_coupling_free(pair_quadratic_form(same)));
  }

  SECTION("exact h-grading of the coefficients") {
    QuadForm<HPoly> qs = pair_quadratic_form_symbolic(ph);
    HPoly cxx = qs.at(G_DX, G_DX);
    for (int k = 0; k < 8; ++k)
      REQUIRE(std::abs(cxx.at_order(k) - (k == 2 ? 1.0 : 0.0)) < 1e-13);
    HPoly cxa = qs.at(G_DX, G_AY);
    for (int k = 0; k < 8; ++k)
      REQUIRE(std::abs(cxa.at_order(k) - (k == 2 ? -4.0 * e : 0.0)) < 1e-13);
    HPoly cxd = qs.at(G_DX, G_DY);
    for (int k = 0; k < 8; ++k) REQUIRE(std::abs(cxd.at_order(k)) < 1e-13);

    // gradings divide exactly and evaluate back to the numeric form
    REQUIRE(std::abs(cxx.shift_down(2).at_order(0) - 1.0) < 1e-13);
    REQUIRE_THROWS_AS(qs.at(G_DY, G_DY).shift_down(1), mbo::error);
    // the symbolic 1/m is the geometric series cut at h^6, so evaluation
    // matches the exact numeric form up to h^8
    for (double hh : {0.3, 0.2, 0.1}) {
      QuadForm<double> qn = pair_quadratic_form(neutral_physics(hh));
      double bound = 3.0 * std::pow(hh, 8) + 1e-14;
      for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
          REQUIRE(std::abs(qs.at(i, j).eval(hh) - qn.at(i, j)) <= bound);
    }
  }

  SECTION("gauge phase factor") {
    REQUIRE(std::abs(gauge_phase(ph, 0.0, 0.0, 1.3, -0.4) - 1.0) < 1e-15);
    cplx z = gauge_phase(ph, 0.7, -1.1, 0.4, 2.0);
    REQUIRE(std::abs(std::abs(z) - 1.0) < 1e-15);
    REQUIRE(std::abs(z * std::conj(z) - 1.0) < 1e-15);
    PairPhysics b0 = ph;
    b0.b = 0.0;
    REQUIRE(std::abs(gauge_phase(b0, 0.7, -1.1, 0.4, 2.0) - 1.0) < 1e-15);
  }
}

TEST_CASE("matrix fiber basis, alignment, gap analysis") {
  UniformGrid xg = line_grid(8.0, 64);

  SECTION("eigendata matches the analytic model") {
    MatrixModel model = preset_mixing();
    FiberBasis raw = fiber_basis_from_matrix_model(model, xg);
    for (long p = 0; p < xg.npoints(); ++p) {
      auto ev = model.evals(xg.axes[0].point((int)p));
      REQUIRE(std::abs(raw.energies[p][0] - ev[0]) < 1e-12);
      REQUIRE(std::abs(raw.energies[p][1] - ev[1]) < 1e-12);
    }
    REQUIRE(orthonormality_defect(raw) < 1e-10);

    FiberBasis aligned = phase_align_basis(raw);
    REQUIRE(aligned.aligned);
    REQUIRE(aligned.align_bound > 0.0);
    REQUIRE(aligned.align_bound < 10.0);
    // aligned frame equals the analytic smooth eigenframe up to one global
    // phase per level
    for (int j = 0; j < 2; ++j) {
      cplx z0 = aligned.frames[0].col(j).dot(Mat(model.frame(xg.axes[0].point(0))).col(j));
      cplx ph = z0 / std::abs(z0);
      double worst = 0.0;
      for (long p = 0; p < xg.npoints(); ++p) {
        Mat af = model.frame(xg.axes[0].point((int)p));
        worst = std::max(worst, (aligned.frames[p].col(j) * ph - af.col(j)).norm());
      }
      REQUIRE(worst < 1e-6);
    }
    // idempotence
    FiberBasis twice = phase_align_basis(aligned);
    for (long p = 0; p < xg.npoints(); ++p)
      REQUIRE((twice.frames[p] - aligned.frames[p]).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("constant fiber: alignment is the identity") {
    FiberBasis b = phase_align_basis(fiber_basis_from_matrix_model(preset_constant(), xg));
    for (long p = 0; p < xg.npoints(); ++p)
      REQUIRE((b.frames[p] - b.frames[0]).cwiseAbs().maxCoeff() < 1e-14);

    GapRecord g = gap_report(b, 0, 0);
    REQUIRE(std::abs(g.pointwise_gap - 2.0) < 1e-12);
    REQUIRE(std::abs(g.center - 0.0) < 1e-12);
    REQUIRE(std::abs(g.radius - 0.5) < 1e-12);
    REQUIRE(std::abs(g.clearance - 0.5) < 1e-12);
  }

  SECTION("x-dependent gap matches a brute-force scan") {
    MatrixModel model = preset_trap();
    FiberBasis b = fiber_basis_from_matrix_model(model, xg);
    GapRecord g = gap_report(b, 0, 0);
    double scan = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4096; ++i) {
      double x = -8.0 + 16.0 * i / 4096.0;
      auto ev = model.evals(x);
      scan = std::min(scan, ev[1] - ev[0]);
    }
    REQUIRE(std::abs(g.pointwise_gap - scan) < 1e-8);
  }

  SECTION("two-band group of the three-level model") {
    FiberBasis b = fiber_basis_from_matrix_model(preset_three_level(), xg);
    GapRecord g = gap_report(b, 0, 1);
    REQUIRE(std::abs(g.band_min - (-1.2)) < 1e-9);
    REQUIRE(std::abs(g.band_max - (-0.4)) < 1e-9);
    REQUIRE(std::abs(g.center - (-0.8)) < 1e-9);
    REQUIRE(std::abs(g.clearance - 0.6) < 1e-9);
    REQUIRE(std::abs(g.radius - 1.0) < 1e-9);
  }

  SECTION("crossing model is rejected with the numerical exit code") {
    FiberBasis b = fiber_basis_from_matrix_model(preset_crossing(), xg);
    try {
      gap_report(b, 0, 0);
      FAIL("crossing model must be rejected");
    } catch (const mbo::error& e) {
      REQUIRE(e.exit_code() == 3);
      REQUIRE(std::string(e.what()).find("crossing") != std::string::npos);
    }
  }
}

TEST_CASE("electronic fiber spectra") {
  SECTION("harmonic fiber without field, degenerate first excited pair") {
    ElectronicSolver es(square_grid(6.0, 64), 0.0, -1.0, Potential2D::harmonic(1.0));
    auto eig = es.eigensolve(3);
    REQUIRE(std::abs(eig.evals[0] - 1.4142135623730951) < 1e-6);
    REQUIRE(std::abs(eig.evals[1] - 2.8284271247461903) < 1e-6);
    REQUIRE(std::abs(eig.evals[2] - 2.8284271247461903) < 1e-6);
    for (double r : eig.residuals) REQUIRE(r <= 1e-8);
    // deflation found two orthogonal copies of the degenerate level
    cplx ov = detail::wdot(eig.vecs[1].data(), eig.vecs[2].data(), es.grid().npoints(),
                           es.cell_volume());
    REQUIRE(std::abs(ov) < 1e-8);
  }

  SECTION("magnetic harmonic fiber, unit field") {
    ElectronicSolver es(square_grid(6.0, 64), 1.0, -1.0, Potential2D::harmonic(1.0));
    auto eig = es.eigensolve(4);
    REQUIRE(std::abs(eig.evals[0] - 2.449489742783178) < 1e-6);   // sqrt(6)
    REQUIRE(std::abs(eig.evals[1] - 2.898979485566356) < 1e-6);   // 2 sqrt(6) - 2
    REQUIRE(std::abs(eig.evals[2] - 3.3484692283495345) < 1e-6);  // 3 sqrt(6) - 4
    REQUIRE(std::abs(eig.evals[3] - 3.7979589711327115) < 1e-6);  // 4 sqrt(6) - 6
    for (double r : eig.residuals) REQUIRE(r <= 1e-8);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        cplx ov = detail::wdot(eig.vecs[i].data(), eig.vecs[j].data(), es.grid().npoints(),
                               es.cell_volume());
        REQUIRE(std::abs(ov - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    for (const auto& u : eig.vecs) {
      DecayFit f = es.decay_fit(u);
      REQUIRE(f.alpha > 0.3);
    }
    for (int n = 0; n < 4; ++n) {
      double lvl[] = {fiber_level(1.0, 1.0, 0, 0), fiber_level(1.0, 1.0, 0, 1),
                      fiber_level(1.0, 1.0, 0, 2), fiber_level(1.0, 1.0, 0, 3)};
      REQUIRE(std::abs(eig.evals[n] - lvl[n]) < 1e-6);
    }
  }

  SECTION("magnetic harmonic fiber, quarter field") {
    ElectronicSolver es(square_grid(6.0, 64), 0.25, -1.0, Potential2D::harmonic(1.0));
    auto eig = es.eigensolve(3);
    REQUIRE(std::abs(eig.evals[0] - 1.5) < 1e-6);
    REQUIRE(std::abs(eig.evals[1] - 2.5) < 1e-6);
    REQUIRE(std::abs(eig.evals[2] - 3.5) < 1e-6);
  }

  SECTION("landau-like cluster under weak confinement") {
    // Nearly free magnetic fiber: a tiny harmonic term pins the states away
    // from the periodic seam (A = bRy is not periodic, so the bare-torus
    // spectrum carries a documented discretization caveat). The lowest levels
    // then form a dense ladder of spacing Omega - 2b ~ 0.005 just above the
    // Landau energy 2b.
    ElectronicSolver es(square_grid(8.0, 64), 1.0, -1.0, Potential2D::harmonic(0.01));
    auto eig = es.eigensolve(2, {}, 3e-2, 260);
    REQUIRE(std::abs(eig.evals[0] - 2.0) < 0.15);
    REQUIRE(std::abs(eig.evals[1] - 2.0) < 0.15);
    REQUIRE(std::abs(eig.evals[1] - eig.evals[0]) < 0.05);
  }

  SECTION("spectral refinement reproduces the fine-grid ground state") {
    ElectronicSolver coarse(square_grid(6.0, 32), 1.0, -1.0, Potential2D::harmonic(1.0));
    ElectronicSolver fine(square_grid(6.0, 64), 1.0, -1.0, Potential2D::harmonic(1.0));
    auto ec = coarse.eigensolve(1);
    auto ef = fine.eigensolve(1);
    auto refined = fine.refine_from(coarse, ec.vecs[0]);
    cplx ov = detail::wdot(refined.data(), ef.vecs[0].data(), fine.grid().npoints(),
                           fine.cell_volume());
    REQUIRE(std::abs(std::abs(ov) - 1.0) < 1e-6);
  }
}

TEST_CASE("pair model build and symbol assembly") {
  const FiberModel& m = neutral_model();
  const double e = -1.0;
  PolySymbol::Key k00{0, 0}, k10{1, 0}, k01{0, 1}, k20{2, 0}, k02{0, 2};

  SECTION("band gap and contour data") {
    double gap = fiber_level(1, 1, 0, 1) - fiber_level(1, 1, 0, 0);  // sqrt(6) - 2
    REQUIRE(std::abs(m.gap.pointwise_gap - gap) < 1e-6);
    REQUIRE(std::abs(m.gap.center - m.basis.energies[0][0]) < 1e-12);
    REQUIRE(std::abs(m.gap.radius - 0.25 * gap) < 1e-6);
  }

  SECTION("leading coefficient is xi^2 plus the fiber spectrum") {
    REQUIRE(m.p.order() == 2);
    const MatrixField* q2 = m.p.c[0].term(k20);
    const MatrixField* q2b = m.p.c[0].term(k02);
    REQUIRE(q2 != nullptr);
    REQUIRE(q2b != nullptr);
    for (std::size_t p = 0; p < q2->npoints(); ++p) {
      REQUIRE((Mat(q2->at(p)) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE((Mat(q2b->at(p)) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    }
    const MatrixField* m0 = m.p.c[0].term(k00);
    REQUIRE(m0 != nullptr);
    Mat diag = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) diag(i, i) = m.basis.energies[0][i];
    REQUIRE((Mat(m0->at(0)) - diag).cwiseAbs().maxCoeff() < 1e-7);
    // no xi-linear term at leading order
    REQUIRE(m.p.c[0].term(k10) == nullptr);
    REQUIRE(m.p.c[0].term(k01) == nullptr);
  }

  SECTION("first-order coefficient is the magnetic coupling, and only it") {
    REQUIRE(m.p.c[1].term(k00) == nullptr);
    REQUIRE(m.p.c[1].term(k20) == nullptr);
    const MatrixField* c1 = m.p.c[1].term(k10);
    const MatrixField* c2 = m.p.c[1].term(k01);
    REQUIRE(c1 != nullptr);
    REQUIRE(c2 != nullptr);
    // independent quadrature of -4e <u_i| A(y)_a |u_j>
    const auto& u = m.basis.ref_vectors;
    double b = m.physics.b;
    Mat a1 = quad_mult(*m.electronic, u, [b](double, double y2) { return -b * y2; });
    Mat a2 = quad_mult(*m.electronic, u, [b](double y1, double) { return b * y1; });
    REQUIRE((Mat(c1->at(0)) - Mat(-4.0 * e * a1)).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((Mat(c2->at(0)) - Mat(-4.0 * e * a2)).cwiseAbs().maxCoeff() < 1e-9);
    for (int i = 0; i < 4; ++i) {  // diagonal entries real and vanishing here
      REQUIRE(std::abs(std::imag(Mat(c1->at(0))(i, i))) < 1e-10);
      REQUIRE(std::abs(Mat(c1->at(0))(i, i)) < 1e-8);
    }
  }

  SECTION("second-order coefficient matches (L + 2eA)^2 in the fiber basis") {
    REQUIRE(m.p.c[2].term(k10) == nullptr);
    REQUIRE(m.p.c[2].term(k20) == nullptr);
    const MatrixField* c0 = m.p.c[2].term(k00);
    REQUIRE(c0 != nullptr);
    const auto& es = *m.electronic;
    const auto& u = m.basis.ref_vectors;
    int n = 4;
    Mat d2(n, n), adotd(n, n);
    for (int j = 0; j < n; ++j) {
      auto dd = es.apply_d2(u[j]);
      auto d1 = es.apply_d(0, u[j]);
      auto dy2 = es.apply_d(1, u[j]);
      std::vector<cplx> ad(es.grid().npoints());
      for (long p = 0; p < es.grid().npoints(); ++p)
        ad[p] = es.a1(p) * d1[p] + es.a2(p) * dy2[p];
      for (int i = 0; i < n; ++i) {
        d2(i, j) = detail::wdot(u[i].data(), dd.data(), es.grid().npoints(), es.cell_volume());
        adotd(i, j) = detail::wdot(u[i].data(), ad.data(), es.grid().npoints(), es.cell_volume());
      }
    }
    Mat a2m = quad_mult(es, u, [&](double y1, double y2) {
      double a1v = -m.physics.b * y2, a2v = m.physics.b * y1;
      return a1v * a1v + a2v * a2v;
    });
    Mat expect = d2 + 2.0 * e * adotd + e * e * a2m;  // (D + eA)^2
    REQUIRE((Mat(c0->at(0)) - expect).cwiseAbs().maxCoeff() < 1e-9);
  }

  SECTION("coefficients are hermitian fields") {
    for (const auto& coeff : m.p.c)
      for (const auto& [key, f] : coeff.terms()) {
        MatrixField d = f;
        d -= f.adjoint();
        REQUIRE(d.max_abs_entry() < 1e-10);
      }
  }

  SECTION("band frame rows and frozen matrix") {
    REQUIRE(m.theta.rows() == 1);
    REQUIRE(m.theta.cols() == 4);
    Mat th = m.theta.at(0);
    REQUIRE(std::abs(th(0, 0) - 1.0) < 1e-14);
    for (int j = 1; j < 4; ++j) REQUIRE(std::abs(th(0, j)) < 1e-14);
    for (const DecayFit& f : m.basis.decay) REQUIRE(f.alpha > 0.3);
  }

  SECTION("per-x electronic solve agrees with the frozen spectrum") {
    auto eig = electronic_eigensolve(m, 0.0, 0.0);
    for (int i = 0; i < 4; ++i)
      REQUIRE(std::abs(eig.evals[i] - m.basis.energies[0][i]) < 1e-9);
  }

  SECTION("model validation refusals") {
    PairModelConfig cfg;
    cfg.physics = neutral_physics();
    cfg.ygrid = square_grid(6.0, 32);
    cfg.xgrid = square_grid(4.0, 8);
    cfg.xi_range = {{-1.0, 1.0}, {-1.0, 1.0}};
    cfg.build_fiber = false;

    PairModelConfig same = cfg;
    same.physics.e_nuc = -1.0;
    try {
      build_pair_model(same);
      FAIL("charge imbalance must be refused without the override");
    } catch (const mbo::error& err) {
      REQUIRE(err.exit_code() == 2);
    }
    same.allow_same_sign = true;
    FiberModel control = build_pair_model(same);
    REQUIRE(control.same_sign_control);
    REQUIRE_FALSE(control.warnings.empty());
    REQUIRE(control.p.c.empty());

    PairModelConfig ung = cfg;
    ung.physics.gauged = false;
    ung.build_fiber = true;
    REQUIRE_THROWS_AS(build_pair_model(ung), mbo::error);
  }
}

TEST_CASE("external potential enters the symbol through its frozen and Taylor parts") {
  PairModelConfig cfg;
  cfg.physics = neutral_physics();
  cfg.v12 = Potential2D::harmonic(1.0);
  // periodic over the x-box; amplitude small enough that the shifted band
  // ranges stay separated across x (the fiber gap is about 0.45)
  cfg.v_nuc = Potential2D::cosine1(0.1, 8.0);
  cfg.ygrid = square_grid(6.0, 32);
  cfg.xgrid = square_grid(4.0, 8);
  cfg.xi_range = {{-1.0, 1.0}, {-1.0, 1.0}};
  cfg.nfiber = 3;
  cfg.order = 2;
  cfg.resolution_check = false;
  FiberModel m = build_pair_model(cfg);
  const auto& es = *m.electronic;
  const auto& u = m.basis.ref_vectors;

  long q = cfg.xgrid.flatten({2, 1});
  double x1 = cfg.xgrid.axes[0].point(2), x2 = cfg.xgrid.axes[1].point(1);

  // frozen part: fiber spectrum shifted by V(x) (V depends on x only)
  const MatrixField* m0 = m.p.c[0].term(PolySymbol::Key{0, 0});
  REQUIRE(m0 != nullptr);
  Mat frozen = Mat(m0->at(q));
  double vshift = cfg.v_nuc.value(x1, x2) - cfg.v_nuc.value(0.0, 0.0);
  Mat base = Mat(m0->at(cfg.xgrid.flatten({0, 0})));
  double v00 = cfg.v_nuc.value(cfg.xgrid.axes[0].point(0), cfg.xgrid.axes[1].point(0)) -
               cfg.v_nuc.value(0.0, 0.0);
  REQUIRE(((frozen - base) - (vshift - v00) * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  // Taylor part at order two: finite differences of <V(x - h^2 y)> in h,
  // Richardson-extrapolated to kill the h^2 and h^4 remainders.
  auto vmat = [&](double h) {
    return quad_mult(es, u, [&](double y1, double y2) {
      return cfg.v_nuc.value(x1 - h * h * y1, x2 - h * h * y2);
    });
  };
  Mat m_0 = vmat(0.0);
  auto dq = [&](double h) { return Mat((vmat(h) - m_0) / (h * h)); };
  Mat e1 = (4.0 * dq(0.04) - dq(0.08)) / 3.0;
  Mat e2 = (4.0 * dq(0.02) - dq(0.04)) / 3.0;
  Mat taylor_fd = (16.0 * e2 - e1) / 15.0;

  const MatrixField* c2 = m.p.c[2].term(PolySymbol::Key{0, 0});
  REQUIRE(c2 != nullptr);
  // subtract the V-independent kinetic part, measured on the no-external model
  const FiberModel& base_model = neutral_model();
  // fiber sizes differ (3 vs 4); recompute the kinetic block directly instead
  int n = 3;
  Mat d2(n, n), adotd(n, n);
  for (int j = 0; j < n; ++j) {
    auto dd = es.apply_d2(u[j]);
    auto d1 = es.apply_d(0, u[j]);
    auto dy2 = es.apply_d(1, u[j]);
    std::vector<cplx> ad(es.grid().npoints());
    for (long p = 0; p < es.grid().npoints(); ++p)
      ad[p] = es.a1(p) * d1[p] + es.a2(p) * dy2[p];
    for (int i = 0; i < n; ++i) {
      d2(i, j) = detail::wdot(u[i].data(), dd.data(), es.grid().npoints(), es.cell_volume());
      adotd(i, j) = detail::wdot(u[i].data(), ad.data(), es.grid().npoints(), es.cell_volume());
    }
  }
  Mat a2m = quad_mult(es, u, [&](double y1, double y2) {
    double a1v = -cfg.physics.b * y2, a2v = cfg.physics.b * y1;
    return a1v * a1v + a2v * a2v;
  });
  Mat kinetic = d2 - 2.0 * adotd + a2m;  // (D + eA)^2 at e = -1
  Mat assembled_taylor = Mat(c2->at(q)) - kinetic;
  REQUIRE((assembled_taylor - taylor_fd).cwiseAbs().maxCoeff() < 1e-8);
  (void)base_model;
}

TEST_CASE("matrix model build produces the exact polynomial symbol") {
  MatrixModelConfig cfg;
  cfg.model = preset_trap();
  cfg.h = 0.1;
  cfg.xgrid = line_grid(8.0, 64);
  cfg.xi_range = {{-1.5, 1.5}};
  cfg.order = 2;
  FiberModel m = build_matrix_model(cfg);

  REQUIRE_FALSE(m.pair_pathway);
  REQUIRE(m.p.order() == 2);
  const MatrixField* kin = m.p.c[0].term(PolySymbol::Key{2});
  const MatrixField* pot = m.p.c[0].term(PolySymbol::Key{0});
  REQUIRE(kin != nullptr);
  REQUIRE(pot != nullptr);
  for (long p = 0; p < cfg.xgrid.npoints(); ++p) {
    double x = cfg.xgrid.axes[0].point((int)p);
    REQUIRE((Mat(kin->at(p)) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((Mat(pot->at(p)) - cfg.model.V(x)).cwiseAbs().maxCoeff() < 1e-12);
  }
  REQUIRE(m.p.c[1].terms().empty());
  REQUIRE(m.p.c[2].terms().empty());

  // theta rows are the aligned band frame, orthonormal at every point
  for (long p = 0; p < cfg.xgrid.npoints(); ++p) {
    Mat th = m.theta.at(p);
    REQUIRE((Mat(th * th.adjoint()) - Mat::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  }
  REQUIRE(std::abs(m.gap.pointwise_gap - 2.0) < 1e-6);
}
