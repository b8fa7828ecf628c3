#include <catch2/catch_amalgamated.hpp>

#include "mbo/superadiabatic/defect.hpp"
#include "mbo/superadiabatic/intertwiner.hpp"
#include "mbo/superadiabatic/purify.hpp"

using namespace mbo;

namespace {

FiberModel mixing_model(int n = 128) {
  MatrixModelConfig cfg;
  cfg.model = preset_mixing();
  cfg.xgrid = UniformGrid{{AxisSpec{-8.0, 8.0, n}}};
  cfg.xi_range = {{-1.0, 1.0}};
  cfg.order = 2;
  return build_matrix_model(cfg);
}

FiberModel constant_model() {
  MatrixModelConfig cfg;
  cfg.model = preset_constant();
  cfg.xgrid = UniformGrid{{AxisSpec{-8.0, 8.0, 32}}};
  cfg.xi_range = {{-1.0, 1.0}};
  cfg.order = 2;
  return build_matrix_model(cfg);
}

const FiberModel& pair_model() {
  static FiberModel m = [] {
    PairModelConfig cfg;
    cfg.physics.h = 0.3;
    cfg.physics.b = 1.0;
    cfg.v12 = Potential2D::harmonic(1.0);
    cfg.ygrid = UniformGrid{{AxisSpec{-6.0, 6.0, 32}, AxisSpec{-6.0, 6.0, 32}}};
    cfg.xgrid = UniformGrid{{AxisSpec{-4.0, 4.0, 8}, AxisSpec{-4.0, 4.0, 8}}};
    cfg.xi_range = {{-1.0, 1.0}, {-1.0, 1.0}};
    cfg.nfiber = 4;
    cfg.order = 2;
    cfg.resolution_check = false;  // covered by the model-layer suite
    return build_pair_model(cfg);
  }();
  return m;
}

double series_sup(const HSeries<PolySymbol>& s, int from = 0) {
  double best = 0.0;
  for (int j = from; j <= s.order(); ++j) best = std::max(best, s.c[j].norm_sup());
  return best;
}

}  // namespace

TEST_CASE("contour resolvent building blocks") {
  FiberModel m = mixing_model();
  Contour ct = contour_from_gap(m.gap, 128);
  NodeSymbol q0 = resolvent_q0(m.m0, ct, m.p.c[0].xi_range());

  SECTION("order-zero resolvent matches the eigendecomposition") {
    for (int mm : {0, 5, 17, 31}) {
      cplx w = ct.point(mm);
      for (std::size_t p = 0; p < m.m0.npoints(); p += 7) {
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m.m0.at(p)));
        Mat expect = Mat::Zero(2, 2);
        for (int j = 0; j < 2; ++j)
          expect += es.eigenvectors().col(j) * es.eigenvectors().col(j).adjoint() /
                    (es.eigenvalues()(j) - w);
        Mat got = q0.node(mm).term(PolySymbol::Key{0})->at(p);
        REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  SECTION("node chain rule reproduces the kinetic xi-derivative") {
    // s0 = M0 - w has no explicit xi dependence; at fixed z its xi-derivative
    // must recover d(xi^2)/dxi = 2 xi.
    HSeries<NodeSymbol> s = node_series_from_symbol(m.p, m.m0, ct, 2);
    NodeSymbol der = s.c[0].dxi(0);
    for (int mm : {0, 9, 20}) {
      const MatrixField* lin = der.node(mm).term(PolySymbol::Key{1});
      REQUIRE(lin != nullptr);
      for (std::size_t p = 0; p < m.m0.npoints(); p += 13)
        REQUIRE((Mat(lin->at(p)) - 2.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SECTION("first-order remainder closed form") {
    HSeries<NodeSymbol> s = node_series_from_symbol(m.p, m.m0, ct, 2);
    HSeries<NodeSymbol> r = remainder_r(s, q0, 2, 1);
    REQUIRE(r.c[0].norm_sup() < 1e-10);
    MatrixField mprime = m.m0.derivative(0);
    for (int mm : {3, 11, 26}) {
      const MatrixField& q0f = *q0.node(mm).term(PolySymbol::Key{0});
      MatrixField expect = MatrixField::matmul(q0f, MatrixField::matmul(mprime, q0f));
      expect -= MatrixField::matmul(MatrixField::matmul(q0f, q0f), mprime);
      expect *= iu;  // r1 = i xi (q0 M' q0 - q0^2 M') when p1 = 0
      const MatrixField* got = r.c[1].node(mm).term(PolySymbol::Key{1});
      REQUIRE(got != nullptr);
      MatrixField diff = *got;
      diff -= expect;
      REQUIRE(diff.max_abs_entry() < 1e-10);
    }
  }
}

TEST_CASE("projection series of a mixing two-level model") {
  FiberModel m = mixing_model();
  ProjectionDiagnostics diag;
  HSeries<PolySymbol> pi = projection_series(m, 2, 64, &diag);

  SECTION("leading order is the band eigenprojector") {
    MatrixField ref = band_eigenprojector(m.m0, 0, 0);
    const MatrixField* got = pi.c[0].term(PolySymbol::Key{0});
    REQUIRE(got != nullptr);
    MatrixField diff = *got;
    diff -= ref;
    REQUIRE(diff.max_abs_entry() < 1e-9);
    REQUIRE(pi.c[0].terms().size() == 1);  // xi-free leading order
  }

  SECTION("quadrature and hermiticity diagnostics") {
    REQUIRE(diag.quad_err <= 1e-8);
    REQUIRE(diag.herm_defect < 1e-10);
    REQUIRE(diag.nodes == 128);
  }

  SECTION("contour radius independence") {
    GapRecord g2 = m.gap;
    g2.radius *= 1.1;
    HSeries<PolySymbol> pi_b = projection_series(m.p, m.m0, g2, 2, 64);
    g2.radius = m.gap.radius * 0.9;
    HSeries<PolySymbol> pi_c = projection_series(m.p, m.m0, g2, 2, 64);
    for (int j = 0; j <= 2; ++j) {
      REQUIRE((pi.c[j] - pi_b.c[j]).norm_sup() < 1e-7);
      REQUIRE((pi.c[j] - pi_c.c[j]).norm_sup() < 1e-7);
    }
  }

  SECTION("defect slopes certify the order") {
    DefectReport rep = defect_report(m.p, pi, 2, {0.1, 0.05, 0.025});
    REQUIRE_FALSE(rep.idem_floored);
    REQUIRE_FALSE(rep.comm_floored);
    REQUIRE(rep.idem_slope >= 2.8);
    REQUIRE(rep.comm_slope >= 2.8);
    REQUIRE(rep.idem_resid <= 0.1);
    REQUIRE(rep.comm_resid <= 0.1);

    // one order less loses one power of h
    HSeries<PolySymbol> pi1 = projection_series(m, 1, 64);
    DefectReport rep1 = defect_report(m.p, pi1, 1, {0.1, 0.05, 0.025});
    REQUIRE(rep1.idem_slope >= 1.8);
    REQUIRE(rep1.idem_slope < 2.8);
  }
}

TEST_CASE("constant-frame models collapse to pointwise spectral calculus") {
  FiberModel m = constant_model();
  HSeries<PolySymbol> pi = projection_series(m, 2, 64);

  SECTION("higher orders vanish identically") {
    REQUIRE(series_sup(pi, 1) < 1e-12);
    MatrixField ref = band_eigenprojector(m.m0, 0, 0);
    MatrixField diff = *pi.c[0].term(PolySymbol::Key{0});
    diff -= ref;
    REQUIRE(diff.max_abs_entry() < 1e-12);
  }

  SECTION("reduction is exact and the intertwiner is trivial") {
    EffectiveResult eff = effective_hamiltonian(m, pi, 2);
    REQUIRE(eff.unitary_defect < 1e-12);
    REQUIRE(eff.intertwine_defect < 1e-12);
    REQUIRE(eff.frame_defect < 1e-12);
    // g = theta p theta^* pointwise: xi^2 + 0 for the lower constant level
    const MatrixField* kin = eff.g.c[0].term(PolySymbol::Key{2});
    REQUIRE(kin != nullptr);
    REQUIRE(std::abs(Mat(kin->at(0))(0, 0) - 1.0) < 1e-12);
    const MatrixField* pot = eff.g.c[0].term(PolySymbol::Key{0});
    if (pot) REQUIRE(pot->max_abs_entry() < 1e-12);
    REQUIRE(series_sup(eff.g, 1) < 1e-12);
  }
}

TEST_CASE("purification") {
  FiberModel m = mixing_model();
  HSeries<PolySymbol> pi = projection_series(m, 2, 64);

  SECTION("an accurate series is a fixed point") {
    PurifyDiagnostics diag;
    HSeries<PolySymbol> pure = riesz_purify(pi, 2, 64, &diag);
    for (int j = 0; j <= 2; ++j) REQUIRE((pure.c[j] - pi.c[j]).norm_sup() < 1e-7);
    REQUIRE(diag.post_defect < 1e-7);
  }

  SECTION("a perturbed series is repaired") {
    HSeries<PolySymbol> dirty = pi;
    MatrixField junk(m.m0.grid(), 2, 2);
    for (std::size_t p = 0; p < junk.npoints(); ++p) {
      double x = m.m0.grid().axes[0].point(int(p));
      double bumpv = 0.01 * std::exp(-x * x / 2.0);
      junk.at(p) << cplx(bumpv, 0.0), cplx(0.0, bumpv), cplx(0.0, -bumpv), cplx(-bumpv, 0.0);
    }
    dirty.c[1] = dirty.c[1] + PolySymbol::from_field(junk, pi.c[0].xi_range());
    PurifyDiagnostics diag;
    HSeries<PolySymbol> pure = riesz_purify(dirty, 2, 64, &diag);
    REQUIRE(diag.pre_defect > 1e-4);
    REQUIRE(diag.post_defect < diag.pre_defect / 10.0);
    REQUIRE(diag.post_defect < 1e-6);
  }

  SECTION("far-from-idempotent input is refused") {
    HSeries<PolySymbol> bad = pi;
    bad.c[0] = cplx(0.5, 0.0) * bad.c[0].identity_like();
    try {
      riesz_purify(bad, 2, 64);
      FAIL("precondition must reject");
    } catch (const mbo::error& e) {
      REQUIRE(e.exit_code() == 3);
    }
  }
}

TEST_CASE("effective hamiltonian of the mixing model") {
  FiberModel m = mixing_model();
  HSeries<PolySymbol> pi = projection_series(m, 2, 64);
  EffectiveResult eff = effective_hamiltonian(m, pi, 2);

  SECTION("intertwiner carries the projection to the frozen band") {
    REQUIRE(eff.unitary_defect < 1e-7);
    REQUIRE(eff.intertwine_defect < 1e-7);
    REQUIRE(eff.frame_defect < 1e-7);
    REQUIRE(eff.herm_defect < 1e-8);
  }

  SECTION("leading effective symbol is xi^2 plus the band energy") {
    const MatrixField* kin = eff.g.c[0].term(PolySymbol::Key{2});
    REQUIRE(kin != nullptr);
    const MatrixField* pot = eff.g.c[0].term(PolySymbol::Key{0});
    REQUIRE(pot != nullptr);
    for (std::size_t p = 0; p < pot->npoints(); ++p) {
      double x = m.xgrid.axes[0].point(int(p));
      double e1 = preset_mixing().evals(x)[0];
      REQUIRE(std::abs(Mat(kin->at(p))(0, 0) - 1.0) < 1e-8);
      REQUIRE(std::abs(Mat(pot->at(p))(0, 0) - e1) < 1e-8);
    }
    REQUIRE(eff.g.c[0].term(PolySymbol::Key{1}) == nullptr);
  }

  SECTION("no first-order correction for a real eigenframe") {
    REQUIRE(eff.g.c[1].norm_sup() < 1e-6);
  }
}

TEST_CASE("two-band reduction of the three-level model") {
  MatrixModelConfig cfg;
  cfg.model = preset_three_level();
  cfg.xgrid = UniformGrid{{AxisSpec{-8.0, 8.0, 32}}};
  cfg.xi_range = {{-1.0, 1.0}};
  cfg.band_lo = 0;
  cfg.band_hi = 1;
  cfg.order = 2;
  FiberModel m = build_matrix_model(cfg);

  HSeries<PolySymbol> pi = projection_series(m, 2, 64);
  REQUIRE(series_sup(pi, 1) < 1e-11);  // constant frame again
  EffectiveResult eff = effective_hamiltonian(m, pi, 2);
  REQUIRE(eff.unitary_defect < 1e-10);

  // mu(x) = theta M0 theta^*: eigenvalues are the two band energies
  const MatrixField* pot = eff.g.c[0].term(PolySymbol::Key{0});
  REQUIRE(pot != nullptr);
  for (std::size_t p = 0; p < pot->npoints(); ++p) {
    double x = cfg.xgrid.axes[0].point(int(p));
    auto ev = cfg.model.evals(x);
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(pot->at(p)));
    REQUIRE(std::abs(es.eigenvalues()(0) - ev[0]) < 1e-9);
    REQUIRE(std::abs(es.eigenvalues()(1) - ev[1]) < 1e-9);
  }

  // rotating the band frame by a constant unitary is a similarity transform:
  // the reduced spectrum cannot move
  Mat rot(2, 2);
  double c = std::cos(0.7), s = std::sin(0.7);
  rot << cplx(c, 0.0), cplx(s, 0.0), cplx(-s, 0.0), cplx(c, 0.0);
  MatrixField rotf(m.theta.grid(), 2, 2);
  for (std::size_t p = 0; p < rotf.npoints(); ++p) rotf.at(p) = rot;
  MatrixField theta_rot = MatrixField::matmul(rotf, m.theta);
  EffectiveResult eff2 =
      effective_hamiltonian(m.p, pi, m.m0, theta_rot, cfg.band_lo, cfg.band_hi, 2);
  const MatrixField* pot2 = eff2.g.c[0].term(PolySymbol::Key{0});
  REQUIRE(pot2 != nullptr);
  for (std::size_t p = 0; p < pot->npoints(); p += 3) {
    Eigen::SelfAdjointEigenSolver<Mat> ea(Mat(pot->at(p)));
    Eigen::SelfAdjointEigenSolver<Mat> eb(Mat(pot2->at(p)));
    REQUIRE(std::abs(ea.eigenvalues()(0) - eb.eigenvalues()(0)) < 1e-9);
    REQUIRE(std::abs(ea.eigenvalues()(1) - eb.eigenvalues()(1)) < 1e-9);
  }
}

TEST_CASE("projection of the neutral pair model") {
  const FiberModel& m = pair_model();
  ProjectionDiagnostics diag;
  HSeries<PolySymbol> pi = projection_series(m, 2, 32, &diag);

  SECTION("leading order selects the fiber ground state") {
    const MatrixField* got = pi.c[0].term(PolySymbol::Key{0, 0});
    REQUIRE(got != nullptr);
    Mat expect = Mat::Zero(4, 4);
    expect(0, 0) = 1.0;
    for (std::size_t p = 0; p < got->npoints(); p += 11)
      REQUIRE((Mat(got->at(p)) - expect).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(diag.quad_err <= 1e-8);
  }

  SECTION("first order is the gap-divided magnetic coupling") {
    // x-independent symbol: pi_1(i,j) = p1(i,j) / (E_i - E_j) across the gap
    const MatrixField* p1 = m.p.c[1].term(PolySymbol::Key{1, 0});
    REQUIRE(p1 != nullptr);
    const MatrixField* got = pi.c[1].term(PolySymbol::Key{1, 0});
    REQUIRE(got != nullptr);
    Mat expect = Mat::Zero(4, 4);
    Mat p1m = Mat(p1->at(0));
    for (int j = 1; j < 4; ++j) {
      double de = m.basis.energies[0][0] - m.basis.energies[0][j];
      expect(0, j) = p1m(0, j) / de;
      expect(j, 0) = p1m(j, 0) / de;
    }
    REQUIRE((Mat(got->at(0)) - expect).cwiseAbs().maxCoeff() < 1e-9);
  }

  SECTION("reduction to the lowest band") {
    EffectiveResult eff = effective_hamiltonian(m, pi, 2);
    REQUIRE(eff.unitary_defect < 1e-8);
    REQUIRE(eff.intertwine_defect < 1e-8);
    const MatrixField* kin1 = eff.g.c[0].term(PolySymbol::Key{2, 0});
    const MatrixField* kin2 = eff.g.c[0].term(PolySymbol::Key{0, 2});
    const MatrixField* pot = eff.g.c[0].term(PolySymbol::Key{0, 0});
    REQUIRE(kin1 != nullptr);
    REQUIRE(kin2 != nullptr);
    REQUIRE(pot != nullptr);
    for (std::size_t p = 0; p < pot->npoints(); p += 7) {
      REQUIRE(std::abs(Mat(kin1->at(p))(0, 0) - 1.0) < 1e-9);
      REQUIRE(std::abs(Mat(kin2->at(p))(0, 0) - 1.0) < 1e-9);
      REQUIRE(std::abs(Mat(pot->at(p))(0, 0) - m.basis.energies[0][0]) < 1e-9);
    }
    // no xi-linear term at h^0
    REQUIRE(eff.g.c[0].term(PolySymbol::Key{1, 0}) == nullptr);
    REQUIRE(eff.g.c[0].term(PolySymbol::Key{0, 1}) == nullptr);
    // first order: the band-diagonal magnetic coupling vanishes for the
    // rotation-symmetric fiber ground state
    REQUIRE(eff.g.c[1].norm_sup() < 1e-8);
  }
}
