#include <catch2/catch_amalgamated.hpp>

#include "mbo/symbols/hseries.hpp"
#include "mbo/symbols/moyal.hpp"
#include "mbo/symbols/poly_phase.hpp"
#include "mbo/symbols/poly_symbol.hpp"
#include "mbo/symbols/sampled.hpp"
#include "mbo/symbols/weyl.hpp"

using namespace mbo;

namespace {

// Smooth, rapidly decaying scalar bump used across the sampled-symbol tests.
double bump(double t, double s = 1.0) { return std::exp(-t * t / (2.0 * s * s)); }

SampledSymbol scalar_sampled(const std::function<cplx(double, double)>& f) {
  AxisSpec xa{-8.0, 8.0, 128}, qa{-8.0, 8.0, 128};
  return SampledSymbol::from_function(xa, qa, [&](double x, double xi) {
    Mat m(1, 1);
    m(0, 0) = f(x, xi);
    return m;
  });
}

SampledSymbol matrix_sampled(const std::function<Mat(double, double)>& f) {
  AxisSpec xa{-12.0, 12.0, 128}, qa{-12.0, 12.0, 128};
  return SampledSymbol::from_function(xa, qa, f);
}

double series_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double t : v) m = std::max(m, t);
  return m;
}

}  // namespace

TEST_CASE("series container algebra", "[hseries]") {
  PolyPhase x = PolyPhase::monomial(1, {1}, {0});
  PolyPhase xi = PolyPhase::monomial(1, {0}, {1});

  HSeries<PolyPhase> a = promote(x, 2);
  HSeries<PolyPhase> b = promote(xi, 2, 1);

  SECTION("add, scale, truncate") {
    auto s = a + b;
    REQUIRE(s.order() == 2);
    REQUIRE(s[0].terms().size() == 1);
    auto t = truncate(s, 1);
    REQUIRE(t.order() == 1);
    auto sc = cplx(2.0, 0.0) * a;
    REQUIRE(sc[0].max_coeff_norm() == Catch::Approx(2.0));
  }

  SECTION("adjoint is coefficient-wise") {
    Mat m(2, 2);
    m << cplx(1, 2), cplx(0, 1), cplx(3, 0), cplx(0, -4);
    auto c = promote(PolyPhase::constant(1, m), 1);
    auto ca = adjoint_symbol(c);
    Mat got = ca[0].terms().begin()->second;
    REQUIRE((got - Mat(m.adjoint())).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("eval at numeric h") {
    auto s = a + b;  // x + h*xi
    PolyPhase v = eval_at_h(s, 0.5);
    Mat val = v.eval({2.0}, {3.0});
    REQUIRE(std::abs(val(0, 0) - cplx(2.0 + 0.5 * 3.0, 0.0)) < 1e-14);
  }
}

TEST_CASE("spectral differentiation of sampled symbols", "[differentiate]") {
  // a(x, xi) = x^2 xi exp(-x^2/2) exp(-xi^2/2); second x-derivative in
  // closed form: xi exp(-xi^2/2) exp(-x^2/2) (2 - 5x^2 + x^4).
  auto a = scalar_sampled([](double x, double xi) {
    return cplx(x * x * xi * bump(x) * bump(xi), 0.0);
  });
  REQUIRE(a.seam_mass() < 1e-10);

  auto series = promote(a, 0);
  auto d2 = differentiate(series, Var::x, 0, 2);

  SECTION("matches the closed form") {
    double worst = 0.0;
    for (int i = 0; i < a.xaxis().n; i += 3)
      for (int j = 0; j < a.xiaxis().n; j += 3) {
        double x = a.xaxis().point(i), xi = a.xiaxis().point(j);
        double exact = xi * bump(xi) * bump(x) * (2.0 - 5.0 * x * x + x * x * x * x);
        worst = std::max(worst, std::abs(d2[0].at(i, j)(0, 0) - cplx(exact, 0.0)));
      }
    REQUIRE(worst < 1e-9);
  }

  SECTION("matches a centered finite-difference oracle") {
    auto d1 = differentiate(series, Var::xi, 0, 1);
    double dxi = a.xiaxis().spacing();
    double worst = 0.0;
    for (int i = 20; i < 100; i += 7)
      for (int j = 20; j < 100; j += 7) {
        cplx fd = (a.at(i, j + 1)(0, 0) - a.at(i, j - 1)(0, 0)) / (2.0 * dxi);
        worst = std::max(worst, std::abs(d1[0].at(i, j)(0, 0) - fd));
      }
    // Second-order finite differences agree to O(dxi^2) ~ 1e-2 scale factor.
    REQUIRE(worst < 5e-3);
  }

  SECTION("refuses derivative orders beyond the accuracy budget") {
    REQUIRE_THROWS_AS(differentiate(series, Var::x, 0, 3), error);  // N=0 caps at 2
    auto longer = promote(a, 2);
    REQUIRE_NOTHROW(differentiate(longer, Var::x, 0, 4));
    REQUIRE_THROWS_AS(differentiate(longer, Var::x, 0, 7), error);
  }
}

TEST_CASE("star product convention", "[moyal]") {
  const int N = 2, dim = 1;

  SECTION("canonical commutator x # xi - xi # x = -ih, exactly") {
    auto x = promote(PolyPhase::monomial(1, {1}, {0}), N);
    auto xi = promote(PolyPhase::monomial(1, {0}, {1}), N);
    auto c = moyal_commutator(x, xi, N, dim);
    REQUIRE(c[0].max_coeff_norm() < 1e-15);
    REQUIRE(c[2].max_coeff_norm() < 1e-15);
    // h^1 coefficient is the constant -i.
    Mat m = c[1].terms().begin()->second;
    REQUIRE(std::abs(m(0, 0) - cplx(0.0, -1.0)) < 1e-15);
  }

  SECTION("order zero reverses matrix products") {
    Mat A(2, 2), B(2, 2);
    A << 1, 2, 3, 4;
    B << 0, 1, -1, 0;
    auto a = promote(PolyPhase::constant(1, A), 0);
    auto b = promote(PolyPhase::constant(1, B), 0);
    auto ab = moyal_product(a, b, 0, 1);
    Mat got = ab[0].terms().begin()->second;
    REQUIRE((got - Mat(B * A)).cwiseAbs().maxCoeff() < 1e-15);
    // compose_symbols(a, b) is the symbol of Op(a) Op(b): order zero A*B.
    auto comp = compose_symbols(a, b, 0, 1);
    Mat got2 = comp[0].terms().begin()->second;
    REQUIRE((got2 - Mat(A * B)).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("unit element on every backend") {
    auto a = matrix_sampled([](double x, double xi) {
      Mat m(2, 2);
      m << bump(x) * bump(xi), 0.3 * bump(x - 1.0) * bump(xi),
          cplx(0.0, 0.2) * bump(x) * bump(xi - 0.5), bump(x + 0.5) * bump(xi);
      return m;
    });
    auto as = promote(a, N);
    auto unit = identity_series(a, N);
    auto left = moyal_product(unit, as, N, dim) - as;
    auto right = moyal_product(as, unit, N, dim) - as;
    REQUIRE(series_max(series_norm(left)) < 1e-12);
    REQUIRE(series_max(series_norm(right)) < 1e-12);
  }

  SECTION("adjoint transport: (a # b)* = b* # a*") {
    auto a = matrix_sampled([](double x, double xi) {
      Mat m(2, 2);
      m << bump(x) * bump(xi), cplx(0.0, 0.4) * bump(x - 0.5, 1.5) * bump(xi),
          0.7 * bump(x, 1.5) * bump(xi + 1.0), cplx(0.2, -0.1) * bump(x) * bump(xi, 1.5);
      return m;
    });
    auto b = matrix_sampled([](double x, double xi) {
      Mat m(2, 2);
      m << bump(x + 1.0) * bump(xi), 0.5 * bump(x) * bump(xi - 0.5, 2.0),
          cplx(0.1, 0.3) * bump(x, 1.2) * bump(xi), bump(x) * bump(xi);
      return m;
    });
    auto as = promote(a, N), bs = promote(b, N);
    auto lhs = adjoint_symbol(moyal_product(as, bs, N, dim));
    auto rhs = moyal_product(adjoint_symbol(bs), adjoint_symbol(as), N, dim);
    REQUIRE(series_max(series_norm(lhs - rhs)) < 1e-10);
  }

  SECTION("associativity through h^2") {
    auto mk = [](double xs, double qs, double off) {
      return matrix_sampled([=](double x, double xi) {
        Mat m(2, 2);
        m << bump(x - off, xs) * bump(xi, qs), 0.4 * bump(x, xs) * bump(xi - off, qs),
            cplx(0.0, 0.6) * bump(x + off, xs) * bump(xi, qs),
            0.8 * bump(x, 1.3 * xs) * bump(xi, qs);
        return m;
      });
    };
    auto as = promote(mk(1.0, 1.2, 0.4), N);
    auto bs = promote(mk(1.4, 1.0, -0.3), N);
    auto cs = promote(mk(1.1, 1.4, 0.2), N);
    auto lhs = moyal_product(moyal_product(as, bs, N, dim), cs, N, dim);
    auto rhs = moyal_product(as, moyal_product(bs, cs, N, dim), N, dim);
    REQUIRE(series_max(series_norm(lhs - rhs)) < 1e-8);
  }

  SECTION("multiplication-operator commutator on the pipeline backend") {
    // a = f(x) I, b = xi: the h^1 coefficient of a#b - b#a is -i f'(x).
    UniformGrid xg{{AxisSpec{-8.0, 8.0, 128}}};
    MatrixField f(xg, 1, 1), fp(xg, 1, 1), one(xg, 1, 1);
    for (int i = 0; i < 128; ++i) {
      double x = xg.axes[0].point(i);
      f.at(i)(0, 0) = bump(x);
      fp.at(i)(0, 0) = -x * bump(x);
      one.at(i)(0, 0) = 1.0;
    }
    PolySymbol a = PolySymbol::from_field(f, {{-2.0, 2.0}});
    PolySymbol b(xg, 1, 1, {{-2.0, 2.0}});
    b.set_term({1}, one);
    auto c = moyal_commutator(promote(a, 2), promote(b, 2), 2, 1);
    REQUIRE(c[0].norm_sup() < 1e-12);
    REQUIRE(c[2].norm_sup() < 1e-10);
    const MatrixField* lin = c[1].term({0});
    REQUIRE(lin != nullptr);
    MatrixField diff = *lin - (cplx(0.0, -1.0) * fp);
    REQUIRE(diff.norm_sup() < 1e-9);
  }
}

TEST_CASE("weyl quantization", "[weyl]") {
  const double h = 0.2;
  AxisSpec ax{-6.0, 6.0, 128};

  SECTION("xi^2 acts as the kinetic multiplier on plane waves") {
    double k0 = 2.0 * pi * 3 / ax.length();
    Wave1D psi(ax, 1);
    for (int p = 0; p < ax.n; ++p) psi.at(p, 0) = std::exp(iu * k0 * ax.point(p));
    auto xi2 = PolyPhase::monomial(1, {0}, {2});
    Wave1D out = weyl_apply(xi2, h, psi);
    double worst = 0.0;
    for (int p = 0; p < ax.n; ++p)
      worst = std::max(worst, std::abs(out.at(p, 0) - h * k0 * h * k0 * psi.at(p, 0)));
    REQUIRE(worst < 1e-10);
  }

  SECTION("x xi quantizes to the symmetrized product") {
    Wave1D psi(ax, 1);
    for (int p = 0; p < ax.n; ++p) {
      double x = ax.point(p);
      psi.at(p, 0) = bump(x) * std::exp(iu * 1.3 * x);
    }
    auto xxi = PolyPhase::monomial(1, {1}, {1});
    Wave1D got = weyl_apply(xxi, h, psi);
    // Independent assembly: (x (hD) + (hD) x)/2 via the wave's own spectral D.
    Wave1D d1 = psi.hD_pow(h, 1);
    for (int p = 0; p < ax.n; ++p) d1.at(p, 0) *= ax.point(p);
    Wave1D xfirst = psi;
    for (int p = 0; p < ax.n; ++p) xfirst.at(p, 0) *= ax.point(p);
    Wave1D d2 = xfirst.hD_pow(h, 1);
    double worst = 0.0;
    for (int p = 0; p < ax.n; ++p)
      worst = std::max(worst,
                       std::abs(got.at(p, 0) - 0.5 * (d1.at(p, 0) + d2.at(p, 0))));
    REQUIRE(worst < 1e-8);
  }

  SECTION("sampled multiplication operators are recovered exactly") {
    AxisSpec xa{-6.0, 6.0, 64};
    double dxi = 2.0 * pi * h / xa.length();
    AxisSpec qa{-32 * dxi, 32 * dxi, 64};
    auto a = SampledSymbol::from_function(xa, qa, [](double x, double) {
      Mat m(1, 1);
      m(0, 0) = bump(x) + 0.5;
      return m;
    });
    Wave1D psi(xa, 1);
    for (int p = 0; p < xa.n; ++p)
      psi.at(p, 0) = bump(xa.point(p) - 0.5) * std::exp(iu * 0.9 * xa.point(p));
    Wave1D out = weyl_apply(a, h, psi);
    double worst = 0.0;
    for (int p = 0; p < xa.n; ++p)
      worst = std::max(worst,
                       std::abs(out.at(p, 0) - (bump(xa.point(p)) + 0.5) * psi.at(p, 0)));
    REQUIRE(worst < 1e-10);
  }

  SECTION("sampled xi-dependent symbols act as Fourier multipliers") {
    AxisSpec xa{-6.0, 6.0, 64};
    double dxi = 2.0 * pi * h / xa.length();
    AxisSpec qa{-32 * dxi, 32 * dxi, 64};
    double sq = 0.5;
    auto g = SampledSymbol::from_function(xa, qa, [&](double, double xi) {
      Mat m(1, 1);
      m(0, 0) = bump(xi, sq);
      return m;
    });
    double k0 = 2.0 * pi * 5 / xa.length();
    Wave1D psi(xa, 1);
    for (int p = 0; p < xa.n; ++p) psi.at(p, 0) = std::exp(iu * k0 * xa.point(p));
    Wave1D out = weyl_apply(g, h, psi);
    double worst = 0.0;
    for (int p = 0; p < xa.n; ++p)
      worst = std::max(worst, std::abs(out.at(p, 0) - bump(h * k0, sq) * psi.at(p, 0)));
    REQUIRE(worst < 1e-8);
  }

  SECTION("hermitian sampled symbols give hermitian operators") {
    AxisSpec xa{-6.0, 6.0, 64};
    double dxi = 2.0 * pi * h / xa.length();
    AxisSpec qa{-32 * dxi, 32 * dxi, 64};
    auto a = SampledSymbol::from_function(xa, qa, [](double x, double xi) {
      Mat m(1, 1);
      m(0, 0) = bump(x, 1.5) * bump(xi, 0.8) * (1.0 + 0.3 * x * xi * bump(x) * bump(xi));
      return m;
    });
    Wave1D u(xa, 1), v(xa, 1);
    for (int p = 0; p < xa.n; ++p) {
      double x = xa.point(p);
      u.at(p, 0) = bump(x - 0.4) * std::exp(iu * 0.7 * x);
      v.at(p, 0) = bump(x + 0.6, 1.2) * std::exp(-iu * 0.4 * x);
    }
    Wave1D au = weyl_apply(a, h, u), av = weyl_apply(a, h, v);
    cplx lhs = v.inner(au), rhs = av.inner(u);
    REQUIRE(std::abs(lhs - rhs) < 1e-9);
  }

  SECTION("mismatched xi sampling is refused") {
    AxisSpec xa{-6.0, 6.0, 64};
    AxisSpec qa{-2.0, 2.0, 64};  // not conjugate to the x box at this h
    auto a = SampledSymbol::from_function(xa, qa, [](double x, double xi) {
      Mat m(1, 1);
      m(0, 0) = bump(x) * bump(xi);
      return m;
    });
    Wave1D psi(xa, 1);
    psi.at(3, 0) = 1.0;
    REQUIRE_THROWS_AS(weyl_apply(a, h, psi), error);
  }
}

TEST_CASE("pipeline polynomial symbols", "[poly_symbol]") {
  UniformGrid xg{{AxisSpec{-8.0, 8.0, 128}}};

  SECTION("xi-derivatives are exact exponent shifts") {
    PolySymbol a(xg, 1, 1, {{-2.0, 2.0}});
    MatrixField c2(xg, 1, 1);
    for (int i = 0; i < 128; ++i) c2.at(i)(0, 0) = bump(xg.axes[0].point(i));
    a.set_term({2}, c2);
    PolySymbol d = a.dxi(0);
    REQUIRE(d.term({1}) != nullptr);
    REQUIRE(d.term({2}) == nullptr);
    MatrixField expect = cplx(2.0, 0.0) * c2;
    REQUIRE((*d.term({1}) - expect).norm_sup() < 1e-15);
  }

  SECTION("x-derivatives match the analytic derivative of the bump") {
    PolySymbol a(xg, 1, 1, {{-2.0, 2.0}});
    MatrixField c(xg, 1, 1), cp(xg, 1, 1);
    for (int i = 0; i < 128; ++i) {
      double x = xg.axes[0].point(i);
      c.at(i)(0, 0) = bump(x, 1.1);
      cp.at(i)(0, 0) = -x / (1.1 * 1.1) * bump(x, 1.1);
    }
    a.set_term({0}, c);
    REQUIRE((*a.dx(0).term({0}) - cp).norm_sup() < 1e-10);
  }

  SECTION("two-dimensional fields differentiate along the right axis") {
    UniformGrid g2{{AxisSpec{-8.0, 8.0, 64}, AxisSpec{-5.0, 5.0, 16}}};
    MatrixField f(g2, 1, 1);
    for (std::size_t p = 0; p < f.npoints(); ++p) {
      auto xy = g2.coords(p);
      f.at(p)(0, 0) = bump(xy[0], 0.9) * std::sin(2.0 * pi * xy[1] / 10.0);
    }
    MatrixField d0 = f.derivative(0), d1 = f.derivative(1);
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t p = 0; p < f.npoints(); ++p) {
      auto xy = g2.coords(p);
      double e0 = -xy[0] / (0.9 * 0.9) * bump(xy[0], 0.9) * std::sin(2.0 * pi * xy[1] / 10.0);
      double e1 = bump(xy[0], 0.9) * (2.0 * pi / 10.0) * std::cos(2.0 * pi * xy[1] / 10.0);
      w0 = std::max(w0, std::abs(d0.at(p)(0, 0) - cplx(e0, 0)));
      w1 = std::max(w1, std::abs(d1.at(p)(0, 0) - cplx(e1, 0)));
    }
    REQUIRE(w0 < 1e-9);
    REQUIRE(w1 < 1e-9);
  }

  SECTION("sup norm sees the largest singular value across the xi range") {
    PolySymbol a(xg, 2, 2, {{0.0, 2.0}});
    MatrixField c(xg, 2, 2);
    for (int i = 0; i < 128; ++i) c.at(i) << 1.0, 0.0, 0.0, 0.5;
    a.set_term({1}, c);  // a = xi * diag(1, .5); sup over xi in [0,2] is 2
    REQUIRE(a.norm_sup() == Catch::Approx(2.0).margin(1e-12));
  }
}
