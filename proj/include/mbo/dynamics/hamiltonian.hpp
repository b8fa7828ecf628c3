#pragma once

// Scalar Hamiltonian interface for the reduced classical dynamics. Two
// backends: closed-form callables, and sampled k x k symbols evaluated off the
// grid by cubic interpolation with an eigenbranch selector. Both expose value
// and first derivatives; second derivatives come from hessian_at below.

#include <array>
#include <functional>
#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "mbo/common.hpp"
#include "mbo/field.hpp"
#include "mbo/grid.hpp"
#include "mbo/symbols/poly_symbol.hpp"

namespace mbo {

struct Hamiltonian {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_x;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_xi;

  // Trust region. Empty bounds mean unbounded; a trajectory leaving the box is
  // truncated by the integrator rather than extrapolated.
  std::vector<double> x_lo, x_hi, xi_lo, xi_hi;

  bool inside(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
    for (int a = 0; a < int(x_lo.size()); ++a)
      if (x[a] < x_lo[a] || x[a] > x_hi[a]) return false;
    for (int a = 0; a < int(xi_lo.size()); ++a)
      if (xi[a] < xi_lo[a] || xi[a] > xi_hi[a]) return false;
    return true;
  }
};

inline Hamiltonian analytic_hamiltonian(
    int dim,
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> value,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_x,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> grad_xi) {
  Hamiltonian h;
  h.dim = dim;
  h.value = std::move(value);
  h.grad_x = std::move(grad_x);
  h.grad_xi = std::move(grad_xi);
  return h;
}

namespace detail {

// Catmull-Rom weights for a local coordinate s in [0,1), and their s-derivatives.
inline std::array<double, 4> catmull_rom(double s) {
  const double s2 = s * s, s3 = s2 * s;
  return {-0.5 * s + s2 - 0.5 * s3,
          1.0 - 2.5 * s2 + 1.5 * s3,
          0.5 * s + 2.0 * s2 - 1.5 * s3,
          -0.5 * s2 + 0.5 * s3};
}

inline std::array<double, 4> catmull_rom_d(double s) {
  const double s2 = s * s;
  return {-0.5 + 2.0 * s - 1.5 * s2,
          -5.0 * s + 4.5 * s2,
          0.5 + 4.0 * s - 4.5 * s2,
          -s + 1.5 * s2};
}

// Sampled-symbol backend. Off-grid values come from tensor-product cubic
// interpolation; x-derivatives differentiate the interpolant itself, so they
// stay local and work for sampled fields that are not grid-periodic.
struct SymbolTable {
  UniformGrid grid;
  int dim = 0, k = 0;
  struct Term {
    multi_index key;
    MatrixField coef;
  };
  std::vector<Term> terms;

  using Mat = Eigen::MatrixXcd;

  Mat stencil_sum(const MatrixField& f, const Eigen::VectorXd& x, int daxis) const {
    std::vector<std::array<int, 4>> idx(dim);
    std::vector<std::array<double, 4>> wgt(dim);
    for (int a = 0; a < dim; ++a) {
      const auto& ax = grid.axes[a];
      double u = (x[a] - ax.lo) / ax.spacing();
      int j = int(std::floor(u));
      double s = u - j;
      for (int m = 0; m < 4; ++m) {
        int q = (j - 1 + m) % ax.n;
        idx[a][m] = q < 0 ? q + ax.n : q;
      }
      wgt[a] = a == daxis ? catmull_rom_d(s) : catmull_rom(s);
      if (a == daxis)
        for (double& w : wgt[a]) w /= ax.spacing();
    }
    Mat out = Mat::Zero(f.rows(), f.cols());
    std::vector<int> node(dim, 0), id(dim);
    while (true) {
      double w = 1.0;
      for (int a = 0; a < dim; ++a) {
        w *= wgt[a][node[a]];
        id[a] = idx[a][node[a]];
      }
      out += w * f.at(grid.flatten(id));
      int a = dim - 1;
      while (a >= 0 && ++node[a] == 4) node[a--] = 0;
      if (a < 0) break;
    }
    return out;
  }

  Mat interp(const MatrixField& f, const Eigen::VectorXd& x) const {
    return stencil_sum(f, x, -1);
  }
  Mat interp_d(const MatrixField& f, const Eigen::VectorXd& x, int axis) const {
    return stencil_sum(f, x, axis);
  }

  Mat matrix_at(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
    Mat h = Mat::Zero(k, k);
    for (const auto& t : terms) {
      double mono = 1.0;
      for (int a = 0; a < dim; ++a)
        for (int e = 0; e < t.key[a]; ++e) mono *= xi[a];
      h += mono * interp(t.coef, x);
    }
    return 0.5 * (h + h.adjoint().eval());
  }
};

}  // namespace detail

// Wrap a k x k symbol (polynomial in xi, sampled in x) as a scalar Hamiltonian
// by selecting one eigenvalue branch, ordered ascending. Gradients use the
// Hellmann-Feynman identity with spectrally differentiated coefficients.
inline Hamiltonian symbol_hamiltonian(const PolySymbol& g, int branch) {
  require(g.rows() == g.cols(), errkind::config, "branch selection needs a square symbol");
  require(branch >= 0 && branch < g.rows(), errkind::config, "eigenvalue branch out of range");

  auto tab = std::make_shared<detail::SymbolTable>();
  tab->grid = g.xgrid();
  tab->dim = g.dim();
  tab->k = g.rows();
  for (const auto& [key, f] : g.terms()) tab->terms.push_back({key, f});

  // Trust box: two stencil cells inside the sampled axis on each side, so no
  // evaluation pulls nodes across the seam of a non-periodic field.
  Hamiltonian h;
  h.dim = g.dim();
  for (int a = 0; a < g.dim(); ++a) {
    const auto& ax = g.xgrid().axes[a];
    h.x_lo.push_back(ax.lo + 2.0 * ax.spacing());
    h.x_hi.push_back(ax.hi - 3.0 * ax.spacing());
    h.xi_lo.push_back(g.xi_range()[a][0]);
    h.xi_hi.push_back(g.xi_range()[a][1]);
  }

  auto eig = [tab, branch](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(tab->matrix_at(x, xi));
    return std::pair<double, Eigen::VectorXcd>(es.eigenvalues()[branch],
                                               es.eigenvectors().col(branch));
  };

  h.value = [eig](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    return eig(x, xi).first;
  };
  h.grad_x = [tab, eig](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    auto [ev, v] = eig(x, xi);
    (void)ev;
    Eigen::VectorXd out(tab->dim);
    for (int a = 0; a < tab->dim; ++a) {
      Eigen::MatrixXcd dh = Eigen::MatrixXcd::Zero(tab->k, tab->k);
      for (const auto& t : tab->terms) {
        double mono = 1.0;
        for (int b = 0; b < tab->dim; ++b)
          for (int e = 0; e < t.key[b]; ++e) mono *= xi[b];
        dh += mono * tab->interp_d(t.coef, x, a);
      }
      const Eigen::MatrixXcd hf = v.adjoint() * dh * v;
      out[a] = hf(0, 0).real();
    }
    return out;
  };
  h.grad_xi = [tab, eig](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    auto [ev, v] = eig(x, xi);
    (void)ev;
    Eigen::VectorXd out(tab->dim);
    for (int a = 0; a < tab->dim; ++a) {
      Eigen::MatrixXcd dh = Eigen::MatrixXcd::Zero(tab->k, tab->k);
      for (const auto& t : tab->terms) {
        if (t.key[a] == 0) continue;
        double mono = t.key[a];
        for (int b = 0; b < tab->dim; ++b) {
          int e = t.key[b] - (b == a ? 1 : 0);
          for (int q = 0; q < e; ++q) mono *= xi[b];
        }
        dh += mono * tab->interp(t.coef, x);
      }
      const Eigen::MatrixXcd hf = v.adjoint() * dh * v;
      out[a] = hf(0, 0).real();
    }
    return out;
  };
  return h;
}

// Symmetric 2d x 2d second-derivative matrix at (x, xi), rows and columns
// ordered (x..., xi...). Central differences over the supplied gradients,
// symmetrized after evaluation.
inline Eigen::MatrixXd hessian_at(const Hamiltonian& h, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& xi, double step = 1e-5) {
  const int d = h.dim;
  Eigen::MatrixXd m(2 * d, 2 * d);
  auto column = [&](const Eigen::VectorXd& xp, const Eigen::VectorXd& xip,
                    const Eigen::VectorXd& xm, const Eigen::VectorXd& xim) {
    Eigen::VectorXd col(2 * d);
    col.head(d) = (h.grad_x(xp, xip) - h.grad_x(xm, xim)) / (2.0 * step);
    col.tail(d) = (h.grad_xi(xp, xip) - h.grad_xi(xm, xim)) / (2.0 * step);
    return col;
  };
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd xp = x, xm = x;
    xp[a] += step;
    xm[a] -= step;
    m.col(a) = column(xp, xi, xm, xi);
  }
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd xip = xi, xim = xi;
    xip[a] += step;
    xim[a] -= step;
    m.col(d + a) = column(x, xip, x, xim);
  }
  return 0.5 * (m + m.transpose().eval());
}

}  // namespace mbo
