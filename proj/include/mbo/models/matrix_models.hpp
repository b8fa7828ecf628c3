#pragma once

// One-dimensional matrix-fiber models: the nuclear variable is a single
// coordinate and the electronic fiber is a small hermitian matrix V(x).
// The full Hamiltonian is (hD)^2 I + V(x); its symbol is exactly
// xi^2 I + V(x), which makes this family the workhorse for validating the
// projection and effective-dynamics machinery at tight tolerances.

#include <Eigen/Dense>

#include <functional>

#include "mbo/common.hpp"

namespace mbo {

struct MatrixModel {
  int n = 2;                                        // fiber dimension
  std::function<Mat(double)> V;                     // hermitian matrix field
  std::function<std::vector<double>(double)> evals; // ascending eigenvalues
  std::function<Mat(double)> frame;                 // columns: smooth eigenbasis
  std::string name;
};

namespace detail {

inline Mat rot2(double th) {
  Mat r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return r;
}

}  // namespace detail

// Two-level family V = R(theta(x)) diag(e1(x), e2(x)) R(theta(x))^T with a
// localized mixing angle theta(x) = theta_max exp(-x^2 / (2 sigma^2)).
inline MatrixModel two_level_mixing(double theta_max, double sigma,
                                    const std::function<double(double)>& e1,
                                    const std::function<double(double)>& e2,
                                    const std::string& name = "two-level") {
  MatrixModel m;
  m.n = 2;
  m.name = name;
  auto theta = [theta_max, sigma](double x) {
    return theta_max * std::exp(-x * x / (2.0 * sigma * sigma));
  };
  m.V = [theta, e1, e2](double x) {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = e1(x);
    d(1, 1) = e2(x);
    Mat r = detail::rot2(theta(x));
    return Mat(r * d * r.transpose());
  };
  m.evals = [e1, e2](double x) {
    std::vector<double> v{e1(x), e2(x)};
    if (v[0] > v[1]) std::swap(v[0], v[1]);
    return v;
  };
  m.frame = [theta, e1, e2](double x) {
    Mat r = detail::rot2(theta(x));
    if (e1(x) > e2(x)) {  // keep columns sorted by eigenvalue
      Mat s(2, 2);
      s << r(0, 1), r(0, 0), r(1, 1), r(1, 0);
      return s;
    }
    return r;
  };
  return m;
}

// Standard presets used by the validation configurations.

// Constant gap 2, localized mixing bump: the baseline projection test model.
inline MatrixModel preset_mixing(double theta_max = 0.4, double sigma = 0.7) {
  return two_level_mixing(
      theta_max, sigma, [](double) { return -1.0; }, [](double) { return 1.0; }, "mixing");
}

// Constant diagonal fiber: adiabatic coupling vanishes identically.
inline MatrixModel preset_constant() {
  MatrixModel m;
  m.n = 2;
  m.name = "constant";
  m.V = [](double) {
    Mat d = Mat::Zero(2, 2);
    d(1, 1) = 2.0;
    return d;
  };
  m.evals = [](double) { return std::vector<double>{0.0, 2.0}; };
  m.frame = [](double) { return Mat(Mat::Identity(2, 2)); };
  return m;
}

// Curved lower band (gaussian trap) with the same mixing bump; drives the
// packet-tracking comparisons.
inline MatrixModel preset_trap(double depth = 0.4, double theta_max = 0.4, double sigma = 0.7) {
  return two_level_mixing(
      theta_max, sigma,
      [depth](double x) { return -1.0 - depth * std::exp(-x * x / 2.0); },
      [](double) { return 1.0; }, "trap");
}

// Crossing bands: the gap closes at x = 0; model building must refuse it.
inline MatrixModel preset_crossing() {
  return two_level_mixing(
      0.3, 1.0, [](double x) { return -0.5 * std::tanh(x) - 0.6; },
      [](double x) { return 0.5 * std::tanh(x) - 0.6 + 1e-3; }, "crossing");
}

// Three-level model with a constant, nontrivial eigenframe and x-dependent
// energies; the two lowest bands form the relevant group (k = 2). Constant
// frames make the projection series collapse to its leading term, giving an
// exactly checkable multi-band reference.
inline MatrixModel preset_three_level() {
  MatrixModel m;
  m.n = 3;
  m.name = "three-level";
  Mat u0(3, 3);
  {
    Eigen::Matrix3d g1 = Eigen::Matrix3d::Identity(), g2 = Eigen::Matrix3d::Identity();
    double a = 0.5, b = 0.3;
    g1(0, 0) = std::cos(a), g1(0, 1) = -std::sin(a), g1(1, 0) = std::sin(a), g1(1, 1) = std::cos(a);
    g2(1, 1) = std::cos(b), g2(1, 2) = -std::sin(b), g2(2, 1) = std::sin(b), g2(2, 2) = std::cos(b);
    u0 = (g1 * g2).cast<cplx>();
  }
  auto energies = [](double x) {
    return std::vector<double>{-1.0 - 0.2 * std::exp(-x * x / 2.0), -0.4, 2.0};
  };
  m.evals = energies;
  m.V = [u0, energies](double x) {
    auto e = energies(x);
    Mat d = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) d(i, i) = e[i];
    return Mat(u0 * d * u0.adjoint());
  };
  m.frame = [u0](double) { return u0; };
  return m;
}

}  // namespace mbo
