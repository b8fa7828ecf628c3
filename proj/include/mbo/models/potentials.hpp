#pragma once

// Smooth potential closures with analytic gradients. Everything downstream
// (electronic solves, symbol assembly, reference propagation) consumes these
// value/gradient pairs, so models stay definable in one place.

#include <functional>

#include "mbo/common.hpp"

namespace mbo {

// Scalar potential of a planar variable v = (v1, v2).
struct Potential2D {
  std::function<double(double, double)> value;
  std::function<double(double, double)> d1;  // d/dv1
  std::function<double(double, double)> d2;  // d/dv2

  bool is_zero = false;

  static Potential2D zero() {
    Potential2D p;
    p.value = [](double, double) { return 0.0; };
    p.d1 = p.value;
    p.d2 = p.value;
    p.is_zero = true;
    return p;
  }

  // c/2 |v|^2 isotropic confinement.
  static Potential2D harmonic(double c) {
    Potential2D p;
    p.value = [c](double a, double b) { return 0.5 * c * (a * a + b * b); };
    p.d1 = [c](double a, double) { return c * a; };
    p.d2 = [c](double, double b) { return c * b; };
    return p;
  }

  // Smooth attractive well -depth exp(-|v|^2 / (2 width^2)).
  static Potential2D gaussian_well(double depth, double width) {
    Potential2D p;
    double w2 = width * width;
    p.value = [depth, w2](double a, double b) {
      return -depth * std::exp(-(a * a + b * b) / (2.0 * w2));
    };
    p.d1 = [depth, w2](double a, double b) {
      return depth * a / w2 * std::exp(-(a * a + b * b) / (2.0 * w2));
    };
    p.d2 = [depth, w2](double a, double b) {
      return depth * b / w2 * std::exp(-(a * a + b * b) / (2.0 * w2));
    };
    return p;
  }

  // amp cos(2 pi v1 / period): periodic in the first component only, for
  // external potentials living on a periodic nuclear box.
  static Potential2D cosine1(double amp, double period) {
    Potential2D p;
    double k = 2.0 * pi / period;
    p.value = [amp, k](double a, double) { return amp * std::cos(k * a); };
    p.d1 = [amp, k](double a, double) { return -amp * k * std::sin(k * a); };
    p.d2 = [](double, double) { return 0.0; };
    return p;
  }
};

// Sampled bound on the first two derivatives over a box; build_model uses it
// to reject potentials too rough for the declared grids.
inline double max_gradient_sample(const Potential2D& p, double lo, double hi, int n = 33) {
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double a = lo + (hi - lo) * i / (n - 1.0), b = lo + (hi - lo) * j / (n - 1.0);
      m = std::max({m, std::abs(p.d1(a, b)), std::abs(p.d2(a, b))});
    }
  return m;
}

}  // namespace mbo
