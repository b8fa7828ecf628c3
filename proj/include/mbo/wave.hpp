#pragma once

// Multi-component wavefunction on a one-dimensional periodic grid,
// point-major storage. Used by the quantization checks and the matrix-model
// reference propagator.

#include <Eigen/Dense>

#include "mbo/common.hpp"
#include "mbo/fft.hpp"
#include "mbo/grid.hpp"

namespace mbo {

struct Wave1D {
  AxisSpec axis;
  int comps = 1;
  std::vector<cplx> data;  // data[p * comps + c]

  Wave1D() = default;
  Wave1D(const AxisSpec& ax, int nc) : axis(ax), comps(nc), data(std::size_t(ax.n) * nc, 0.0) {}

  cplx& at(int p, int c) { return data[std::size_t(p) * comps + c]; }
  cplx at(int p, int c) const { return data[std::size_t(p) * comps + c]; }

  double norm() const {
    double s = 0.0;
    for (const auto& v : data) s += std::norm(v);
    return std::sqrt(s * axis.spacing());
  }

  cplx inner(const Wave1D& o) const {
    require(o.data.size() == data.size(), errkind::assertion, "wave size mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += std::conj(data[i]) * o.data[i];
    return s * axis.spacing();
  }

  Wave1D& operator+=(const Wave1D& o) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  Wave1D& operator-=(const Wave1D& o) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
  }
  Wave1D& operator*=(cplx s) {
    for (auto& v : data) v *= s;
    return *this;
  }

  // Apply (h D)^m along the axis to every component (D = -i d/dx).
  Wave1D hD_pow(double h, int m) const {
    Wave1D out = *this;
    const int n = axis.n;
    auto k = (m == 1) ? derivative_wavenumbers(n, axis.length())
                      : kinetic_wavenumbers(n, axis.length());
    fft_many(out.data.data(), {n}, comps, comps, 1, FFTW_FORWARD);
    for (int j = 0; j < n; ++j) {
      cplx mult = std::pow(cplx(h * k[j], 0.0), m) / double(n);
      for (int c = 0; c < comps; ++c) out.data[std::size_t(j) * comps + c] *= mult;
    }
    fft_many(out.data.data(), {n}, comps, comps, 1, FFTW_BACKWARD);
    return out;
  }
};

}  // namespace mbo
