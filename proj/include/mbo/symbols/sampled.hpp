#pragma once

// Dense phase-space samples on a periodic (x, xi) box with FFT derivatives in
// both variables. This is the general-purpose symbol representation for the
// one-dimensional validation suites; callers are responsible for choosing
// boxes large enough that the sampled symbol decays below target accuracy at
// the wrap-around seam.

#include "mbo/common.hpp"
#include "mbo/field.hpp"
#include "mbo/grid.hpp"

namespace mbo {

class SampledSymbol {
public:
  SampledSymbol() = default;

  SampledSymbol(const AxisSpec& xaxis, const AxisSpec& xiaxis, int rows, int cols)
      : field_(UniformGrid{{xaxis, xiaxis}}, rows, cols) {
    xaxis.validate("sampled x");
    xiaxis.validate("sampled xi");
  }

  static SampledSymbol from_function(const AxisSpec& xaxis, const AxisSpec& xiaxis,
                                     const std::function<Mat(double, double)>& f) {
    Mat probe = f(xaxis.point(0), xiaxis.point(0));
    SampledSymbol s(xaxis, xiaxis, int(probe.rows()), int(probe.cols()));
    for (int i = 0; i < xaxis.n; ++i)
      for (int j = 0; j < xiaxis.n; ++j)
        s.at(i, j) = f(xaxis.point(i), xiaxis.point(j));
    return s;
  }

  const AxisSpec& xaxis() const { return field_.grid().axes[0]; }
  const AxisSpec& xiaxis() const { return field_.grid().axes[1]; }
  int rows() const { return field_.rows(); }
  int cols() const { return field_.cols(); }
  MatrixField& field() { return field_; }
  const MatrixField& field() const { return field_; }

  MapRM at(int i, int j) { return field_.at(std::size_t(i) * xiaxis().n + j); }
  CMapRM at(int i, int j) const { return field_.at(std::size_t(i) * xiaxis().n + j); }

  // Largest relative magnitude on the box boundary; callers use this to check
  // the periodic-extension assumption before trusting spectral derivatives.
  double seam_mass() const {
    double interior = field_.max_abs_entry();
    if (interior == 0.0) return 0.0;
    double edge = 0.0;
    const int nx = xaxis().n, nxi = xiaxis().n;
    for (int j = 0; j < nxi; ++j) edge = std::max(edge, double(at(0, j).cwiseAbs().maxCoeff()));
    for (int i = 0; i < nx; ++i) edge = std::max(edge, double(at(i, 0).cwiseAbs().maxCoeff()));
    return edge / interior;
  }

  // -- calculus interface ---------------------------------------------------

  SampledSymbol dx(int axis) const {
    require(axis == 0, errkind::assertion, "sampled symbols are one-dimensional");
    SampledSymbol out = *this;
    out.field_ = field_.derivative(0);
    return out;
  }

  SampledSymbol dxi(int axis) const {
    require(axis == 0, errkind::assertion, "sampled symbols are one-dimensional");
    SampledSymbol out = *this;
    out.field_ = field_.derivative(1);
    return out;
  }

  static SampledSymbol mult(const SampledSymbol& a, const SampledSymbol& b) {
    SampledSymbol out = a;
    out.field_ = MatrixField::matmul(a.field_, b.field_);
    return out;
  }

  SampledSymbol adjoint() const {
    SampledSymbol out = *this;
    out.field_ = field_.adjoint();
    return out;
  }

  SampledSymbol zeros_like() const {
    SampledSymbol out = *this;
    out.field_ *= cplx(0.0, 0.0);
    return out;
  }

  SampledSymbol identity_like() const {
    SampledSymbol out = *this;
    out.field_ = MatrixField::identity(field_.grid(), rows());
    return out;
  }

  double norm_sup() const { return field_.norm_sup(); }

  SampledSymbol operator+(const SampledSymbol& o) const {
    SampledSymbol out = *this;
    out.field_ += o.field_;
    return out;
  }
  SampledSymbol operator-(const SampledSymbol& o) const {
    SampledSymbol out = *this;
    out.field_ -= o.field_;
    return out;
  }
  friend SampledSymbol operator*(cplx s, SampledSymbol a) {
    a.field_ *= s;
    return a;
  }

private:
  MatrixField field_;
};

}  // namespace mbo
