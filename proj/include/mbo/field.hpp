#pragma once

// Matrix-valued functions sampled on a uniform periodic grid. Storage is
// point-major (each sample's matrix contiguous, row-major entries), which
// keeps pointwise algebra cache-friendly; spectral derivatives run strided
// FFTs over the point axes.

#include <Eigen/Dense>

#include <vector>

#include "mbo/common.hpp"
#include "mbo/fft.hpp"
#include "mbo/grid.hpp"

namespace mbo {

using Mat = Eigen::MatrixXcd;
using MatRM = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

class MatrixField {
public:
  MatrixField() = default;
  MatrixField(UniformGrid g, int rows, int cols)
      : grid_(std::move(g)), rows_(rows), cols_(cols),
        data_(grid_.npoints() * rows * cols, cplx(0.0, 0.0)) {}

  const UniformGrid& grid() const { return grid_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t npoints() const { return grid_.npoints(); }
  std::size_t entries() const { return std::size_t(rows_) * cols_; }
  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }

  MapRM at(std::size_t p) { return MapRM(data_.data() + p * entries(), rows_, cols_); }
  CMapRM at(std::size_t p) const { return CMapRM(data_.data() + p * entries(), rows_, cols_); }

  bool same_shape(const MatrixField& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && grid_.dims() == o.grid_.dims();
  }

  // -- pointwise linear algebra ---------------------------------------------

  MatrixField& operator+=(const MatrixField& o) {
    require(same_shape(o), errkind::assertion, "field shape mismatch in +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  MatrixField& operator-=(const MatrixField& o) {
    require(same_shape(o), errkind::assertion, "field shape mismatch in -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  MatrixField& operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
  friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
  friend MatrixField operator*(cplx s, MatrixField a) { return a *= s; }

  // Pointwise matrix product (A*B)(x) = A(x) B(x); shapes must chain.
  static MatrixField matmul(const MatrixField& a, const MatrixField& b) {
    require(a.cols_ == b.rows_ && a.grid_.dims() == b.grid_.dims(), errkind::assertion,
            "field shape mismatch in matmul");
    MatrixField out(a.grid_, a.rows_, b.cols_);
    for (std::size_t p = 0; p < out.npoints(); ++p) out.at(p) = a.at(p) * b.at(p);
    return out;
  }

  MatrixField adjoint() const {
    MatrixField out(grid_, cols_, rows_);
    for (std::size_t p = 0; p < npoints(); ++p) out.at(p) = at(p).adjoint();
    return out;
  }

  // Pointwise inverse with a smallest-singular-value guard.
  MatrixField inverse_checked(double min_sv, const std::string& what) const {
    require(rows_ == cols_, errkind::assertion, "inverse of non-square field");
    MatrixField out(grid_, rows_, cols_);
    for (std::size_t p = 0; p < npoints(); ++p) {
      Mat m = at(p);
      Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      double smin = svd.singularValues()(svd.singularValues().size() - 1);
      require(smin >= min_sv, errkind::numerical,
              what + ": matrix nearly singular (smallest singular value " +
                  std::to_string(smin) + ")");
      out.at(p) = m.inverse();
    }
    return out;
  }

  static MatrixField identity(const UniformGrid& g, int n) {
    MatrixField out(g, n, n);
    for (std::size_t p = 0; p < out.npoints(); ++p) out.at(p).setIdentity();
    return out;
  }

  // -- norms ----------------------------------------------------------------

  // Sup over grid points of the matrix operator (spectral) norm.
  double norm_sup() const {
    double m = 0.0;
    for (std::size_t p = 0; p < npoints(); ++p) {
      Mat mm = at(p);
      Eigen::JacobiSVD<Mat> svd(mm);
      m = std::max(m, svd.singularValues()(0));
    }
    return m;
  }

  double max_abs_entry() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  // -- spectral derivative along spatial axis `axis` ------------------------

  MatrixField derivative(int axis) const {
    require(axis >= 0 && axis < grid_.rank(), errkind::assertion, "derivative axis out of range");
    require(grid_.rank() <= 2, errkind::assertion, "field derivative supports rank <= 2 grids");
    MatrixField out = *this;
    const int E = int(entries());
    if (grid_.rank() == 1) {
      const int n = grid_.axes[0].n;
      auto k = derivative_wavenumbers(n, grid_.axes[0].length());
      fft_many(out.data(), {n}, E, E, 1, FFTW_FORWARD);
      for (int j = 0; j < n; ++j) {
        cplx mult = iu * k[j] / double(n);
        for (int e = 0; e < E; ++e) out.data_[std::size_t(j) * E + e] *= mult;
      }
      fft_many(out.data(), {n}, E, E, 1, FFTW_BACKWARD);
    } else {
      const int n0 = grid_.axes[0].n, n1 = grid_.axes[1].n;
      if (axis == 0) {
        auto k = derivative_wavenumbers(n0, grid_.axes[0].length());
        fft_many(out.data(), {n0}, n1 * E, n1 * E, 1, FFTW_FORWARD);
        for (int j = 0; j < n0; ++j) {
          cplx mult = iu * k[j] / double(n0);
          cplx* row = out.data() + std::size_t(j) * n1 * E;
          for (int t = 0; t < n1 * E; ++t) row[t] *= mult;
        }
        fft_many(out.data(), {n0}, n1 * E, n1 * E, 1, FFTW_BACKWARD);
      } else {
        auto k = derivative_wavenumbers(n1, grid_.axes[1].length());
        for (int i0 = 0; i0 < n0; ++i0) {
          cplx* block = out.data() + std::size_t(i0) * n1 * E;
          fft_many(block, {n1}, E, E, 1, FFTW_FORWARD);
          for (int j = 0; j < n1; ++j) {
            cplx mult = iu * k[j] / double(n1);
            for (int e = 0; e < E; ++e) block[std::size_t(j) * E + e] *= mult;
          }
          fft_many(block, {n1}, E, E, 1, FFTW_BACKWARD);
        }
      }
    }
    return out;
  }

private:
  UniformGrid grid_;
  int rows_ = 0, cols_ = 0;
  std::vector<cplx> data_;
};

}  // namespace mbo
