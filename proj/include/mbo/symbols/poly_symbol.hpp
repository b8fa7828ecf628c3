#pragma once

// Pipeline symbol representation: polynomial in the momentum variables xi with
// matrix-valued coefficient fields sampled on the nuclear x-grid. Derivatives
// in xi are exact (exponent shifts); derivatives in x are spectral. All
// symbols entering the projection recursion have this form, which is what
// makes the 1e-8-level tolerances reachable.

#include <map>

#include "mbo/common.hpp"
#include "mbo/field.hpp"
#include "mbo/grid.hpp"

namespace mbo {

class PolySymbol {
public:
  using Key = multi_index;  // xi exponents, length dim

  PolySymbol() = default;
  PolySymbol(UniformGrid xgrid, int rows, int cols,
             std::vector<std::array<double, 2>> xi_range = {})
      : xgrid_(std::move(xgrid)), rows_(rows), cols_(cols), xi_range_(std::move(xi_range)) {
    if (xi_range_.empty()) xi_range_.assign(xgrid_.rank(), {-1.0, 1.0});
    require(int(xi_range_.size()) == xgrid_.rank(), errkind::config,
            "xi range rank mismatches x grid");
  }

  int dim() const { return xgrid_.rank(); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const UniformGrid& xgrid() const { return xgrid_; }
  const std::vector<std::array<double, 2>>& xi_range() const { return xi_range_; }
  const std::map<Key, MatrixField>& terms() const { return terms_; }

  int xi_degree() const {
    int deg = 0;
    for (const auto& [k, f] : terms_) deg = std::max(deg, mi_abs(k));
    return deg;
  }

  void set_term(const Key& k, MatrixField f) {
    require(int(k.size()) == dim(), errkind::assertion, "xi exponent length mismatch");
    require(f.rows() == rows_ && f.cols() == cols_, errkind::assertion,
            "coefficient field shape mismatch");
    terms_[k] = std::move(f);
  }

  void add_term(const Key& k, const MatrixField& f) {
    auto it = terms_.find(k);
    if (it == terms_.end())
      set_term(k, f);
    else
      it->second += f;
  }

  const MatrixField* term(const Key& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? nullptr : &it->second;
  }

  // Build from a per-point function of (x-point, xi-exponent layout implied
  // by caller filling terms directly); convenience for xi-independent fields:
  static PolySymbol from_field(const MatrixField& f,
                               std::vector<std::array<double, 2>> xi_range = {}) {
    PolySymbol s(f.grid(), f.rows(), f.cols(), std::move(xi_range));
    s.set_term(Key(s.dim(), 0), f);
    return s;
  }

  // -- calculus interface ---------------------------------------------------

  PolySymbol dx(int axis) const {
    PolySymbol out = shell();
    for (const auto& [k, f] : terms_) out.set_term(k, f.derivative(axis));
    return out;
  }

  PolySymbol dxi(int axis) const {
    PolySymbol out = shell();
    for (const auto& [k, f] : terms_) {
      if (k[axis] == 0) continue;
      Key kk = k;
      kk[axis] -= 1;
      out.add_term(kk, cplx(double(k[axis]), 0.0) * f);
    }
    return out;
  }

  // Multiply by xi_axis (exponent shift up); used by the contour chain rule.
  PolySymbol xi_shift(int axis) const {
    PolySymbol out = shell();
    for (const auto& [k, f] : terms_) {
      Key kk = k;
      kk[axis] += 1;
      out.add_term(kk, f);
    }
    return out;
  }

  static PolySymbol mult(const PolySymbol& a, const PolySymbol& b) {
    require(a.cols_ == b.rows_ && a.dim() == b.dim(), errkind::assertion,
            "poly symbol mult shape mismatch");
    PolySymbol out(a.xgrid_, a.rows_, b.cols_, a.xi_range_);
    for (const auto& [ka, fa] : a.terms_)
      for (const auto& [kb, fb] : b.terms_) {
        Key k(a.dim());
        for (int i = 0; i < a.dim(); ++i) k[i] = ka[i] + kb[i];
        out.add_term(k, MatrixField::matmul(fa, fb));
      }
    return out;
  }

  PolySymbol adjoint() const {
    PolySymbol out(xgrid_, cols_, rows_, xi_range_);
    for (const auto& [k, f] : terms_) out.set_term(k, f.adjoint());
    return out;
  }

  PolySymbol zeros_like() const { return shell(); }

  PolySymbol identity_like() const {
    require(rows_ == cols_, errkind::assertion, "identity_like on non-square symbol");
    PolySymbol out = shell();
    out.set_term(Key(dim(), 0), MatrixField::identity(xgrid_, rows_));
    return out;
  }

  PolySymbol operator+(const PolySymbol& o) const {
    PolySymbol out = *this;
    for (const auto& [k, f] : o.terms_) out.add_term(k, f);
    return out;
  }
  PolySymbol operator-(const PolySymbol& o) const { return *this + (cplx(-1.0, 0.0) * o); }
  friend PolySymbol operator*(cplx s, PolySymbol a) {
    for (auto& [k, f] : a.terms_) f *= s;
    return a;
  }

  Mat eval(std::size_t xpoint, const std::vector<double>& xi) const {
    Mat acc = Mat::Zero(rows_, cols_);
    for (const auto& [k, f] : terms_) {
      double mono = 1.0;
      for (int i = 0; i < dim(); ++i)
        for (int r = 0; r < k[i]; ++r) mono *= xi[i];
      acc += mono * Mat(f.at(xpoint));
    }
    return acc;
  }

  // Sup of the matrix spectral norm over the x-grid and a lattice of xi
  // samples spanning the declared range.
  double norm_sup(int xi_samples = 9) const {
    if (terms_.empty()) return 0.0;
    double best = 0.0;
    std::vector<std::vector<double>> lattice = xi_lattice(xi_samples);
    for (std::size_t p = 0; p < xgrid_.npoints(); ++p)
      for (const auto& xi : lattice) {
        Mat v = eval(p, xi);
        Eigen::JacobiSVD<Mat> svd(v);
        best = std::max(best, svd.singularValues()(0));
      }
    return best;
  }

  std::vector<std::vector<double>> xi_lattice(int xi_samples) const {
    std::vector<std::vector<double>> pts;
    std::vector<int> idx(dim(), 0);
    while (true) {
      std::vector<double> xi(dim());
      for (int i = 0; i < dim(); ++i) {
        double t = (xi_samples == 1) ? 0.5 : double(idx[i]) / (xi_samples - 1);
        xi[i] = xi_range_[i][0] + t * (xi_range_[i][1] - xi_range_[i][0]);
      }
      pts.push_back(xi);
      int a = 0;
      for (; a < dim(); ++a) {
        if (++idx[a] < xi_samples) break;
        idx[a] = 0;
      }
      if (a == dim()) break;
    }
    return pts;
  }

  // Drop terms whose coefficients are numerically zero (keeps products lean).
  void prune(double tol = 0.0) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->second.max_abs_entry() <= tol)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

private:
  PolySymbol shell() const { return PolySymbol(xgrid_, rows_, cols_, xi_range_); }

  UniformGrid xgrid_;
  int rows_ = 0, cols_ = 0;
  std::vector<std::array<double, 2>> xi_range_;
  std::map<Key, MatrixField> terms_;
};

}  // namespace mbo
