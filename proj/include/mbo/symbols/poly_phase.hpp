#pragma once

// Exact bivariate-polynomial symbols: finite sums  sum_{a,b} M_{ab} x^a xi^b
// with constant matrix coefficients and multi-index exponents. Derivatives
// and products are exact, which is what the algebra-convention tests need
// (canonical commutator, quantization of x*xi, closed-form flows). Not used
// in the projection pipeline.

#include <Eigen/Dense>

#include <map>
#include <vector>

#include "mbo/common.hpp"

namespace mbo {

class PolyPhase {
public:
  using Mat = Eigen::MatrixXcd;
  // Key: x-exponents followed by xi-exponents (length 2d).
  using Key = std::vector<int>;

  PolyPhase() = default;
  PolyPhase(int dim, int rows, int cols) : d_(dim), rows_(rows), cols_(cols) {}

  int dim() const { return d_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::map<Key, Mat>& terms() const { return terms_; }

  static PolyPhase constant(int dim, const Mat& m) {
    PolyPhase p(dim, int(m.rows()), int(m.cols()));
    p.add_term(Key(2 * dim, 0), m);
    return p;
  }

  // Scalar monomial x^a xi^b (1x1 matrix coefficient).
  static PolyPhase monomial(int dim, const multi_index& xexp, const multi_index& xiexp,
                            cplx coeff = 1.0) {
    PolyPhase p(dim, 1, 1);
    Key k = make_key(xexp, xiexp);
    Mat m(1, 1);
    m(0, 0) = coeff;
    p.add_term(k, m);
    return p;
  }

  void add_term(const Key& k, const Mat& m) {
    require(int(k.size()) == 2 * d_, errkind::assertion, "poly term key length mismatch");
    auto it = terms_.find(k);
    if (it == terms_.end())
      terms_[k] = m;
    else
      it->second += m;
    prune(k);
  }

  // -- calculus interface ---------------------------------------------------

  PolyPhase dx(int axis) const { return deriv(axis); }
  PolyPhase dxi(int axis) const { return deriv(d_ + axis); }

  static PolyPhase mult(const PolyPhase& a, const PolyPhase& b) {
    require(a.d_ == b.d_ && a.cols_ == b.rows_, errkind::assertion, "poly mult shape mismatch");
    PolyPhase out(a.d_, a.rows_, b.cols_);
    for (const auto& [ka, ma] : a.terms_)
      for (const auto& [kb, mb] : b.terms_) {
        Key k(2 * a.d_);
        for (int i = 0; i < 2 * a.d_; ++i) k[i] = ka[i] + kb[i];
        out.add_term(k, ma * mb);
      }
    return out;
  }

  PolyPhase adjoint() const {
    PolyPhase out(d_, cols_, rows_);
    for (const auto& [k, m] : terms_) out.add_term(k, m.adjoint());
    return out;
  }

  PolyPhase zeros_like() const { return PolyPhase(d_, rows_, cols_); }

  PolyPhase identity_like() const {
    require(rows_ == cols_, errkind::assertion, "identity_like on non-square symbol");
    return constant(d_, Mat::Identity(rows_, cols_));
  }

  PolyPhase operator+(const PolyPhase& o) const {
    require(d_ == o.d_ && rows_ == o.rows_ && cols_ == o.cols_, errkind::assertion,
            "poly add shape mismatch");
    PolyPhase out = *this;
    for (const auto& [k, m] : o.terms_) out.add_term(k, m);
    return out;
  }
  PolyPhase operator-(const PolyPhase& o) const { return *this + (cplx(-1.0, 0.0) * o); }
  friend PolyPhase operator*(cplx s, PolyPhase a) {
    for (auto& [k, m] : a.terms_) m *= s;
    return a;
  }

  // Sup norm over the reference phase box [-1,1]^{2d} (coarse lattice); the
  // algebra tests compare coefficients exactly and use this only for scale.
  double norm_sup() const {
    double best = 0.0;
    const int ns = 5;
    std::vector<double> pt(2 * d_);
    std::vector<int> idx(2 * d_, 0);
    while (true) {
      for (int i = 0; i < 2 * d_; ++i) pt[i] = -1.0 + 2.0 * idx[i] / (ns - 1);
      Mat v = eval_raw(pt);
      Eigen::JacobiSVD<Mat> svd(v);
      if (v.size() > 0) best = std::max(best, svd.singularValues()(0));
      int a = 0;
      for (; a < 2 * d_; ++a) {
        if (++idx[a] < ns) break;
        idx[a] = 0;
      }
      if (a == 2 * d_) break;
    }
    return best;
  }

  double max_coeff_norm() const {
    double m = 0.0;
    for (const auto& [k, v] : terms_) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
  }

  Mat eval(const std::vector<double>& x, const std::vector<double>& xi) const {
    std::vector<double> pt = x;
    pt.insert(pt.end(), xi.begin(), xi.end());
    return eval_raw(pt);
  }

private:
  static Key make_key(const multi_index& xexp, const multi_index& xiexp) {
    Key k(xexp.begin(), xexp.end());
    k.insert(k.end(), xiexp.begin(), xiexp.end());
    return k;
  }

  PolyPhase deriv(int slot) const {
    PolyPhase out(d_, rows_, cols_);
    for (const auto& [k, m] : terms_) {
      if (k[slot] == 0) continue;
      Key kk = k;
      kk[slot] -= 1;
      out.add_term(kk, double(k[slot]) * m);
    }
    return out;
  }

  Mat eval_raw(const std::vector<double>& pt) const {
    Mat acc = Mat::Zero(rows_, cols_);
    for (const auto& [k, m] : terms_) {
      double mono = 1.0;
      for (int i = 0; i < 2 * d_; ++i)
        for (int r = 0; r < k[i]; ++r) mono *= pt[i];
      acc += mono * m;
    }
    return acc;
  }

  void prune(const Key& k) {
    auto it = terms_.find(k);
    if (it != terms_.end() && it->second.cwiseAbs().maxCoeff() == 0.0 && terms_.size() > 1)
      terms_.erase(it);
  }

  int d_ = 1, rows_ = 1, cols_ = 1;
  std::map<Key, Mat> terms_;
};

}  // namespace mbo
