#pragma once

// Electronic fiber problem on the 2D y-grid: P_e = L^2 + V12(y) + Vext(y)
// with L = D_y - e A(y), A(y) = b R y. The kinetic and A.D parts are applied
// spectrally (one forward and three inverse FFTs), multiplications pointwise.
// Lowest eigenpairs come from a fully reorthogonalized Lanczos iteration with
// sequential deflation, which keeps degenerate levels (Fock-Darwin at small b,
// Landau clusters) from being silently skipped: each deflated solve targets
// the lowest remaining state from its own deterministic start vector.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mbo/common.hpp"
#include "mbo/fft.hpp"
#include "mbo/grid.hpp"
#include "mbo/models/potentials.hpp"

namespace mbo {

struct LanczosEigResult {
  bool converged = false;
  double theta = 0.0;             // lowest Ritz value
  std::vector<cplx> vec;          // its Ritz vector, unit weighted norm
  double residual = 0.0;          // true ||A x - theta x|| (weighted)
  double theta_top = 0.0;         // top Ritz value (spread estimate)
  int m_used = 0;
};

namespace detail {

inline double wdot_real(const cplx* a, const cplx* b, long n, double w) {
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += std::real(std::conj(a[i]) * b[i]);
  return s * w;
}

inline cplx wdot(const cplx* a, const cplx* b, long n, double w) {
  cplx s = 0.0;
  for (long i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
  return s * w;
}

inline double wnorm(const cplx* a, long n, double w) {
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += std::norm(a[i]);
  return std::sqrt(s * w);
}

}  // namespace detail

// Lowest eigenpair of a hermitian operator by Lanczos with two-pass full
// reorthogonalization. The weight w makes inner products quadrature sums, so
// returned vectors are unit in the continuum norm. Deterministic given the
// start vector.
inline LanczosEigResult lanczos_lowest(
    const std::function<void(const cplx*, cplx*)>& apply, long dim, int m_max, double tol,
    double w, std::vector<cplx> start, int check_every = 20) {
  using detail::wdot;
  using detail::wnorm;
  double n0 = wnorm(start.data(), dim, w);
  require(n0 > 1e-14, errkind::numerical, "eigensolver start vector vanished");
  for (auto& v : start) v *= 1.0 / n0;

  std::vector<cplx> basis((m_max + 1) * dim);
  std::copy(start.begin(), start.end(), basis.begin());
  std::vector<double> alpha, beta;
  std::vector<cplx> work(dim);
  double scale = 0.0;

  LanczosEigResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;

  auto tridiag_eig = [&](int m) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    eig.compute(t);
  };

  auto finish = [&](int m) {
    tridiag_eig(m);
    out.theta = eig.eigenvalues()(0);
    out.theta_top = eig.eigenvalues()(m - 1);
    out.vec.assign(dim, cplx(0.0));
    for (int j = 0; j < m; ++j) {
      cplx s = eig.eigenvectors()(j, 0);
      const cplx* vj = basis.data() + (long)j * dim;
      for (long i = 0; i < dim; ++i) out.vec[i] += s * vj[i];
    }
    double nv = wnorm(out.vec.data(), dim, w);
    for (auto& v : out.vec) v *= 1.0 / nv;
    apply(out.vec.data(), work.data());
    double r2 = 0.0;
    for (long i = 0; i < dim; ++i) r2 += std::norm(work[i] - out.theta * out.vec[i]);
    out.residual = std::sqrt(r2 * w);
    out.m_used = m;
    out.converged = out.residual <= tol;
  };

  for (int j = 0; j < m_max; ++j) {
    const cplx* vj = basis.data() + (long)j * dim;
    apply(vj, work.data());
    double aj = detail::wdot_real(vj, work.data(), dim, w);
    alpha.push_back(aj);
    if (j > 0) {
      const cplx* vp = basis.data() + (long)(j - 1) * dim;
      double bp = beta[j - 1];
      for (long i = 0; i < dim; ++i) work[i] -= bp * vp[i];
    }
    for (int pass = 0; pass < 2; ++pass)
      for (int l = 0; l <= j; ++l) {
        const cplx* vl = basis.data() + (long)l * dim;
        cplx c = wdot(vl, work.data(), dim, w);
        for (long i = 0; i < dim; ++i) work[i] -= c * vl[i];
      }
    double bj = wnorm(work.data(), dim, w);
    scale = std::max({scale, std::abs(aj), bj});
    if (bj < 1e-12 * std::max(scale, 1.0)) {  // invariant subspace exhausted
      finish(j + 1);
      return out;
    }
    beta.push_back(bj);
    cplx* vn = basis.data() + (long)(j + 1) * dim;
    for (long i = 0; i < dim; ++i) vn[i] = work[i] / bj;

    int m = j + 1;
    if (m >= 12 && (m % check_every == 0 || m == m_max)) {
      tridiag_eig(m);
      double est = bj * std::abs(eig.eigenvectors()(m - 1, 0));
      if (est < 0.2 * tol) {
        finish(m);
        if (out.converged) return out;
      }
    }
  }
  finish(m_max);
  return out;
}

struct ElectronicEig {
  std::vector<double> evals;
  std::vector<std::vector<cplx>> vecs;  // unit L2 norm on the y-grid
  std::vector<double> residuals;
};

// |u| <= c exp(-alpha |y|) fit over mid-range radial shells.
struct DecayFit {
  double alpha = 0.0;
  double log_c = 0.0;
};

class ElectronicSolver {
 public:
  ElectronicSolver(const UniformGrid& ygrid, double b, double e_el, const Potential2D& v12)
      : g_(ygrid), b_(b), e_(e_el) {
    require(g_.rank() == 2, errkind::config, "electronic grid must be two-dimensional");
    long n = g_.npoints();
    y1_.resize(n);
    y2_.resize(n);
    kin_.resize(n);
    k1_.resize(n);
    k2_.resize(n);
    vstatic_.resize(n);
    int n1 = g_.axes[0].n, n2 = g_.axes[1].n;
    auto kk1 = kinetic_wavenumbers(n1, g_.axes[0].length());
    auto kk2 = kinetic_wavenumbers(n2, g_.axes[1].length());
    auto kd1 = derivative_wavenumbers(n1, g_.axes[0].length());
    auto kd2 = derivative_wavenumbers(n2, g_.axes[1].length());
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        long p = (long)i * n2 + j;
        y1_[p] = g_.axes[0].point(i);
        y2_[p] = g_.axes[1].point(j);
        kin_[p] = kk1[i] * kk1[i] + kk2[j] * kk2[j];
        k1_[p] = kd1[i];
        k2_[p] = kd2[j];
        vstatic_[p] = v12.value(y1_[p], y2_[p]);
      }
    buf_.resize(n);
    sp_.resize(n);
    d1_.resize(n);
    d2_.resize(n);
  }

  const UniformGrid& grid() const { return g_; }
  double cell_volume() const { return g_.cell_volume(); }
  double field_b() const { return b_; }
  double charge() const { return e_; }

  // A(y) = b R y componentwise.
  double a1(long p) const { return -b_ * y2_[p]; }
  double a2(long p) const { return b_ * y1_[p]; }

  // out = (L^2 + V12 + vextra) in;  L^2 = D^2 - 2e A.D + e^2|A|^2.
  void apply(const cplx* in, cplx* out, const std::vector<double>& vextra = {}) const {
    long n = g_.npoints();
    std::copy(in, in + n, sp_.begin());
    std::array<int, 2> dims{g_.axes[0].n, g_.axes[1].n};
    fft_nd(sp_.data(), {dims[0], dims[1]}, FFTW_FORWARD);
    double inv = 1.0 / (double)n;
    for (long p = 0; p < n; ++p) {
      buf_[p] = sp_[p] * (kin_[p] * inv);
      d1_[p] = sp_[p] * (k1_[p] * inv);  // multiplier k gives D = -i d/dy
      d2_[p] = sp_[p] * (k2_[p] * inv);
    }
    fft_nd(buf_.data(), {dims[0], dims[1]}, FFTW_BACKWARD);
    fft_nd(d1_.data(), {dims[0], dims[1]}, FFTW_BACKWARD);
    fft_nd(d2_.data(), {dims[0], dims[1]}, FFTW_BACKWARD);
    bool extra = !vextra.empty();
    for (long p = 0; p < n; ++p) {
      double aa1 = a1(p), aa2 = a2(p);
      double vv = vstatic_[p] + e_ * e_ * (aa1 * aa1 + aa2 * aa2) + (extra ? vextra[p] : 0.0);
      out[p] = buf_[p] - 2.0 * e_ * (aa1 * d1_[p] + aa2 * d2_[p]) + vv * in[p];
    }
  }

  // Deterministic start vector: an off-center gaussian (the offset feeds all
  // angular-momentum sectors), with a per-level shift so deflated solves do
  // not start orthogonal to the state they are after.
  std::vector<cplx> start_vector(int level) const {
    static const double off[6][2] = {{0.35, 0.2},  {-0.4, 0.3},  {0.25, -0.45},
                                     {-0.3, -0.2}, {0.45, 0.05}, {0.1, 0.5}};
    const double* o = off[level % 6];
    long n = g_.npoints();
    std::vector<cplx> v(n);
    for (long p = 0; p < n; ++p) {
      double dy1 = y1_[p] - o[0], dy2 = y2_[p] - o[1];
      v[p] = std::exp(-0.5 * (dy1 * dy1 + dy2 * dy2));
    }
    return v;
  }

  // Lowest nev eigenpairs with sequential deflation. vextra is the frozen
  // x-dependent scalar part evaluated on the y-grid (may be empty).
  ElectronicEig eigensolve(int nev, const std::vector<double>& vextra = {},
                           double resid_tol = 1e-8, int m_max = 420,
                           const std::vector<std::vector<cplx>>* seeds = nullptr) const {
    long n = g_.npoints();
    double w = cell_volume();
    ElectronicEig out;
    double penalty = 0.0;
    for (int lev = 0; lev < nev; ++lev) {
      auto applyd = [&](const cplx* in, cplx* o) {
        apply(in, o, vextra);
        for (int f = 0; f < (int)out.vecs.size(); ++f) {
          cplx c = detail::wdot(out.vecs[f].data(), in, n, w);
          const cplx* uf = out.vecs[f].data();
          for (long p = 0; p < n; ++p) o[p] += penalty * c * uf[p];
        }
      };
      std::vector<cplx> start =
          (seeds && lev < (int)seeds->size()) ? (*seeds)[lev] : start_vector(lev);
      for (const auto& uf : out.vecs) {  // keep the start clear of found states
        cplx c = detail::wdot(uf.data(), start.data(), n, w);
        for (long p = 0; p < n; ++p) start[p] -= c * uf[p];
      }
      auto res = lanczos_lowest(applyd, n, m_max, resid_tol, w, std::move(start));
      require(res.converged, errkind::numerical,
              "electronic eigensolve: level " + std::to_string(lev) +
                  " residual " + std::to_string(res.residual) + " above tolerance");
      if (lev == 0) penalty = 20.0 + 0.1 * (res.theta_top - res.theta);
      out.evals.push_back(res.theta);
      out.vecs.push_back(std::move(res.vec));
      out.residuals.push_back(res.residual);
    }
    for (int i = 0; i + 1 < nev; ++i)
      require(out.evals[i] <= out.evals[i + 1] + 1e-9, errkind::numerical,
              "electronic eigensolve: deflation returned levels out of order");
    return out;
  }

  // Matrix elements over a basis of y-grid functions.

  Mat mat_mult(const std::vector<std::vector<cplx>>& u, const std::vector<double>& f) const {
    int n = (int)u.size();
    long np = g_.npoints();
    double w = cell_volume();
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (long p = 0; p < np; ++p) s += std::conj(u[i][p]) * f[p] * u[j][p];
        m(i, j) = s * w;
      }
    return m;
  }

  std::vector<cplx> apply_d(int axis, const std::vector<cplx>& v) const {
    long n = g_.npoints();
    std::vector<cplx> out(v);
    fft_nd(out.data(), {g_.axes[0].n, g_.axes[1].n}, FFTW_FORWARD);
    const std::vector<double>& k = (axis == 0) ? k1_ : k2_;
    double inv = 1.0 / (double)n;
    for (long p = 0; p < n; ++p) out[p] *= k[p] * inv;
    fft_nd(out.data(), {g_.axes[0].n, g_.axes[1].n}, FFTW_BACKWARD);
    return out;
  }

  std::vector<cplx> apply_d2(const std::vector<cplx>& v) const {
    long n = g_.npoints();
    std::vector<cplx> out(v);
    fft_nd(out.data(), {g_.axes[0].n, g_.axes[1].n}, FFTW_FORWARD);
    double inv = 1.0 / (double)n;
    for (long p = 0; p < n; ++p) out[p] *= kin_[p] * inv;
    fft_nd(out.data(), {g_.axes[0].n, g_.axes[1].n}, FFTW_BACKWARD);
    return out;
  }

  Mat mat_against(const std::vector<std::vector<cplx>>& u,
                  const std::vector<std::vector<cplx>>& ov) const {
    int n = (int)u.size();
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = detail::wdot(u[i].data(), ov[j].data(), g_.npoints(), cell_volume());
    return m;
  }

  // ||(1 - P_n) v|| for v an operator image; flags fiber truncation loss.
  double truncation_defect(const std::vector<std::vector<cplx>>& u,
                           const std::vector<cplx>& v) const {
    long n = g_.npoints();
    double w = cell_volume();
    std::vector<cplx> r(v);
    for (const auto& ui : u) {
      cplx c = detail::wdot(ui.data(), v.data(), n, w);
      for (long p = 0; p < n; ++p) r[p] -= c * ui[p];
    }
    return detail::wnorm(r.data(), n, w);
  }

  // Radial decay fit of |u| between 25% and 70% of the half-box.
  DecayFit decay_fit(const std::vector<cplx>& u) const {
    double lh = 0.5 * std::min(g_.axes[0].length(), g_.axes[1].length());
    int nsh = 28;
    double dr = 0.7 * lh / nsh;
    std::vector<double> shell(nsh, 0.0);
    for (long p = 0; p < g_.npoints(); ++p) {
      double r = std::hypot(y1_[p], y2_[p]);
      int k = (int)(r / dr);
      if (k < nsh) shell[k] = std::max(shell[k], std::abs(u[p]));
    }
    std::vector<double> rs, ls;
    for (int k = 0; k < nsh; ++k) {
      double r = (k + 0.5) * dr;
      if (r < 0.25 * lh || shell[k] < 1e-14) continue;
      rs.push_back(r);
      ls.push_back(std::log(shell[k]));
    }
    require(rs.size() >= 4, errkind::numerical, "decay fit: too few usable radial shells");
    auto fit = linear_fit(rs, ls);
    return DecayFit{-fit.first, fit.second};
  }

  // Spectral refinement of a coarse-grid field onto this grid (same box,
  // doubled resolution); used to seed the resolution self-check solves.
  std::vector<cplx> refine_from(const ElectronicSolver& coarse,
                                const std::vector<cplx>& v) const {
    int c1 = coarse.g_.axes[0].n, c2 = coarse.g_.axes[1].n;
    int f1 = g_.axes[0].n, f2 = g_.axes[1].n;
    require(f1 == 2 * c1 && f2 == 2 * c2, errkind::assertion, "refine_from expects doubling");
    std::vector<cplx> sp(v);
    fft_nd(sp.data(), {c1, c2}, FFTW_FORWARD);
    std::vector<cplx> fine((long)f1 * f2, cplx(0.0));
    for (int i = 0; i < c1; ++i) {
      if (i == c1 / 2) continue;  // drop the coarse Nyquist row
      int fi = (i < c1 / 2) ? i : i + c1;
      for (int j = 0; j < c2; ++j) {
        if (j == c2 / 2) continue;
        int fj = (j < c2 / 2) ? j : j + c2;
        fine[(long)fi * f2 + fj] = sp[(long)i * c2 + j] / (double)((long)c1 * c2);
      }
    }
    fft_nd(fine.data(), {f1, f2}, FFTW_BACKWARD);
    double nn = detail::wnorm(fine.data(), (long)f1 * f2, cell_volume());
    for (auto& z : fine) z *= 1.0 / nn;
    return fine;
  }

  const std::vector<double>& coord1() const { return y1_; }
  const std::vector<double>& coord2() const { return y2_; }

 private:
  UniformGrid g_;
  double b_, e_;
  std::vector<double> y1_, y2_, kin_, k1_, k2_, vstatic_;
  mutable std::vector<cplx> buf_, sp_, d1_, d2_;
};

}  // namespace mbo
