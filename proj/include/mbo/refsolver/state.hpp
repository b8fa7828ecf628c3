#pragma once

// Grid wavefunctions for the brute-force reference propagation, plus the
// spectral helpers shared by every discrete Hamiltonian: per-axis derivatives
// and full-grid Fourier multipliers. States are row-major over the
// concatenated axes (nuclear axes first where both kinds are present).

#include <cmath>
#include <vector>

#include "mbo/common.hpp"
#include "mbo/fft.hpp"
#include "mbo/grid.hpp"

namespace mbo {

enum class Frame { gauged, ungauged };

// Wavefunction on the continuum grid, optionally carrying a discrete fiber
// of `nfiber` levels interleaved innermost (band-truncated models). The
// fiber inner product uses weight `fiber_weight` (1 for discrete levels).
struct GridState {
  UniformGrid grid;
  int nfiber = 1;
  double fiber_weight = 1.0;
  std::vector<cplx> data;  // npoints * nfiber entries
  Frame frame = Frame::gauged;
  // True when the nuclear axes are stored in Fourier bins (unitary scaling)
  // instead of positions; only the translation-invariant fast operator uses
  // that layout and conversions must go through to_kx / from_kx.
  bool x_spectral = false;
  double t = 0.0;
  double h = 0.0;

  std::size_t size() const { return std::size_t(grid.npoints()) * nfiber; }

  double norm() const {
    double s = 0.0;
    for (const cplx& v : data) s += std::norm(v);
    return std::sqrt(s * grid.cell_volume() * fiber_weight);
  }
};

struct CompareRecord {
  double l2 = 0.0;        // ||a - b||
  cplx overlap = 0.0;     // <a, b>
  double modulus_l2 = 0.0;  // || |a| - |b| ||
};

inline CompareRecord compare_states(const GridState& a, const GridState& b) {
  require(a.grid.dims() == b.grid.dims() && a.nfiber == b.nfiber, errkind::config,
          "state comparison: grid mismatch");
  require(a.frame == b.frame && a.x_spectral == b.x_spectral, errkind::config,
          "state comparison: frame mismatch");
  CompareRecord r;
  double d2 = 0.0, m2 = 0.0;
  for (std::size_t p = 0; p < a.data.size(); ++p) {
    d2 += std::norm(a.data[p] - b.data[p]);
    r.overlap += std::conj(a.data[p]) * b.data[p];
    double dm = std::abs(a.data[p]) - std::abs(b.data[p]);
    m2 += dm * dm;
  }
  const double cv = a.grid.cell_volume() * a.fiber_weight;
  r.l2 = std::sqrt(d2 * cv);
  r.overlap *= cv;
  r.modulus_l2 = std::sqrt(m2 * cv);
  return r;
}

// Fraction of |psi|^2 within `cells` grid points of any continuum axis edge;
// the periodic-wrap monitor. Packet runs must keep this below tolerance.
// On nuclear-Fourier states the first two axes hold wavenumber bins, where
// the dangerous edge is the Nyquist bin in the middle of the index range
// (mass there means the position-space packet is under-resolved), so the
// shell test moves there for those axes.
inline double boundary_shell_mass(const GridState& s, int cells = 2) {
  double shell = 0.0, total = 0.0;
  const auto dims = s.grid.dims();
  for (std::size_t p = 0; p < s.data.size(); ++p) {
    double w = std::norm(s.data[p]);
    total += w;
    auto id = s.grid.unflatten(p / s.nfiber);
    for (std::size_t a = 0; a < dims.size(); ++a) {
      const bool hit = (s.x_spectral && a < 2)
                           ? std::abs(int(id[a]) - dims[a] / 2) < cells
                           : (int(id[a]) < cells || int(id[a]) >= dims[a] - cells);
      if (hit) {
        shell += w;
        break;
      }
    }
  }
  return total == 0.0 ? 0.0 : shell / total;
}

namespace detail {

// Batched one-axis transforms need two loop dimensions (outer blocks and the
// inner stride), which the basic advanced interface cannot express in one
// call; this small cache wraps the corresponding guru plans.
struct axis_plan_key {
  int n, sign;
  std::ptrdiff_t inner, outer, block;
  bool operator<(const axis_plan_key& o) const {
    return std::tie(n, sign, inner, outer, block) <
           std::tie(o.n, o.sign, o.inner, o.outer, o.block);
  }
};

class axis_plan_cache {
public:
  static axis_plan_cache& instance() {
    static axis_plan_cache c;
    return c;
  }

  fftw_plan get(const axis_plan_key& key, cplx* buf) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_iodim64 dim{key.n, key.inner, key.inner};
    fftw_iodim64 loops[2] = {{key.outer, key.block, key.block}, {key.inner, 1, 1}};
    auto* fbuf = reinterpret_cast<fftw_complex*>(buf);
    fftw_plan p =
        fftw_plan_guru64_dft(1, &dim, 2, loops, fbuf, fbuf, key.sign, FFTW_ESTIMATE);
    require(p != nullptr, errkind::numerical, "fftw axis plan creation failed");
    plans_[key] = p;
    return p;
  }

private:
  std::mutex mu_;
  std::map<axis_plan_key, fftw_plan> plans_;
};

// In-place FFT along one axis of a row-major array.
inline void fft_axis(cplx* buf, const std::vector<int>& dims, int axis, int sign) {
  std::ptrdiff_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  std::ptrdiff_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= dims[a];
  if (inner == 1) {  // contiguous transforms, the plain batched call
    fft_many(buf, {dims[axis]}, int(outer), 1, dims[axis], sign);
    return;
  }
  axis_plan_key key{dims[axis], sign, inner, outer, dims[axis] * inner};
  fftw_plan p = axis_plan_cache::instance().get(key, buf);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf),
                   reinterpret_cast<fftw_complex*>(buf));
}

}  // namespace detail

// out = D_axis psi with D = -i d/dx, by one forward and one backward pass
// along that continuum axis only. A discrete fiber of size nfiber rides
// along as an extra innermost dimension.
inline std::vector<cplx> axis_momentum(const std::vector<cplx>& psi, const UniformGrid& g,
                                       int axis, int nfiber = 1) {
  std::vector<cplx> buf = psi;
  auto dims = g.dims();
  if (nfiber > 1) dims.push_back(nfiber);
  detail::fft_axis(buf.data(), dims, axis, FFTW_FORWARD);
  const auto k = derivative_wavenumbers(dims[axis], g.axes[axis].length());
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  for (std::size_t p = 0; p < buf.size(); ++p)
    buf[p] *= k[(p / inner) % dims[axis]];
  detail::fft_axis(buf.data(), dims, axis, FFTW_BACKWARD);
  scale(buf.data(), buf.size(), 1.0 / dims[axis]);
  return buf;
}

}  // namespace mbo
