#pragma once

// Uniform periodic grids. All sampled axes carry power-of-two point counts
// (>= 8) so spectral derivatives and the reference propagator share exact
// wavenumber sets.

#include <vector>
#include <numeric>

#include "mbo/common.hpp"
#include "mbo/fft.hpp"

namespace mbo {

struct AxisSpec {
  double lo = 0.0, hi = 0.0;
  int n = 0;

  double length() const { return hi - lo; }
  double spacing() const { return length() / n; }
  double point(int j) const { return lo + spacing() * j; }

  void validate(const std::string& name) const {
    require(hi > lo, errkind::config, "axis " + name + ": hi must exceed lo");
    require(n >= 8, errkind::config, "axis " + name + ": needs at least 8 points");
    require((n & (n - 1)) == 0, errkind::config,
            "axis " + name + ": point count must be a power of two");
  }
};

// Rank-d uniform grid; points stored row-major (axis 0 slowest).
struct UniformGrid {
  std::vector<AxisSpec> axes;

  int rank() const { return int(axes.size()); }

  std::size_t npoints() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.n;
    return n;
  }

  std::vector<int> dims() const {
    std::vector<int> d;
    for (const auto& a : axes) d.push_back(a.n);
    return d;
  }

  double cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes) v *= a.spacing();
    return v;
  }

  // Row-major flat index -> per-axis indices.
  std::vector<int> unflatten(std::size_t idx) const {
    std::vector<int> out(rank());
    for (int a = rank() - 1; a >= 0; --a) {
      out[a] = int(idx % axes[a].n);
      idx /= axes[a].n;
    }
    return out;
  }

  std::size_t flatten(const std::vector<int>& id) const {
    std::size_t idx = 0;
    for (int a = 0; a < rank(); ++a) idx = idx * axes[a].n + id[a];
    return idx;
  }

  std::vector<double> coords(std::size_t idx) const {
    auto id = unflatten(idx);
    std::vector<double> x(rank());
    for (int a = 0; a < rank(); ++a) x[a] = axes[a].point(id[a]);
    return x;
  }

  void validate(const std::string& name) const {
    require(!axes.empty(), errkind::config, "grid " + name + ": no axes");
    for (size_t a = 0; a < axes.size(); ++a)
      axes[a].validate(name + "[" + std::to_string(a) + "]");
  }
};

// Phase-space sampling box: nuclear positions x and momenta xi. The xi axes
// double as evaluation ranges for polynomial-in-xi symbol backends.
struct PhaseGrid {
  UniformGrid x;      // spatial axes (d of them)
  UniformGrid xi;     // momentum axes (same rank)

  int dim() const { return x.rank(); }

  void validate() const {
    x.validate("x");
    xi.validate("xi");
    require(x.rank() == xi.rank(), errkind::config, "phase grid: x/xi rank mismatch");
  }
};

// Product grid for the full two-body reference solver: nuclear axes times
// electronic axes, with a total budget guard.
struct TensorGrid {
  UniformGrid x;  // center/nuclear axes
  UniformGrid y;  // electronic axes
  std::size_t budget = std::size_t(1) << 22;

  std::size_t npoints() const { return x.npoints() * y.npoints(); }

  std::vector<int> dims() const {
    auto d = x.dims();
    for (int v : y.dims()) d.push_back(v);
    return d;
  }

  void validate() const {
    x.validate("x");
    y.validate("y");
    require(npoints() <= budget, errkind::config,
            "tensor grid exceeds point budget (" + std::to_string(npoints()) + " > " +
                std::to_string(budget) + ")");
  }
};

}  // namespace mbo
