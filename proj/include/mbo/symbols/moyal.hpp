#pragma once

// Graded star-product engine, generic over the symbol backend. Convention
// (pinned by the canonical commutator test x#xi - xi#x = -ih):
//
//   Op(a1 # a2) = Op(a2) Op(a1),
//   a1 # a2 = sum_k h^k T_k(a1, a2),
//   T_k(F, G) = sum_{|alpha+beta|=k} (-1)^{|alpha|} / ((2i)^k alpha! beta!)
//                 (dx^alpha dxi^beta G) * (dxi^alpha dx^beta F),
//
// so derivatives of the SECOND argument form the left matrix factor. Because
// of the reversed composition rule, the symbol of an operator product X o Y
// is s_Y # s_X; compose_symbols() below keeps formulas in operator order.

#include <map>

#include "mbo/common.hpp"
#include "mbo/symbols/hseries.hpp"

namespace mbo {

namespace detail {

// Lazy cache of mixed derivatives dx^a dxi^b S, keyed by (a, b) concatenated.
template <class S>
class DerivCache {
public:
  explicit DerivCache(const S& base, int dim) : dim_(dim) {
    cache_[key(multi_index(dim, 0), multi_index(dim, 0))] = base;
  }

  const S& get(const multi_index& xd, const multi_index& xid) {
    auto k = key(xd, xid);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    // Reduce one derivative and recurse; x-derivatives commute with
    // xi-derivatives in every backend, so reduction order is free.
    for (int a = 0; a < dim_; ++a) {
      if (xd[a] > 0) {
        multi_index lower = xd;
        lower[a] -= 1;
        S val = get(lower, xid).dx(a);
        return cache_.emplace(k, std::move(val)).first->second;
      }
    }
    for (int a = 0; a < dim_; ++a) {
      if (xid[a] > 0) {
        multi_index lower = xid;
        lower[a] -= 1;
        S val = get(xd, lower).dxi(a);
        return cache_.emplace(k, std::move(val)).first->second;
      }
    }
    throw error(errkind::assertion, "derivative cache: unreachable");
  }

private:
  static std::vector<int> key(const multi_index& xd, const multi_index& xid) {
    std::vector<int> k(xd.begin(), xd.end());
    k.insert(k.end(), xid.begin(), xid.end());
    return k;
  }
  int dim_;
  std::map<std::vector<int>, S> cache_;
};

}  // namespace detail

// Single graded term T_k(F, G) using preloaded derivative caches.
template <class S>
S moyal_term(detail::DerivCache<S>& dF, detail::DerivCache<S>& dG, int k, int dim,
             const S& shape_hint) {
  S acc = shape_hint.zeros_like();
  cplx two_i_pow = std::pow(cplx(0.0, 2.0), k);
  for (int ja = 0; ja <= k; ++ja) {
    int jb = k - ja;
    enumerate_multi_indices(dim, ja, [&](const multi_index& alpha) {
      enumerate_multi_indices(dim, jb, [&](const multi_index& beta) {
        cplx coef = std::pow(-1.0, ja) / (two_i_pow * mi_factorial(alpha) * mi_factorial(beta));
        // Left factor: derivatives of G (x^alpha, xi^beta); right factor:
        // derivatives of F (xi^alpha, x^beta).
        S term = S::mult(dG.get(alpha, beta), dF.get(beta, alpha));
        acc = acc + coef * term;
      });
    });
  }
  return acc;
}

// Star product of two coefficient series, truncated at h^N:
// (F # G)_j = sum_{k+l+m=j} T_k(F_l, G_m).
template <class S>
HSeries<S> moyal_product(const HSeries<S>& F, const HSeries<S>& G, int N, int dim) {
  std::vector<detail::DerivCache<S>> dF, dG;
  dF.reserve(F.c.size());
  dG.reserve(G.c.size());
  for (const auto& c : F.c) dF.emplace_back(c, dim);
  for (const auto& c : G.c) dG.emplace_back(c, dim);

  S probe = S::mult(G.c[0], F.c[0]);  // output shape: G-derivatives left, F right
  HSeries<S> out;
  for (int j = 0; j <= N; ++j) out.c.push_back(probe.zeros_like());

  for (int j = 0; j <= N; ++j)
    for (int k = 0; k <= j; ++k)
      for (int l = 0; l + k <= j; ++l) {
        int m = j - k - l;
        if (l > F.order() || m > G.order()) continue;
        out.c[j] = out.c[j] + moyal_term(dF[l], dG[m], k, dim, probe);
      }
  return out;
}

// Symbol of the operator composition X o Y (apply Y, then X), in operator
// order: compose_symbols(sX, sY) = sY # sX.
template <class S>
HSeries<S> compose_symbols(const HSeries<S>& sX, const HSeries<S>& sY, int N, int dim) {
  return moyal_product(sY, sX, N, dim);
}

// Star commutator a # b - b # a.
template <class S>
HSeries<S> moyal_commutator(const HSeries<S>& a, const HSeries<S>& b, int N, int dim) {
  return moyal_product(a, b, N, dim) - moyal_product(b, a, N, dim);
}

}  // namespace mbo
