#pragma once

// Small dense LU with partial pivoting, used by Newton when an operator does
// not supply its own shifted solver.

#include <cmath>
#include <span>
#include <vector>

#include "idcos/core.hpp"

namespace idcos {

template <class S>
class DenseLU {
 public:
  /// `a` is row-major n x n and is consumed.
  DenseLU(std::vector<S> a, std::size_t n) : n_(n), lu_(std::move(a)), piv_(n) {
    using std::abs;
    if (lu_.size() != n * n) throw UsageError("DenseLU: matrix size mismatch");
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      real_t<S> best = abs(at(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        real_t<S> v = abs(at(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      piv_[k] = p;
      if (best == real_t<S>(0)) throw LinearSolveError("DenseLU: singular matrix");
      if (p != k)
        for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      const S inv = S(1) / at(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        S l = at(i, k) * inv;
        at(i, k) = l;
        if (l == S(0)) continue;
        for (std::size_t j = k + 1; j < n; ++j) at(i, j) -= l * at(k, j);
      }
    }
  }

  void solve_in_place(std::span<S> b) const {
    for (std::size_t k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      for (std::size_t i = k + 1; i < n_; ++i) b[i] -= at(i, k) * b[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
      S acc = b[k];
      for (std::size_t j = k + 1; j < n_; ++j) acc -= at(k, j) * b[j];
      b[k] = acc / at(k, k);
    }
    if (!all_finite(std::span<const S>(b))) throw LinearSolveError("DenseLU: non-finite solution");
  }

  std::size_t size() const { return n_; }

 private:
  S& at(std::size_t i, std::size_t j) { return lu_[i * n_ + j]; }
  const S& at(std::size_t i, std::size_t j) const { return lu_[i * n_ + j]; }

  std::size_t n_;
  std::vector<S> lu_;
  std::vector<std::size_t> piv_;
};

}  // namespace idcos
