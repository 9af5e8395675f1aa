#pragma once

// Finite-difference rows on one grid line. Weights come from an exact
// rational Vandermonde solve, so centered and biased rows share one routine.

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <sstream>
#include <vector>

#include "idcos/core.hpp"

namespace idcos::pde {

enum class Boundary { Dirichlet, Periodic };

/// Weights w_k with sum_k w_k f(x + o_k h) = h^d f^(d)(x) + O(h^{len-d}).
inline std::vector<double> fd_weights(const std::vector<int>& offsets, int derivative) {
  using boost::multiprecision::cpp_rational;
  const int n = static_cast<int>(offsets.size());
  if (derivative < 0 || derivative >= n) throw UsageError("fd_weights: not enough points");
  // rows: sum_k w_k o_k^p / p! = delta_{p,d}
  std::vector<std::vector<cpp_rational>> A(n, std::vector<cpp_rational>(n + 1));
  for (int p = 0; p < n; ++p) {
    cpp_rational fact = 1;
    for (int q = 2; q <= p; ++q) fact *= q;
    for (int k = 0; k < n; ++k) {
      cpp_rational v = 1;
      for (int q = 0; q < p; ++q) v *= offsets[k];
      A[p][k] = v / fact;
    }
    A[p][n] = (p == derivative) ? 1 : 0;
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    while (piv < n && A[piv][c] == 0) ++piv;
    if (piv == n) throw UsageError("fd_weights: repeated offsets");
    std::swap(A[c], A[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c || A[r][c] == 0) continue;
      cpp_rational f = A[r][c] / A[c][c];
      for (int k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
    }
  }
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = static_cast<double>(A[k][n] / A[k][k]);
  return w;
}

/// One row: pairs (column, weight). In Dirichlet lines column -1 and n
/// denote the two wall nodes.
struct StencilRow {
  std::vector<int> cols;
  std::vector<double> weights;
};

/// Derivative operator of the given order along one line of n unknowns
/// with spacing h.
class LineStencil {
 public:
  LineStencil(int n, int derivative, int order, Boundary bc, double h)
      : n_(n), derivative_(derivative), order_(order), bc_(bc) {
    if (derivative != 1 && derivative != 2) throw UsageError("stencil derivative must be 1 or 2");
    if (order != 2 && order != 4 && order != 6) throw UsageError("stencil order must be 2, 4 or 6");
    if (!(h > 0)) throw UsageError("stencil spacing must be positive");
    const int p = order / 2;
    const double scale = derivative == 1 ? 1.0 / h : 1.0 / (h * h);
    if (bc == Boundary::Periodic) {
      if (n < 2 * p + 1) throw UsageError("periodic line too short for the stencil");
    } else {
      // biased rows need derivative+order points between the walls
      if (n + 2 < derivative + order) throw UsageError("Dirichlet line too short for the stencil");
      if (n < 2 * p + 1) throw UsageError("Dirichlet line too short for the stencil");
    }
    std::map<std::vector<int>, std::vector<double>> memo;
    auto weights = [&](const std::vector<int>& offs) -> const std::vector<double>& {
      auto it = memo.find(offs);
      if (it == memo.end()) {
        auto w = fd_weights(offs, derivative);
        for (auto& x : w) x *= scale;
        it = memo.emplace(offs, std::move(w)).first;
      }
      return it->second;
    };

    rows_.resize(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> offs;
      if (bc == Boundary::Periodic || (i - p >= -1 && i + p <= n)) {
        for (int k = -p; k <= p; ++k) offs.push_back(k);
      } else {
        const int len = derivative + order;
        int lo = (i - p < -1) ? -1 : n - len + 1;
        for (int c = lo; c < lo + len; ++c) offs.push_back(c - i);
      }
      const auto& w = weights(offs);
      StencilRow row;
      for (std::size_t k = 0; k < offs.size(); ++k) {
        int c = i + offs[k];
        if (bc == Boundary::Periodic) c = ((c % n) + n) % n;
        row.cols.push_back(c);
        row.weights.push_back(w[k]);
      }
      rows_[i] = std::move(row);
    }
  }

  int size() const { return n_; }
  int derivative() const { return derivative_; }
  int order() const { return order_; }
  Boundary boundary() const { return bc_; }
  const StencilRow& row(int i) const { return rows_[i]; }

  /// Lower/upper bandwidth over interior columns (cyclic offsets for periodic lines).
  int half_width() const {
    int w = 0;
    for (int i = 0; i < n_; ++i)
      for (int c : rows_[i].cols) {
        if (c < 0 || c >= n_) continue;
        int d = c - i;
        if (bc_ == Boundary::Periodic) {
          d = ((d % n_) + n_) % n_;
          if (d > n_ / 2) d -= n_;
        }
        w = std::max(w, std::abs(d));
      }
    return w;
  }

  /// y_i = sum_k w_ik u_{c_ik}, with wall columns read from left/right.
  template <class Get>
  double apply_row(int i, Get&& get, double left = 0.0, double right = 0.0) const {
    const auto& r = rows_[i];
    double acc = 0;
    for (std::size_t k = 0; k < r.cols.size(); ++k) {
      int c = r.cols[k];
      double v = c < 0 ? left : (c >= n_ ? right : get(c));
      acc += r.weights[k] * v;
    }
    return acc;
  }

 private:
  int n_, derivative_, order_;
  Boundary bc_;
  std::vector<StencilRow> rows_;
};

}  // namespace idcos::pde
