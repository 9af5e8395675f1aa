#pragma once

// Lagrange interpolation, integration and differentiation on uniform nodes
// t_m = t0 + m*h, m = 0..M.
//
// All weights are derived from the cardinal polynomials c_j(sigma) on the
// integer nodes sigma = 0..M, built in exact rational arithmetic and rounded
// to the working precision once per (Real, M).

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "idcos/core.hpp"

namespace idcos {

namespace detail {

using rational = boost::multiprecision::cpp_rational;
using rational_poly = std::vector<rational>;  // coefficients, lowest degree first

template <class Real>
Real rational_to(const rational& q) {
  if constexpr (std::is_floating_point_v<Real>) {
    return q.template convert_to<Real>();
  } else {
    return Real(boost::multiprecision::numerator(q)) /
           Real(boost::multiprecision::denominator(q));
  }
}

inline std::vector<rational_poly> cardinal_polynomials(int M) {
  std::vector<rational_poly> out;
  for (int j = 0; j <= M; ++j) {
    rational_poly c{rational(1)};
    for (int i = 0; i <= M; ++i) {
      if (i == j) continue;
      rational d(j - i);
      rational_poly next(c.size() + 1, rational(0));
      for (std::size_t k = 0; k < c.size(); ++k) {
        next[k + 1] += c[k] / d;
        next[k] -= c[k] * rational(i) / d;
      }
      c = std::move(next);
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline rational_poly derivative(const rational_poly& p) {
  if (p.size() <= 1) return {rational(0)};
  rational_poly d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = p[k] * rational(static_cast<long>(k));
  return d;
}

inline rational_poly antiderivative(const rational_poly& p) {
  rational_poly a(p.size() + 1, rational(0));
  for (std::size_t k = 0; k < p.size(); ++k) a[k + 1] = p[k] / rational(static_cast<long>(k + 1));
  return a;
}

inline rational evaluate(const rational_poly& p, const rational& x) {
  rational acc(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// Gauss-Legendre nodes/weights on [0,1], computed by Newton iteration in Real.
template <class Real>
void gauss_legendre_unit(int n, std::vector<Real>& x, std::vector<Real>& w) {
  using std::abs;
  using std::cos;
  x.assign(n, Real(0));
  w.assign(n, Real(0));
  const Real pi = Real(3.14159265358979323846264338327950288419716939937510582097494459L);
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int i = 0; i < n; ++i) {
    Real z = cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp(0);
    for (int it = 0; it < 100; ++it) {
      Real p0(1), p1 = z;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((Real(2 * k - 1)) * z * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = Real(1);
      dp = Real(n) * (z * p1 - p0) / (z * z - Real(1));
      Real dz = p1 / dp;
      z -= dz;
      if (abs(dz) <= Real(4) * eps) break;
    }
    {
      Real p0(1), p1 = z;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((Real(2 * k - 1)) * z * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = Real(1);
      dp = Real(n) * (z * p1 - p0) / (z * z - Real(1));
    }
    x[i] = (Real(1) - z) / Real(2);
    w[i] = Real(1) / ((Real(1) - z * z) * dp * dp);
  }
}

}  // namespace detail

inline constexpr int kMaxSubIntervals = 16;

template <class Real>
class UniformNodeSet {
 public:
  UniformNodeSet(Real t0, Real h, int M) : t0_(t0), h_(h), M_(M) {
    if (!(h_ > Real(0))) throw UsageError("node spacing must be positive");
    if (M_ < 1) throw UsageError("need at least one sub-interval");
    if (M_ > kMaxSubIntervals) {
      std::ostringstream os;
      os << "M=" << M_ << " exceeds the supported maximum of " << kMaxSubIntervals
         << " uniform sub-intervals";
      throw UsageError(os.str());
    }
  }

  Real t0() const { return t0_; }
  Real h() const { return h_; }
  int M() const { return M_; }
  int size() const { return M_ + 1; }
  Real node(int m) const { return t0_ + Real(m) * h_; }
  Real t_end() const { return node(M_); }

  /// Position in units of h measured from t0. Times within round-off of a
  /// node (relative to |t|/h, which grows late in long runs) snap onto it.
  Real sigma(Real t) const {
    using std::abs;
    using std::round;
    Real s = (t - t0_) / h_;
    Real r = round(s);
    if (r >= Real(0) && r <= Real(M_)) {
      Real tol = Real(64) * std::numeric_limits<Real>::epsilon() *
                 (Real(M_ + 1) + (abs(t0_) + abs(t)) / h_);
      if (abs(s - r) <= tol) return r;
    }
    return s;
  }

 private:
  Real t0_;
  Real h_;
  int M_;
};

/// Cardinal-function data for M sub-intervals, independent of t0 and h.
template <class Real>
class LagrangeBasis {
 public:
  static std::shared_ptr<const LagrangeBasis> get(int M) {
    if (M < 1 || M > kMaxSubIntervals)
      throw UsageError("LagrangeBasis: M out of range");
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const LagrangeBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[M];
    if (!slot) slot = std::shared_ptr<const LagrangeBasis>(new LagrangeBasis(M));
    return slot;
  }

  int M() const { return M_; }

  /// c_j(sigma) for all j, barycentric form (exact at integer nodes).
  std::vector<Real> values(Real sigma) const {
    using std::abs;
    using std::round;
    std::vector<Real> c(M_ + 1, Real(0));
    int k = node_index(sigma);
    if (k >= 0) {
      c[k] = Real(1);
      return c;
    }
    Real denom(0);
    for (int j = 0; j <= M_; ++j) {
      c[j] = bary_[j] / (sigma - Real(j));
      denom += c[j];
    }
    for (auto& v : c) v /= denom;
    return c;
  }

  /// d^s/dsigma^s c_j(sigma) for all j.
  std::vector<Real> derivative_values(Real sigma, int s) const {
    std::vector<Real> out(M_ + 1, Real(0));
    for (int j = 0; j <= M_; ++j) {
      const auto& p = poly_real_[j];
      // s-th derivative via Horner on the derivative coefficients
      Real acc(0);
      for (int k = static_cast<int>(p.size()) - 1; k >= s; --k) {
        Real fall(1);
        for (int q = 0; q < s; ++q) fall *= Real(k - q);
        acc = acc * sigma + fall * p[k];
      }
      out[j] = acc;
    }
    return out;
  }

  /// Integral of c_j from 0 to sigma, for all j.
  std::vector<Real> integrals(Real sigma) const {
    int k = node_index(sigma);
    if (k >= 0) return node_integrals_[k];
    std::vector<Real> out(M_ + 1, Real(0));
    for (std::size_t q = 0; q < gl_x_.size(); ++q) {
      auto c = values(sigma * gl_x_[q]);
      for (int j = 0; j <= M_; ++j) out[j] += gl_w_[q] * c[j];
    }
    for (auto& v : out) v *= sigma;
    return out;
  }

  /// Exact integral of c_j over [0, m] for integer m.
  const std::vector<Real>& node_integrals(int m) const { return node_integrals_.at(m); }

  /// Row-major M x (M+1) integration weights, each exactly rounded.
  const std::vector<Real>& gamma() const { return gamma_; }

  /// Exact s-th derivative of c_n at node m (unit spacing).
  Real node_derivative(int s, int m, int n) const { return node_derivs_.at(s)[m][n]; }

  /// Returns m if sigma is within round-off of integer node m, else -1.
  int node_index(Real sigma) const {
    using std::abs;
    using std::round;
    Real r = round(sigma);
    if (r < Real(0) || r > Real(M_)) return -1;
    Real tol = Real(64) * std::numeric_limits<Real>::epsilon() * Real(M_ + 1);
    if (abs(sigma - r) <= tol) return static_cast<int>(to_double(r) + 0.5);
    return -1;
  }

 private:
  explicit LagrangeBasis(int M) : M_(M) {
    auto polys = detail::cardinal_polynomials(M);
    poly_real_.resize(M + 1);
    for (int j = 0; j <= M; ++j)
      for (const auto& c : polys[j]) poly_real_[j].push_back(detail::rational_to<Real>(c));

    // barycentric weights (-1)^j C(M, j)
    bary_.resize(M + 1);
    {
      boost::multiprecision::cpp_int binom = 1;
      for (int j = 0; j <= M; ++j) {
        if (j > 0) binom = binom * (M - j + 1) / j;
        Real b = detail::rational_to<Real>(detail::rational(binom));
        bary_[j] = (j % 2 == 0) ? b : -b;
      }
    }

    node_integrals_.assign(M + 1, std::vector<Real>(M + 1, Real(0)));
    for (int j = 0; j <= M; ++j) {
      auto a = detail::antiderivative(polys[j]);
      for (int m = 0; m <= M; ++m)
        node_integrals_[m][j] = detail::rational_to<Real>(detail::evaluate(a, detail::rational(m)));
    }

    gamma_.assign(static_cast<std::size_t>(M) * (M + 1), Real(0));
    for (int j = 0; j <= M; ++j) {
      auto a = detail::antiderivative(polys[j]);
      for (int m = 0; m < M; ++m)
        gamma_[static_cast<std::size_t>(m) * (M + 1) + j] = detail::rational_to<Real>(
            detail::evaluate(a, detail::rational(m + 1)) / detail::rational(m + 1));
    }

    node_derivs_.resize(M + 1);
    for (int s = 0; s <= M; ++s) {
      node_derivs_[s].assign(M + 1, std::vector<Real>(M + 1, Real(0)));
      for (int n = 0; n <= M; ++n) {
        auto d = polys[n];
        for (int q = 0; q < s; ++q) d = detail::derivative(d);
        for (int m = 0; m <= M; ++m)
          node_derivs_[s][m][n] = detail::rational_to<Real>(detail::evaluate(d, detail::rational(m)));
      }
    }

    detail::gauss_legendre_unit<Real>(M / 2 + 1, gl_x_, gl_w_);
  }

  int M_;
  std::vector<std::vector<Real>> poly_real_;
  std::vector<Real> bary_;
  std::vector<std::vector<Real>> node_integrals_;
  std::vector<Real> gamma_;
  std::vector<std::vector<std::vector<Real>>> node_derivs_;
  std::vector<Real> gl_x_, gl_w_;
};

/// gamma(m, j): row m integrates from t0 to t_{m+1} as
/// (t_{m+1} - t0) * sum_j gamma(m, j) f_j.
template <class Real>
class IntegrationMatrix {
 public:
  explicit IntegrationMatrix(int M) : M_(M), gamma_(LagrangeBasis<Real>::get(M)->gamma()) {}

  int M() const { return M_; }
  int rows() const { return M_; }
  int cols() const { return M_ + 1; }
  Real operator()(int m, int j) const { return gamma_[static_cast<std::size_t>(m) * (M_ + 1) + j]; }

 private:
  int M_;
  std::vector<Real> gamma_;
};

/// D(m, n) = d^s/dt^s c_n(t) at t_m.
template <class Real>
class DifferentiationMatrix {
 public:
  DifferentiationMatrix(int M, int s, Real h) : M_(M), s_(s), d_(static_cast<std::size_t>(M + 1) * (M + 1)) {
    auto basis = LagrangeBasis<Real>::get(M);
    Real scale(1);
    for (int q = 0; q < s; ++q) scale /= h;
    for (int m = 0; m <= M; ++m)
      for (int n = 0; n <= M; ++n)
        d_[static_cast<std::size_t>(m) * (M + 1) + n] = basis->node_derivative(s, m, n) * scale;
  }

  int order() const { return s_; }
  int size() const { return M_ + 1; }
  Real operator()(int m, int n) const { return d_[static_cast<std::size_t>(m) * (M_ + 1) + n]; }

  template <class S>
  std::vector<State<S>> apply(const std::vector<State<S>>& values) const {
    const std::size_t dim = values.front().size();
    std::vector<State<S>> out(M_ + 1, State<S>(dim, S(0)));
    for (int m = 0; m <= M_; ++m)
      for (int n = 0; n <= M_; ++n) {
        Real w = (*this)(m, n);
        if (w == Real(0)) continue;
        for (std::size_t i = 0; i < dim; ++i) out[m][i] += w * values[n][i];
      }
    return out;
  }

 private:
  int M_;
  int s_;
  std::vector<Real> d_;
};

namespace detail {

template <class S>
void check_values(int M, const std::vector<State<S>>& values) {
  if (values.size() != static_cast<std::size_t>(M + 1)) {
    std::ostringstream os;
    os << "expected " << M + 1 << " node values, got " << values.size();
    throw UsageError(os.str());
  }
  for (const auto& v : values)
    if (v.size() != values.front().size()) throw UsageError("node values differ in dimension");
}

template <class S, class Real>
State<S> combine(const std::vector<Real>& w, const std::vector<State<S>>& values) {
  State<S> out(values.front().size(), S(0));
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == Real(0)) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * values[j][i];
  }
  return out;
}

}  // namespace detail

/// Value at t of the degree-M interpolant through `values`.
///
/// t may lie up to one spacing outside [t0, t_M]; `extrapolated` is set when
/// it does.
template <class S>
State<S> lagrange_eval(const UniformNodeSet<real_t<S>>& nodes, const std::vector<State<S>>& values,
                       real_t<S> t, bool* extrapolated = nullptr) {
  using Real = real_t<S>;
  detail::check_values(nodes.M(), values);
  Real sigma = nodes.sigma(t);
  if (sigma < Real(-1) || sigma > Real(nodes.M() + 1))
    throw UsageError("lagrange_eval: t too far outside the node range");
  if (extrapolated) *extrapolated = sigma < Real(0) || sigma > Real(nodes.M());
  auto basis = LagrangeBasis<Real>::get(nodes.M());
  return detail::combine(basis->values(sigma), values);
}

template <class Real>
IntegrationMatrix<Real> integration_matrix(const UniformNodeSet<Real>& nodes) {
  return IntegrationMatrix<Real>(nodes.M());
}

/// Integral of the degree-M interpolant of `values` from t0 to t_upper.
template <class S>
State<S> partial_integral(const UniformNodeSet<real_t<S>>& nodes, const std::vector<State<S>>& values,
                          real_t<S> t_upper) {
  using Real = real_t<S>;
  detail::check_values(nodes.M(), values);
  Real sigma = nodes.sigma(t_upper);
  Real slack = Real(64) * std::numeric_limits<Real>::epsilon() * Real(nodes.M() + 1);
  if (sigma < -slack || sigma > Real(nodes.M()) + slack)
    throw UsageError("partial_integral: upper limit outside the macro interval");
  auto basis = LagrangeBasis<Real>::get(nodes.M());
  auto w = basis->integrals(sigma);
  for (auto& x : w) x *= nodes.h();
  return detail::combine(w, values);
}

template <class Real>
DifferentiationMatrix<Real> differentiation_matrix(const UniformNodeSet<Real>& nodes, int s) {
  if (s < 1 || s > nodes.M()) {
    std::ostringstream os;
    os << "derivative order " << s << " must lie in [1, M=" << nodes.M() << "]";
    throw UsageError(os.str());
  }
  return DifferentiationMatrix<Real>(nodes.M(), s, nodes.h());
}

/// sum_{s=0}^{S} || D_s values ||_inf, with D_0 the identity.
template <class S>
real_t<S> sobolev_norm(const UniformNodeSet<real_t<S>>& nodes, const std::vector<State<S>>& values,
                       int order) {
  using Real = real_t<S>;
  detail::check_values(nodes.M(), values);
  if (order < 0 || order > nodes.M()) throw UsageError("sobolev_norm: order must lie in [0, M]");
  Real total(0);
  auto term = [](const std::vector<State<S>>& v) {
    Real m(0);
    for (const auto& x : v) {
      Real n = max_norm(x);
      if (n > m) m = n;
    }
    return m;
  };
  total += term(values);
  for (int s = 1; s <= order; ++s) total += term(differentiation_matrix(nodes, s).apply(values));
  return total;
}

}  // namespace idcos
