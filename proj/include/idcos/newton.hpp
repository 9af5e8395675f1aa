#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "idcos/core.hpp"
#include "idcos/dense.hpp"

namespace idcos {

enum class JacobianMode { Exact, FiniteDifference };

struct NewtonConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_iters = 50;
  JacobianMode jacobian_mode = JacobianMode::Exact;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw UsageError("Newton tolerances must be positive");
    if (max_iters < 1) throw UsageError("Newton needs at least one iteration");
  }
};

template <class S>
struct NewtonResult {
  State<S> x;
  int iterations = 0;
  std::vector<double> residual_history;  // ||r||_inf at each iterate, starting with the guess
};

/// Solves residual(x) = 0.
///
/// `residual(x, r)` fills r; `correction(x, r, dx)` solves J(x) dx = r.
/// Converged when ||r(x)||_inf <= abs_tol + rel_tol * ||r(guess)||_inf.
template <class S, class Residual, class Correction>
NewtonResult<S> newton_solve(Residual&& residual, Correction&& correction, State<S> guess,
                             const NewtonConfig& cfg) {
  cfg.validate();
  NewtonResult<S> res;
  res.x = std::move(guess);
  const std::size_t n = res.x.size();
  State<S> r(n), dx(n);
  residual(std::span<const S>(res.x), std::span<S>(r));
  double r0 = to_double(max_norm(std::span<const S>(r)));
  res.residual_history.push_back(r0);
  const double target = cfg.abs_tol + cfg.rel_tol * r0;
  double rn = r0;
  while (!(rn <= target)) {
    if (res.iterations >= cfg.max_iters) {
      std::ostringstream os;
      os << "Newton did not converge in " << cfg.max_iters << " iterations (residual " << rn << ")";
      throw NonConvergenceError(os.str(), res.iterations, rn);
    }
    correction(std::span<const S>(res.x), std::span<const S>(r), std::span<S>(dx));
    for (std::size_t i = 0; i < n; ++i) res.x[i] -= dx[i];
    ++res.iterations;
    residual(std::span<const S>(res.x), std::span<S>(r));
    rn = to_double(max_norm(std::span<const S>(r)));
    res.residual_history.push_back(rn);
    if (!std::isfinite(rn)) {
      throw NonConvergenceError("Newton iterate became non-finite", res.iterations, rn);
    }
  }
  return res;
}

/// Forward-difference Jacobian of g at x, step sqrt(eps)*(1+|x_i|).
template <class S, class Fn>
std::vector<S> finite_difference_jacobian(Fn&& g, std::span<const S> x, std::span<const S> gx) {
  using Real = real_t<S>;
  using std::abs;
  using std::sqrt;
  const std::size_t n = x.size();
  std::vector<S> jac(n * n);
  State<S> xp(x.begin(), x.end()), gp(n);
  const Real root_eps = sqrt(std::numeric_limits<Real>::epsilon());
  for (std::size_t j = 0; j < n; ++j) {
    Real step = root_eps * (Real(1) + abs(x[j]));
    xp[j] = x[j] + S(step);
    g(std::span<const S>(xp), std::span<S>(gp));
    for (std::size_t i = 0; i < n; ++i) jac[i * n + j] = (gp[i] - gx[i]) / S(step);
    xp[j] = x[j];
  }
  return jac;
}

/// Newton with a dense Jacobian supplied as jac(x, J_row_major).
template <class S, class Residual, class Jacobian>
NewtonResult<S> newton_solve_dense(Residual&& residual, Jacobian&& jacobian, State<S> guess,
                                   const NewtonConfig& cfg) {
  const std::size_t n = guess.size();
  auto correction = [&](std::span<const S> x, std::span<const S> r, std::span<S> dx) {
    std::vector<S> jac(n * n);
    jacobian(x, std::span<S>(jac));
    DenseLU<S> lu(std::move(jac), n);
    std::copy(r.begin(), r.end(), dx.begin());
    lu.solve_in_place(dx);
  };
  return newton_solve<S>(residual, correction, std::move(guess), cfg);
}

/// Newton with a forward-difference Jacobian.
template <class S, class Residual>
NewtonResult<S> newton_solve_fd(Residual&& residual, State<S> guess, const NewtonConfig& cfg) {
  const std::size_t n = guess.size();
  auto correction = [&](std::span<const S> x, std::span<const S> r, std::span<S> dx) {
    auto jac = finite_difference_jacobian<S>(residual, x, r);
    DenseLU<S> lu(std::move(jac), n);
    std::copy(r.begin(), r.end(), dx.begin());
    lu.solve_in_place(dx);
  };
  return newton_solve<S>(residual, correction, std::move(guess), cfg);
}

}  // namespace idcos
