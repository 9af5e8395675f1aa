#pragma once

// One-step splitting integrators and the additive Runge-Kutta form they share.
//
// Every implicit sub-step has the shape  x - alpha * f_nu(t, x) = c  and goes
// through solve_stage(), which picks the operator's own shifted solver when
// it has one and falls back to dense Newton otherwise.

#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "idcos/core.hpp"
#include "idcos/dense.hpp"
#include "idcos/newton.hpp"

namespace idcos {

enum class Scheme { LieTrotter, Strang, Adi };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::LieTrotter: return "lie-trotter";
    case Scheme::Strang: return "strang";
    case Scheme::Adi: return "adi";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "lie-trotter" || name == "lie" || name == "lt") return Scheme::LieTrotter;
  if (name == "strang") return Scheme::Strang;
  if (name == "adi") return Scheme::Adi;
  throw UsageError("unknown scheme '" + name + "'");
}

/// Formal order of the base scheme.
inline int scheme_order(Scheme s) { return s == Scheme::LieTrotter ? 1 : 2; }

/// Solves x - alpha * f_nu(t, x) = c starting from `guess`.
template <class S>
State<S> solve_stage(const SplitIVP<S>& problem, std::size_t nu, real_t<S> t, real_t<S> alpha,
                     const State<S>& c, const State<S>& guess, const NewtonConfig& cfg) {
  const auto& op = problem.op(nu);
  const std::size_t n = problem.dimension();

  auto residual = [&](std::span<const S> x, std::span<S> r) {
    problem.eval(nu, t, x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - S(alpha) * r[i] - c[i];
  };

  const bool exact = cfg.jacobian_mode == JacobianMode::Exact;
  std::function<void(std::span<const S>, std::span<const S>, std::span<S>)> correction;
  if (exact && op.shifted_solve) {
    correction = [&](std::span<const S> x, std::span<const S> r, std::span<S> dx) {
      op.shifted_solve(t, x, alpha, r, dx);
    };
  } else if (exact && op.jacobian) {
    correction = [&](std::span<const S> x, std::span<const S> r, std::span<S> dx) {
      std::vector<S> jac(n * n);
      op.jacobian(t, x, std::span<S>(jac));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          jac[i * n + j] = (i == j ? S(1) : S(0)) - S(alpha) * jac[i * n + j];
      DenseLU<S> lu(std::move(jac), n);
      std::copy(r.begin(), r.end(), dx.begin());
      lu.solve_in_place(dx);
    };
  } else {
    correction = [&](std::span<const S> x, std::span<const S> r, std::span<S> dx) {
      auto jac = finite_difference_jacobian<S>(residual, x, r);
      DenseLU<S> lu(std::move(jac), n);
      std::copy(r.begin(), r.end(), dx.begin());
      lu.solve_in_place(dx);
    };
  }

  // Affine f(x) = Jx + f(0): solve (I - alpha J) x = c + alpha f(t, 0) directly.
  if (exact && op.affine && (op.shifted_solve || op.jacobian)) {
    State<S> zero(n, S(0)), rhs(n), x(n);
    problem.eval(nu, t, zero, rhs);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = c[i] + S(alpha) * rhs[i];
    correction(std::span<const S>(guess), std::span<const S>(rhs), std::span<S>(x));
    if (!all_finite(std::span<const S>(x))) {
      std::ostringstream os;
      os << "non-finite implicit solve for operator " << nu << " at t=" << to_double(t);
      throw NumericalError(nu, to_double(t), os.str());
    }
    return x;
  }

  try {
    return newton_solve<S>(residual, correction, guess, cfg).x;
  } catch (const NonConvergenceError& e) {
    std::ostringstream os;
    os << "implicit stage for operator " << nu << " at t=" << to_double(t) << ": " << e.what();
    throw NonConvergenceError(os.str(), e.iterations(), e.residual_norm(), nu, to_double(t));
  }
}

namespace detail {

/// Implicit trapezoid sub-step of length tau from t_a to t_b:
/// (x - x0)/tau = (f(t_a, x0) + f(t_b, x)) / 2.
template <class S>
State<S> trapezoid_substep(const SplitIVP<S>& p, std::size_t nu, real_t<S> t_a, real_t<S> t_b,
                           real_t<S> tau, const State<S>& x0, const NewtonConfig& cfg) {
  using Real = real_t<S>;
  State<S> c = p.eval(nu, t_a, x0);
  const Real half = tau / Real(2);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = x0[i] + S(half) * c[i];
  return solve_stage(p, nu, t_b, half, c, x0, cfg);
}

}  // namespace detail

/// Backward Euler on each operator in turn over the full step.
/// `order` overrides the default sequence 0, 1, ..., Lambda-1.
template <class S>
State<S> lie_trotter_step(const SplitIVP<S>& problem, real_t<S> t, real_t<S> dt, const State<S>& u,
                          const NewtonConfig& cfg = {},
                          const std::vector<std::size_t>* order = nullptr) {
  if (!(dt > real_t<S>(0))) throw UsageError("step size must be positive");
  std::vector<std::size_t> seq(problem.num_operators());
  if (order) {
    seq = *order;
    if (seq.size() != problem.num_operators()) throw UsageError("operator order has wrong length");
  } else {
    std::iota(seq.begin(), seq.end(), std::size_t(0));
  }
  State<S> x = u;
  for (std::size_t nu : seq) x = solve_stage(problem, nu, t + dt, dt, x, x, cfg);
  return x;
}

/// Palindromic Strang sequence with trapezoidal sub-solves:
/// f1 on [t, t+dt/2], f2 on [t+dt/2, t+dt], (f3 on [t, t+dt]), f2 on
/// [t, t+dt/2], f1 on [t+dt/2, t+dt]. Two or three operators.
template <class S>
State<S> strang_step(const SplitIVP<S>& problem, real_t<S> t, real_t<S> dt, const State<S>& u,
                     const NewtonConfig& cfg = {}) {
  using Real = real_t<S>;
  const std::size_t L = problem.num_operators();
  if (L != 2 && L != 3) {
    std::ostringstream os;
    os << "Strang splitting supports 2 or 3 operators, got " << L;
    throw UnsupportedConfiguration(os.str());
  }
  if (!(dt > Real(0))) throw UsageError("step size must be positive");
  const Real h = dt / Real(2);
  const Real tm = t + h, t1 = t + dt;
  State<S> x = detail::trapezoid_substep(problem, 0, t, tm, h, u, cfg);
  x = detail::trapezoid_substep(problem, 1, tm, t1, h, x, cfg);
  if (L == 3) x = detail::trapezoid_substep(problem, 2, t, t1, dt, x, cfg);
  x = detail::trapezoid_substep(problem, 1, t, tm, h, x, cfg);
  x = detail::trapezoid_substep(problem, 0, tm, t1, h, x, cfg);
  return x;
}

/// Peaceman-Rachford: implicit f1 / explicit f2 over the first half step,
/// then explicit (frozen) f1 / implicit f2 over the second.
template <class S>
State<S> adi_step(const SplitIVP<S>& problem, real_t<S> t, real_t<S> dt, const State<S>& u,
                  const NewtonConfig& cfg = {}) {
  using Real = real_t<S>;
  if (problem.num_operators() != 2) {
    std::ostringstream os;
    os << "ADI splitting needs exactly 2 operators, got " << problem.num_operators();
    throw UnsupportedConfiguration(os.str());
  }
  if (!(dt > Real(0))) throw UsageError("step size must be positive");
  const Real h = dt / Real(2);
  const Real tm = t + h;
  State<S> c = problem.eval(1, t, u);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = u[i] + S(h) * c[i];
  State<S> mid = solve_stage(problem, 0, tm, h, c, u, cfg);
  State<S> c2 = problem.eval(0, tm, mid);
  for (std::size_t i = 0; i < c2.size(); ++i) c2[i] = mid[i] + S(h) * c2[i];
  return solve_stage(problem, 1, t + dt, h, c2, mid, cfg);
}

// ---------------------------------------------------------------------------
// Additive Runge-Kutta tableaux

template <class Real>
struct ButcherTableauARK {
  std::string name;
  int stages = 0;
  int num_operators = 0;
  std::vector<std::vector<Real>> c;  // [nu][i]
  std::vector<std::vector<Real>> a;  // [nu][i * stages + j]
  std::vector<std::vector<Real>> b;  // [nu][i]

  ButcherTableauARK() = default;
  ButcherTableauARK(std::string n, int p, int L) : name(std::move(n)), stages(p), num_operators(L) {
    c.assign(L, std::vector<Real>(p, Real(0)));
    a.assign(L, std::vector<Real>(static_cast<std::size_t>(p) * p, Real(0)));
    b.assign(L, std::vector<Real>(p, Real(0)));
  }

  Real& A(int nu, int i, int j) { return a[nu][static_cast<std::size_t>(i) * stages + j]; }
  Real A(int nu, int i, int j) const { return a[nu][static_cast<std::size_t>(i) * stages + j]; }

  void validate() const {
    if (stages < 1 || num_operators < 1) throw UsageError("tableau needs stages and operators");
    if (c.size() != static_cast<std::size_t>(num_operators) || a.size() != c.size() ||
        b.size() != c.size())
      throw UsageError("tableau operator count mismatch");
    for (int nu = 0; nu < num_operators; ++nu) {
      if (c[nu].size() != static_cast<std::size_t>(stages) ||
          b[nu].size() != static_cast<std::size_t>(stages) ||
          a[nu].size() != static_cast<std::size_t>(stages) * stages)
        throw UsageError("tableau array shapes are inconsistent");
    }
  }

  bool lower_triangular() const {
    for (int nu = 0; nu < num_operators; ++nu)
      for (int i = 0; i < stages; ++i)
        for (int j = i + 1; j < stages; ++j)
          if (A(nu, i, j) != Real(0)) return false;
    return true;
  }
};

/// Backward-Euler Lie-Trotter as an ARK method: stage 0 is u_n, stage i adds
/// an implicit f_i contribution.
template <class Real>
ButcherTableauARK<Real> lie_trotter_tableau(int num_operators = 2) {
  const int p = num_operators + 1;
  ButcherTableauARK<Real> T("lie-trotter", p, num_operators);
  for (int nu = 0; nu < num_operators; ++nu) {
    for (int i = 1; i < p; ++i) {
      T.c[nu][i] = Real(1);
      if (i >= nu + 1) T.A(nu, i, nu + 1) = Real(1);
    }
    T.b[nu][nu + 1] = Real(1);
  }
  return T;
}

/// Strang splitting with trapezoidal sub-steps, six stages. With two
/// operators the f3 stage carries no implicit work.
template <class Real>
ButcherTableauARK<Real> strang_tableau(int num_operators = 3) {
  const Real q = Real(0.25), hf = Real(0.5), one = Real(1);
  if (num_operators == 3) {
    ButcherTableauARK<Real> T("strang-3", 6, 3);
    T.c[0] = {0, hf, 0, 0, hf, one};
    T.c[1] = {0, hf, one, 0, hf, 0};
    T.c[2] = {0, 0, 0, one, 0, 0};
    for (int i = 1; i < 6; ++i) T.A(0, i, 0) = T.A(0, i, 1) = q;
    T.A(0, 5, 4) = T.A(0, 5, 5) = q;
    for (int i = 2; i < 6; ++i) T.A(1, i, 1) = T.A(1, i, 2) = q;
    for (int i = 4; i < 6; ++i) T.A(1, i, 3) = T.A(1, i, 4) = q;
    for (int i = 3; i < 6; ++i) T.A(2, i, 2) = T.A(2, i, 3) = hf;
    for (int nu = 0; nu < 3; ++nu)
      for (int j = 0; j < 6; ++j) T.b[nu][j] = T.A(nu, 5, j);
    return T;
  }
  if (num_operators == 2) {
    // Same stage layout with the f3 columns removed; stage 3 becomes an
    // explicit copy of stage 2 so f2 can be sampled at both t and t+dt.
    ButcherTableauARK<Real> full = strang_tableau<Real>(3);
    ButcherTableauARK<Real> T("strang-2", 6, 2);
    for (int nu = 0; nu < 2; ++nu) {
      T.c[nu] = full.c[nu];
      T.a[nu] = full.a[nu];
      T.b[nu] = full.b[nu];
    }
    return T;
  }
  throw UnsupportedConfiguration("Strang tableau exists for 2 or 3 operators only");
}

template <class Real>
ButcherTableauARK<Real> adi_tableau() {
  const Real hf = Real(0.5);
  ButcherTableauARK<Real> T("adi", 3, 2);
  for (int nu = 0; nu < 2; ++nu) T.c[nu] = {Real(0), hf, Real(1)};
  T.A(0, 1, 1) = hf;
  T.A(1, 1, 0) = hf;
  T.A(0, 2, 1) = Real(1);
  T.A(1, 2, 0) = hf;
  T.A(1, 2, 2) = hf;
  T.b[0] = {Real(0), Real(1), Real(0)};
  T.b[1] = {hf, Real(0), hf};
  return T;
}

/// One step of a diagonally implicit ARK method.
template <class S>
State<S> ark_step(const ButcherTableauARK<real_t<S>>& tab, const SplitIVP<S>& problem, real_t<S> t,
                  real_t<S> dt, const State<S>& u, const NewtonConfig& cfg = {}) {
  using Real = real_t<S>;
  tab.validate();
  if (static_cast<std::size_t>(tab.num_operators) != problem.num_operators())
    throw UsageError("tableau operator count does not match the problem");
  if (!tab.lower_triangular())
    throw UnsupportedConfiguration("ark_step handles lower-triangular tableaux only");
  const int p = tab.stages;
  const int L = tab.num_operators;
  const std::size_t n = problem.dimension();

  // K[nu][j] = f_nu(t + c_j dt, Y_j), evaluated only where some later row or b uses it.
  std::vector<std::vector<State<S>>> K(L, std::vector<State<S>>(p));
  auto needed = [&](int nu, int j) {
    if (tab.b[nu][j] != Real(0)) return true;
    for (int i = j + 1; i < p; ++i)
      if (tab.A(nu, i, j) != Real(0)) return true;
    return false;
  };

  State<S> prev = u;
  for (int i = 0; i < p; ++i) {
    State<S> c = u;
    for (int nu = 0; nu < L; ++nu)
      for (int j = 0; j < i; ++j) {
        Real w = tab.A(nu, i, j);
        if (w == Real(0)) continue;
        for (std::size_t k = 0; k < n; ++k) c[k] += S(dt * w) * K[nu][j][k];
      }
    std::vector<int> implicit_ops;
    for (int nu = 0; nu < L; ++nu)
      if (tab.A(nu, i, i) != Real(0)) implicit_ops.push_back(nu);

    State<S> Y;
    if (implicit_ops.empty()) {
      Y = std::move(c);
    } else if (implicit_ops.size() == 1) {
      int nu = implicit_ops.front();
      Y = solve_stage(problem, nu, t + tab.c[nu][i] * dt, dt * tab.A(nu, i, i), c, prev, cfg);
    } else {
      auto residual = [&](std::span<const S> x, std::span<S> r) {
        State<S> tmp(n);
        for (std::size_t k = 0; k < n; ++k) r[k] = x[k] - c[k];
        for (int nu : implicit_ops) {
          problem.eval(nu, t + tab.c[nu][i] * dt, x, tmp);
          for (std::size_t k = 0; k < n; ++k) r[k] -= S(dt * tab.A(nu, i, i)) * tmp[k];
        }
      };
      Y = newton_solve_fd<S>(residual, prev, cfg).x;
    }
    for (int nu = 0; nu < L; ++nu)
      if (needed(nu, i)) K[nu][i] = problem.eval(nu, t + tab.c[nu][i] * dt, Y);
    prev = std::move(Y);
  }

  State<S> out = u;
  for (int nu = 0; nu < L; ++nu)
    for (int j = 0; j < p; ++j) {
      Real w = tab.b[nu][j];
      if (w == Real(0)) continue;
      for (std::size_t k = 0; k < n; ++k) out[k] += S(dt * w) * K[nu][j][k];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Type-erased steppers for the IDC driver

template <class S>
using StepFunction =
    std::function<State<S>(const SplitIVP<S>&, real_t<S> t, real_t<S> dt, const State<S>& u)>;

template <class S>
struct Stepper {
  std::string name;
  int order = 1;
  StepFunction<S> step;
};

template <class S>
Stepper<S> make_stepper(Scheme scheme, const NewtonConfig& cfg = {}) {
  using Real = real_t<S>;
  Stepper<S> s;
  s.name = to_string(scheme);
  s.order = scheme_order(scheme);
  switch (scheme) {
    case Scheme::LieTrotter:
      s.step = [cfg](const SplitIVP<S>& p, Real t, Real dt, const State<S>& u) {
        return lie_trotter_step(p, t, dt, u, cfg);
      };
      break;
    case Scheme::Strang:
      s.step = [cfg](const SplitIVP<S>& p, Real t, Real dt, const State<S>& u) {
        return strang_step(p, t, dt, u, cfg);
      };
      break;
    case Scheme::Adi:
      s.step = [cfg](const SplitIVP<S>& p, Real t, Real dt, const State<S>& u) {
        return adi_step(p, t, dt, u, cfg);
      };
      break;
  }
  return s;
}

template <class S>
Stepper<S> make_ark_stepper(ButcherTableauARK<real_t<S>> tab, int order, const NewtonConfig& cfg = {}) {
  using Real = real_t<S>;
  Stepper<S> s;
  s.name = "ark:" + tab.name;
  s.order = order;
  s.step = [tab = std::move(tab), cfg](const SplitIVP<S>& p, Real t, Real dt, const State<S>& u) {
    return ark_step(tab, p, t, dt, u, cfg);
  };
  return s;
}

}  // namespace idcos
