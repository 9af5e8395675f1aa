#pragma once

// Problem and solution representations shared by the steppers and the IDC
// driver: split right-hand sides, state vectors, trajectories, errors.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace idcos {

template <class T>
struct scalar_traits {
  using real = T;
  static constexpr bool is_complex = false;
};

template <class T>
struct scalar_traits<std::complex<T>> {
  using real = T;
  static constexpr bool is_complex = true;
};

template <class S>
using real_t = typename scalar_traits<S>::real;

template <class S>
using State = std::vector<S>;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad index, length mismatch, range).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Requested scheme/operator-count combination is not available.
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

/// An operator evaluation produced NaN or Inf.
class NumericalError : public Error {
 public:
  NumericalError(std::size_t op, double t, const std::string& what)
      : Error(what), op_(op), t_(t) {}
  std::size_t op() const { return op_; }
  double time() const { return t_; }

 private:
  std::size_t op_;
  double t_;
};

class LinearSolveError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration exhausted its budget. Carries the last residual norm
/// and, when raised from inside a stepper, the operator and stage time.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, int iterations, double residual,
                      std::size_t op = 0, double t = 0.0)
      : Error(what), iterations_(iterations), residual_(residual), op_(op), t_(t) {}
  int iterations() const { return iterations_; }
  double residual_norm() const { return residual_; }
  std::size_t op() const { return op_; }
  double time() const { return t_; }

 private:
  int iterations_;
  double residual_;
  std::size_t op_;
  double t_;
};

/// Implicit factor (1 - alpha*lambda) vanished in a linear stability solve.
class PoleError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Small vector helpers

template <class S>
bool is_finite(const S& x) {
  using std::isfinite;
  if constexpr (scalar_traits<S>::is_complex) {
    return isfinite(x.real()) && isfinite(x.imag());
  } else {
    return isfinite(x);
  }
}

template <class S>
real_t<S> max_norm(std::span<const S> v) {
  using std::abs;
  real_t<S> m(0);
  for (const S& x : v) {
    real_t<S> a = abs(x);
    if (a > m) m = a;
  }
  return m;
}

template <class S>
real_t<S> max_norm(const State<S>& v) {
  return max_norm(std::span<const S>(v));
}

template <class S>
bool all_finite(std::span<const S> v) {
  return std::all_of(v.begin(), v.end(), [](const S& x) { return is_finite(x); });
}

/// y += a * x
template <class S, class A>
void axpy(A a, std::span<const S> x, std::span<S> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <class T>
double to_double(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return static_cast<double>(x);
  } else {
    return x.template convert_to<double>();
  }
}

// ---------------------------------------------------------------------------
// Split operators

/// One additive piece f_nu(t, u) of the right-hand side.
///
/// `eval` is required. The remaining members are optional hooks used by the
/// implicit stage solver: `shifted_solve` solves (I - alpha*J(t,x)) y = rhs
/// where J is the Jacobian of `eval` at x; `jacobian` fills a dense row-major
/// Jacobian. With neither, Newton falls back to forward differences.
/// `affine` promises that eval is affine in u, so a single Newton step from
/// any guess is exact.
template <class S>
struct SplitOperator {
  using Real = real_t<S>;
  using Eval = std::function<void(Real t, std::span<const S> u, std::span<S> out)>;
  using ShiftedSolve = std::function<void(Real t, std::span<const S> x, Real alpha,
                                          std::span<const S> rhs, std::span<S> out)>;
  using DenseJacobian =
      std::function<void(Real t, std::span<const S> u, std::span<S> jac_row_major)>;

  Eval eval;
  ShiftedSolve shifted_solve;
  DenseJacobian jacobian;
  bool affine = false;
};

/// u' = sum_nu f_nu(t, u), u(0) = u0, t in [0, T].
template <class S>
class SplitIVP {
 public:
  using Real = real_t<S>;

  SplitIVP(std::vector<SplitOperator<S>> ops, State<S> u0, Real end_time)
      : ops_(std::move(ops)), u0_(std::move(u0)), end_time_(end_time) {
    if (ops_.empty()) throw UsageError("SplitIVP needs at least one operator");
    if (!(end_time_ > Real(0))) throw UsageError("SplitIVP end time must be positive");
    if (u0_.empty()) throw UsageError("SplitIVP initial state is empty");
    for (const auto& op : ops_)
      if (!op.eval) throw UsageError("SplitIVP operator without evaluator");
  }

  std::size_t num_operators() const { return ops_.size(); }
  std::size_t dimension() const { return u0_.size(); }
  const State<S>& initial_state() const { return u0_; }
  Real end_time() const { return end_time_; }
  const SplitOperator<S>& op(std::size_t nu) const {
    check_index(nu);
    return ops_[nu];
  }

  /// out = f_nu(t, u). Operator indices are zero-based.
  void eval(std::size_t nu, Real t, std::span<const S> u, std::span<S> out) const {
    check_index(nu);
    if (u.size() != dimension() || out.size() != dimension())
      throw UsageError("state dimension mismatch in operator evaluation");
    ops_[nu].eval(t, u, out);
    if (!all_finite(std::span<const S>(out))) {
      std::ostringstream os;
      os << "non-finite value from operator " << nu << " at t=" << to_double(t);
      throw NumericalError(nu, to_double(t), os.str());
    }
  }

  State<S> eval(std::size_t nu, Real t, const State<S>& u) const {
    State<S> out(dimension());
    eval(nu, t, u, out);
    return out;
  }

  void eval_total(Real t, std::span<const S> u, std::span<S> out) const {
    std::fill(out.begin(), out.end(), S(0));
    State<S> tmp(dimension());
    for (std::size_t nu = 0; nu < ops_.size(); ++nu) {
      eval(nu, t, u, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += tmp[i];
    }
  }

  State<S> eval_total(Real t, const State<S>& u) const {
    State<S> out(dimension());
    eval_total(t, u, out);
    return out;
  }

 private:
  void check_index(std::size_t nu) const {
    if (nu >= ops_.size()) {
      std::ostringstream os;
      os << "operator index " << nu << " out of range (have " << ops_.size() << ")";
      throw UsageError(os.str());
    }
  }

  std::vector<SplitOperator<S>> ops_;
  State<S> u0_;
  Real end_time_;
};

/// Node times and states of a discrete solution.
template <class S>
class Trajectory {
 public:
  using Real = real_t<S>;

  void push_back(Real t, State<S> u) {
    if (!times_.empty()) {
      if (!(t > times_.back())) throw UsageError("trajectory times must increase strictly");
      if (u.size() != states_.front().size())
        throw UsageError("trajectory state dimension changed");
    }
    times_.push_back(t);
    states_.push_back(std::move(u));
  }

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<Real>& times() const { return times_; }
  const std::vector<State<S>>& states() const { return states_; }
  const State<S>& back() const { return states_.back(); }
  Real back_time() const { return times_.back(); }

 private:
  std::vector<Real> times_;
  std::vector<State<S>> states_;
};

/// Convenience: scalar-linear operator f(t,u) = lambda*u applied componentwise.
template <class S>
SplitOperator<S> linear_operator(S lambda) {
  using Real = real_t<S>;
  SplitOperator<S> op;
  op.eval = [lambda](Real, std::span<const S> u, std::span<S> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = lambda * u[i];
  };
  op.shifted_solve = [lambda](Real, std::span<const S>, Real alpha, std::span<const S> rhs,
                              std::span<S> out) {
    S denom = S(1) - S(alpha) * lambda;
    if (denom == S(0)) throw PoleError("singular implicit factor 1 - alpha*lambda");
    for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = rhs[i] / denom;
  };
  op.affine = true;
  return op;
}

}  // namespace idcos
