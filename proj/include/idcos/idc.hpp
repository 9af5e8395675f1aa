#pragma once

// Integral deferred correction around a splitting stepper.
//
// Each macro interval [t0, t0+H] carries M+1 uniform nodes. A predictor
// sweep gives level 0; every correction sweep solves the error equation
//
//   Q' = sum_nu G_nu(t, Q),   Q(t0) = 0,
//   G_nu(t, Q) = f_nu(t, A(t) + Q) - f_nu(t, v(t)),
//   A(t) = u0 + int_{t0}^{t} f(s, v(s)) ds,
//
// with the level's splitting stepper and adds delta_m = Q_m - I_m, where
// I(t) = v(t) - A(t) is the integrated residual, to the nodal values.

#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "idcos/core.hpp"
#include "idcos/newton.hpp"
#include "idcos/polyint.hpp"
#include "idcos/steppers.hpp"

namespace idcos {

enum class ResidualMode { InterpolantExact, Oversampled };
enum class ErrorForm { IntegralQ, AdditiveResidual };

inline std::string to_string(ResidualMode m) {
  return m == ResidualMode::InterpolantExact ? "interpolant-exact" : "oversampled";
}

/// Smallest M that keeps the quadrature from capping the target order.
inline int default_M(int target_order) { return std::max(target_order, 3); }

template <class S>
struct IDCConfig {
  int M = 3;
  int corrections = 0;
  Stepper<S> predictor;
  std::vector<Stepper<S>> correctors;  // per sweep; empty or short falls back to the predictor
  NewtonConfig newton;
  ResidualMode residual_mode = ResidualMode::InterpolantExact;
  int oversample_nodes = 13;  // interior nodes in oversampled mode
  ErrorForm error_form = ErrorForm::IntegralQ;
  // When set, G_nu is built from this problem instead of the solved one.
  // Used by the PDE driver to drop inhomogeneous boundary data, which cancels
  // in G anyway.
  const SplitIVP<S>* correction_problem = nullptr;
  bool keep_subnodes = false;
  std::function<void(const std::string&)> warn;

  static IDCConfig make(Scheme scheme, int M, int corrections, const NewtonConfig& nc = {}) {
    IDCConfig c;
    c.M = M;
    c.corrections = corrections;
    c.newton = nc;
    c.predictor = make_stepper<S>(scheme, nc);
    return c;
  }

  const Stepper<S>& corrector(int k) const {
    if (k >= 1 && static_cast<std::size_t>(k) <= correctors.size()) return correctors[k - 1];
    return predictor;
  }

  int accumulated_order() const {
    int s = predictor.order;
    for (int k = 1; k <= corrections; ++k) s += corrector(k).order;
    return s;
  }

  void validate() const {
    if (M < 1 || M > kMaxSubIntervals) {
      std::ostringstream os;
      os << "M must lie in [1, " << kMaxSubIntervals << "], got " << M;
      throw UsageError(os.str());
    }
    if (corrections < 0) throw UsageError("number of corrections must be non-negative");
    if (!predictor.step) throw UsageError("IDC predictor stepper is not set");
    for (int k = 1; k <= corrections; ++k)
      if (!corrector(k).step) throw UsageError("IDC corrector stepper is not set");
    if (residual_mode == ResidualMode::Oversampled &&
        (oversample_nodes < 0 || oversample_nodes + 1 > kMaxSubIntervals))
      throw UsageError("oversampled residual needs between 0 and 15 interior nodes");
    newton.validate();
  }
};

/// Nodal values and cached right-hand sides of one prediction/correction level.
template <class S>
struct IDCLevelResult {
  using Real = real_t<S>;
  UniformNodeSet<Real> nodes;
  std::vector<State<S>> values;             // [m]
  std::vector<std::vector<State<S>>> rhs;   // [m][nu] = f_nu(t_m, v_m)

  State<S> total_rhs(int m) const {
    State<S> out = rhs[m][0];
    for (std::size_t nu = 1; nu < rhs[m].size(); ++nu)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += rhs[m][nu][i];
    return out;
  }

  Trajectory<S> trajectory() const {
    Trajectory<S> tr;
    for (int m = 0; m <= nodes.M(); ++m) tr.push_back(nodes.node(m), values[m]);
    return tr;
  }
};

namespace detail {

template <class S>
std::vector<std::vector<State<S>>> nodal_rhs(const SplitIVP<S>& p,
                                              const UniformNodeSet<real_t<S>>& nodes,
                                              const std::vector<State<S>>& values) {
  std::vector<std::vector<State<S>>> out(values.size());
  for (std::size_t m = 0; m < values.size(); ++m) {
    out[m].resize(p.num_operators());
    for (std::size_t nu = 0; nu < p.num_operators(); ++nu)
      out[m][nu] = p.eval(nu, nodes.node(static_cast<int>(m)), values[m]);
  }
  return out;
}

/// Re-raises the in-flight idcos exception with `context` prefixed, keeping
/// its dynamic type.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(context + ": " + e.what(), e.iterations(), e.residual_norm(), e.op(),
                              e.time());
  } catch (const NumericalError& e) {
    throw NumericalError(e.op(), e.time(), context + ": " + e.what());
  } catch (const PoleError& e) {
    throw PoleError(context + ": " + e.what());
  } catch (const LinearSolveError& e) {
    throw LinearSolveError(context + ": " + e.what());
  } catch (const UnsupportedConfiguration& e) {
    throw UnsupportedConfiguration(context + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(context + ": " + e.what());
  }
}

}  // namespace detail

/// Error equation of one correction sweep.
///
/// Holds the previous level, the integral of f along its interpolant and a
/// per-time memo of the anchor A(t) and of f_nu(t, v(t)); the stepper asks
/// for the same stage times once per operator.
template <class S>
class ErrorProblem {
 public:
  using Real = real_t<S>;

  ErrorProblem(const SplitIVP<S>& problem, const IDCLevelResult<S>& level, ResidualMode mode,
               int oversample_nodes, ErrorForm form, const SplitIVP<S>* correction_problem = nullptr)
      : problem_(problem),
        gprob_(correction_problem ? *correction_problem : problem),
        level_(level),
        mode_(mode),
        form_(form),
        basis_(LagrangeBasis<Real>::get(level.nodes.M())) {
    if (gprob_.num_operators() != problem_.num_operators() ||
        gprob_.dimension() != problem_.dimension())
      throw UsageError("correction problem does not match the solved problem");
    const int M = level.nodes.M();
    F_.reserve(M + 1);
    for (int m = 0; m <= M; ++m) F_.push_back(level.total_rhs(m));
    if (mode_ == ResidualMode::Oversampled && form_ == ErrorForm::IntegralQ) {
      const int q = oversample_nodes + 1;
      fine_ = std::make_unique<UniformNodeSet<Real>>(level.nodes.node(0),
                                                     (level.nodes.t_end() - level.nodes.node(0)) /
                                                         Real(q),
                                                     q);
      fineF_.resize(q + 1);
      for (int j = 0; j <= q; ++j) {
        Real tau = fine_->node(j);
        State<S> v = (j == 0) ? level.values.front()
                     : (j == q) ? level.values.back()
                                : lagrange_eval(level.nodes, level.values, tau);
        fineF_[j] = problem_.eval_total(tau, v);
      }
    }
  }

  const IDCLevelResult<S>& level() const { return level_; }

  /// int_{t0}^{t} f(s, v(s)) ds under the configured residual mode.
  State<S> integral_of_f(Real t) const {
    if (fine_) return partial_integral(*fine_, fineF_, t);
    const auto& nodes = level_.nodes;
    int m = basis_->node_index(nodes.sigma(t));
    if (m == 0) return State<S>(problem_.dimension(), S(0));
    if (m > 0) {
      const auto& g = basis_->gamma();
      const int M = nodes.M();
      Real len = nodes.node(m) - nodes.node(0);
      State<S> out(problem_.dimension(), S(0));
      for (int j = 0; j <= M; ++j) {
        Real w = len * g[static_cast<std::size_t>(m - 1) * (M + 1) + j];
        if (w == Real(0)) continue;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * F_[j][i];
      }
      return out;
    }
    return partial_integral(nodes, F_, t);
  }

  /// I(t) = v(t) - u0 - int_{t0}^{t} f(s, v(s)) ds.
  State<S> residual_integral(Real t) const {
    const Entry& e = entry(t);
    State<S> out = e.v;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= e.anchor[i];
    return out;
  }

  /// The error equation as a split problem in Q (or in e for the additive form).
  SplitIVP<S> make_ivp() const {
    const std::size_t L = problem_.num_operators();
    std::vector<SplitOperator<S>> ops(L);
    for (std::size_t nu = 0; nu < L; ++nu) {
      const auto& base = gprob_.op(nu);
      auto& op = ops[nu];
      op.affine = base.affine;
      op.eval = [this, nu](Real t, std::span<const S> q, std::span<S> out) {
        const Entry& e = entry(t);
        State<S> x = shifted(e, q);
        gprob_.eval(nu, t, x, out);
        const State<S>& b = e.base[nu];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
        if (form_ == ErrorForm::AdditiveResidual) {
          const Real inv = Real(1) / Real(problem_.num_operators());
          for (std::size_t i = 0; i < out.size(); ++i) out[i] -= inv * e.eps[i];
        }
      };
      if (base.shifted_solve) {
        op.shifted_solve = [this, nu](Real t, std::span<const S> q, Real alpha,
                                      std::span<const S> rhs, std::span<S> out) {
          State<S> x = shifted(entry(t), q);
          gprob_.op(nu).shifted_solve(t, x, alpha, rhs, out);
        };
      }
      if (base.jacobian) {
        op.jacobian = [this, nu](Real t, std::span<const S> q, std::span<S> jac) {
          State<S> x = shifted(entry(t), q);
          gprob_.op(nu).jacobian(t, x, jac);
        };
      }
    }
    return SplitIVP<S>(std::move(ops), State<S>(problem_.dimension(), S(0)),
                       level_.nodes.t_end() - level_.nodes.node(0));
  }

 private:
  struct Entry {
    State<S> v;                     // interpolated previous level
    State<S> anchor;                // u0 + int f (Q form)
    std::vector<State<S>> base;     // f_nu(t, v(t)) of the correction problem
    State<S> eps;                   // v'(t) - f(t, v(t)) (additive form)
  };

  State<S> shifted(const Entry& e, std::span<const S> q) const {
    const State<S>& a = form_ == ErrorForm::IntegralQ ? e.anchor : e.v;
    State<S> x(a.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = a[i] + q[i];
    return x;
  }

  const Entry& entry(Real t) const {
    const auto& nodes = level_.nodes;
    int m = basis_->node_index(nodes.sigma(t));
    if (m >= 0) {
      if (auto it = node_memo_.find(m); it != node_memo_.end()) return it->second;
    } else if (auto it = memo_.find(t); it != memo_.end()) {
      return it->second;
    }

    Entry e;
    const std::size_t L = problem_.num_operators();
    e.v = m >= 0 ? level_.values[m] : lagrange_eval(nodes, level_.values, t);
    Real tt = m >= 0 ? nodes.node(m) : t;
    if (m >= 0 && &gprob_ == &problem_) {
      e.base = level_.rhs[m];
    } else {
      e.base.resize(L);
      for (std::size_t nu = 0; nu < L; ++nu) e.base[nu] = gprob_.eval(nu, tt, e.v);
    }
    if (form_ == ErrorForm::IntegralQ) {
      e.anchor = integral_of_f(tt);
      const State<S>& u0 = level_.values.front();
      for (std::size_t i = 0; i < e.anchor.size(); ++i) e.anchor[i] += u0[i];
      if (m == 0) e.anchor = u0;
    } else {
      auto d = basis_->derivative_values(nodes.sigma(tt), 1);
      for (auto& w : d) w /= nodes.h();
      e.eps = detail::combine(d, level_.values);
      State<S> f = problem_.eval_total(tt, e.v);
      for (std::size_t i = 0; i < f.size(); ++i) e.eps[i] -= f[i];
    }
    if (m >= 0) return node_memo_.emplace(m, std::move(e)).first->second;
    return memo_.emplace(t, std::move(e)).first->second;
  }

  const SplitIVP<S>& problem_;
  const SplitIVP<S>& gprob_;
  const IDCLevelResult<S>& level_;
  ResidualMode mode_;
  ErrorForm form_;
  std::shared_ptr<const LagrangeBasis<Real>> basis_;
  std::vector<State<S>> F_;
  std::unique_ptr<UniformNodeSet<Real>> fine_;
  std::vector<State<S>> fineF_;
  mutable std::map<int, Entry> node_memo_;
  mutable std::map<Real, Entry> memo_;
};

/// Level 0: M steps of the predictor.
template <class S>
IDCLevelResult<S> predict(const SplitIVP<S>& problem, const UniformNodeSet<real_t<S>>& nodes,
                          const State<S>& u0, const IDCConfig<S>& cfg) {
  if (u0.size() != problem.dimension()) throw UsageError("predict: initial state has wrong size");
  if (!all_finite(std::span<const S>(u0))) throw UsageError("predict: initial state is not finite");
  IDCLevelResult<S> lvl{nodes, {}, {}};
  lvl.values.reserve(nodes.M() + 1);
  lvl.values.push_back(u0);
  for (int m = 0; m < nodes.M(); ++m) {
    try {
      lvl.values.push_back(cfg.predictor.step(problem, nodes.node(m), nodes.h(), lvl.values.back()));
    } catch (const Error&) {
      detail::rethrow_with_context("prediction, node " + std::to_string(m));
    }
  }
  lvl.rhs = detail::nodal_rhs(problem, nodes, lvl.values);
  return lvl;
}

/// v_{m+1} - u0 - int_{t0}^{t_{m+1}} f(s, v(s)) ds for m = 0..M-1.
template <class S>
std::vector<State<S>> residual_integrals(const IDCLevelResult<S>& level, const SplitIVP<S>& problem,
                                         ResidualMode mode = ResidualMode::InterpolantExact,
                                         int oversample_nodes = 13) {
  ErrorProblem<S> ep(problem, level, mode, oversample_nodes, ErrorForm::IntegralQ);
  std::vector<State<S>> out;
  const State<S>& u0 = level.values.front();
  for (int m = 1; m <= level.nodes.M(); ++m) {
    State<S> r = level.values[m];
    State<S> integral = ep.integral_of_f(level.nodes.node(m));
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= u0[i] + integral[i];
    out.push_back(std::move(r));
  }
  return out;
}

/// One correction sweep k >= 1.
template <class S>
IDCLevelResult<S> correct_once(const SplitIVP<S>& problem, const IDCLevelResult<S>& level, int k,
                               const IDCConfig<S>& cfg) {
  if (k < 1) throw UsageError("correction sweep index must be at least 1");
  ErrorProblem<S> ep(problem, level, cfg.residual_mode, cfg.oversample_nodes, cfg.error_form,
                     cfg.correction_problem);
  SplitIVP<S> eq = ep.make_ivp();
  const Stepper<S>& stepper = cfg.corrector(k);
  const auto& nodes = level.nodes;
  const std::size_t n = problem.dimension();

  IDCLevelResult<S> next{nodes, {}, {}};
  next.values.reserve(nodes.M() + 1);
  next.values.push_back(level.values.front());
  State<S> q(n, S(0));
  for (int m = 0; m < nodes.M(); ++m) {
    try {
      q = stepper.step(eq, nodes.node(m), nodes.h(), q);
    } catch (const Error&) {
      detail::rethrow_with_context("correction " + std::to_string(k) + ", node " +
                                   std::to_string(m));
    }
    State<S> v = level.values[m + 1];
    if (cfg.error_form == ErrorForm::IntegralQ) {
      State<S> I = ep.residual_integral(nodes.node(m + 1));
      for (std::size_t i = 0; i < n; ++i) v[i] += q[i] - I[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) v[i] += q[i];
    }
    next.values.push_back(std::move(v));
  }
  next.rhs = detail::nodal_rhs(problem, nodes, next.values);
  return next;
}

/// Predictor plus all corrections on one macro interval.
template <class S>
IDCLevelResult<S> idc_macro_step(const SplitIVP<S>& problem, real_t<S> t0, real_t<S> H,
                                 const State<S>& u0, const IDCConfig<S>& cfg) {
  UniformNodeSet<real_t<S>> nodes(t0, H / real_t<S>(cfg.M), cfg.M);
  IDCLevelResult<S> lvl = predict(problem, nodes, u0, cfg);
  for (int k = 1; k <= cfg.corrections; ++k) lvl = correct_once(problem, lvl, k, cfg);
  return lvl;
}

/// N uniform macro steps over [0, T]. Returns the macro-node trajectory, or
/// every sub-node when cfg.keep_subnodes is set.
template <class S>
Trajectory<S> idc_solve(const SplitIVP<S>& problem, int N, const IDCConfig<S>& cfg) {
  using Real = real_t<S>;
  if (N < 1) throw UsageError("number of macro steps must be at least 1");
  cfg.validate();
  if (cfg.accumulated_order() > cfg.M + 1) {
    std::ostringstream os;
    os << "accumulated order " << cfg.accumulated_order() << " exceeds M+1 = " << cfg.M + 1
       << "; the observed order will saturate";
    if (cfg.warn)
      cfg.warn(os.str());
    else
      std::cerr << "warning: " << os.str() << "\n";
  }
  const Real H = problem.end_time() / Real(N);
  Trajectory<S> tr;
  tr.push_back(Real(0), problem.initial_state());
  State<S> u = problem.initial_state();
  for (int n = 0; n < N; ++n) {
    const Real t0 = Real(n) * H;
    std::optional<IDCLevelResult<S>> lvl;
    try {
      lvl.emplace(idc_macro_step(problem, t0, H, u, cfg));
    } catch (const Error&) {
      detail::rethrow_with_context("macro interval " + std::to_string(n));
    }
    if (cfg.keep_subnodes)
      for (int m = 1; m < cfg.M; ++m) tr.push_back(lvl->nodes.node(m), lvl->values[m]);
    u = lvl->values.back();
    tr.push_back(n + 1 == N ? problem.end_time() : Real(n + 1) * H, u);
  }
  return tr;
}

}  // namespace idcos
