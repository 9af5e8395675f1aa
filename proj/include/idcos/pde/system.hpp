#pragma once

// Method-of-lines reduction of
//   u_c,t = D_c (a u_xx + a_x u_x + a u_yy + a_y u_y) + s_c(t, x, y, u)
// on a Grid2D. f_1 holds the x terms, f_2 the y terms and f_3 the pointwise
// source (only when one is given). Storage is component-major, then y, then
// x, so x lines are contiguous and y sweeps gather/scatter through a buffer.

#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "idcos/core.hpp"
#include "idcos/dense.hpp"
#include "idcos/newton.hpp"
#include "idcos/pde/banded.hpp"
#include "idcos/pde/grid.hpp"
#include "idcos/pde/stencil.hpp"

namespace idcos::pde {

enum class Axis { X, Y };

struct ParabolicProblem {
  using Coef = std::function<double(double x, double y)>;
  using Field = std::function<double(int c, double x, double y, double t)>;
  using Source = std::function<void(double t, double x, double y, const double* u, double* out)>;

  std::string name = "custom";
  Grid2D grid;
  int components = 1;
  std::vector<double> diffusion{1.0};
  Coef a, a_x, a_y;      // empty a means a == 1; empty derivatives mean 0
  Field boundary;        // Dirichlet data g_c(x, y, t)
  Field initial;         // t is passed as 0
  Field exact;           // optional
  Source source;         // optional pointwise s(t, x, y, u) -> out[components]
  Source source_jacobian;  // d s / d u, row-major components x components
  bool source_affine = false;
  double end_time = 1.0;

  bool has_source() const { return static_cast<bool>(source); }

  void validate() const {
    grid.validate();
    if (components < 1) throw UsageError("problem needs at least one component");
    if (static_cast<int>(diffusion.size()) != components)
      throw UsageError("one diffusion coefficient per component is required");
    for (double d : diffusion)
      if (!(d >= 0)) throw UsageError("diffusion coefficients must be non-negative");
    if (!initial) throw UsageError("problem has no initial data");
    if (grid.bc == Boundary::Dirichlet && !boundary) throw UsageError("Dirichlet problem has no boundary data");
    if (source && !source_jacobian) throw UsageError("source given without its Jacobian");
    if (!(end_time > 0)) throw UsageError("end time must be positive");
  }
};

/// Banded matrix of one grid line, cyclic for periodic lines.
struct LineMatrix {
  bool cyclic = false;
  BandedMatrix band;
  CyclicBandedMatrix cyc;

  int size() const { return cyclic ? cyc.size() : band.size(); }
  void multiply(std::span<const double> x, std::span<double> y) const {
    if (cyclic)
      cyc.multiply(x, y);
    else
      band.multiply(x, y);
  }
};

class LineSolver {
 public:
  explicit LineSolver(const LineMatrix& m) : cyclic_(m.cyclic) {
    if (cyclic_)
      cyc_ = CyclicBandedLU(m.cyc);
    else
      band_ = BandedLU(m.band);
  }
  void solve_in_place(std::span<double> b) const {
    if (cyclic_)
      cyc_.solve_in_place(b);
    else
      band_.solve_in_place(b);
  }

 private:
  bool cyclic_;
  BandedLU band_;
  CyclicBandedLU cyc_;
};

class SemiDiscreteSystem {
 public:
  SemiDiscreteSystem(ParabolicProblem problem, int order_space)
      : p_(std::move(problem)), order_(order_space) {
    p_.validate();
    const Grid2D& g = p_.grid;
    try {
      Ax_ = std::make_unique<LineStencil>(g.nx, 2, order_, g.bc, g.dx());
      Bx_ = std::make_unique<LineStencil>(g.nx, 1, order_, g.bc, g.dx());
      Ay_ = std::make_unique<LineStencil>(g.ny, 2, order_, g.bc, g.dy());
      By_ = std::make_unique<LineStencil>(g.ny, 1, order_, g.bc, g.dy());
    } catch (const UsageError& e) {
      throw UsageError(std::string("grid too small: ") + e.what());
    }
    const std::size_t n = g.size();
    a_.assign(n, 1.0);
    ax_.assign(n, 0.0);
    ay_.assign(n, 0.0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (p_.a) a_[k] = p_.a(g.x(i), g.y(j));
        if (p_.a_x) ax_[k] = p_.a_x(g.x(i), g.y(j));
        if (p_.a_y) ay_[k] = p_.a_y(g.x(i), g.y(j));
        if (!(a_[k] > 0)) {
          std::ostringstream os;
          os << "coefficient a must be positive; a(" << g.x(i) << "," << g.y(j) << ") = " << a_[k];
          throw UsageError(os.str());
        }
      }
    // x lines share one matrix when every row j carries the same coefficients
    x_uniform_ = y_uniform_ = true;
    for (int j = 1; j < g.ny && x_uniform_; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (a_[g.index(i, j)] != a_[g.index(i, 0)] || ax_[g.index(i, j)] != ax_[g.index(i, 0)]) {
          x_uniform_ = false;
          break;
        }
    for (int i = 1; i < g.nx && y_uniform_; ++i)
      for (int j = 0; j < g.ny; ++j)
        if (a_[g.index(i, j)] != a_[g.index(0, j)] || ay_[g.index(i, j)] != ay_[g.index(0, j)]) {
          y_uniform_ = false;
          break;
        }
  }

  SemiDiscreteSystem(const SemiDiscreteSystem&) = delete;
  SemiDiscreteSystem& operator=(const SemiDiscreteSystem&) = delete;

  const ParabolicProblem& problem() const { return p_; }
  const Grid2D& grid() const { return p_.grid; }
  int order() const { return order_; }
  int components() const { return p_.components; }
  std::size_t dimension() const { return p_.grid.size() * p_.components; }
  std::size_t num_operators() const { return p_.has_source() ? 3 : 2; }
  const LineStencil& stencil(Axis axis, int derivative) const {
    if (axis == Axis::X) return derivative == 2 ? *Ax_ : *Bx_;
    return derivative == 2 ? *Ay_ : *By_;
  }
  double a(int i, int j) const { return a_[p_.grid.index(i, j)]; }

  /// out = x terms of the operator; wall data from g(t) when with_bc.
  void apply_x(double t, std::span<const double> u, std::span<double> out, bool with_bc = true) const {
    check(u, out);
    const Grid2D& g = p_.grid;
    const bool walls = with_bc && g.bc == Boundary::Dirichlet;
    for (int c = 0; c < p_.components; ++c) {
      const double D = p_.diffusion[c];
      const std::size_t off = static_cast<std::size_t>(c) * g.size();
      for (int j = 0; j < g.ny; ++j) {
        const double* line = &u[off + g.index(0, j)];
        double* o = &out[off + g.index(0, j)];
        if (D == 0.0) {
          std::fill(o, o + g.nx, 0.0);
          continue;
        }
        double gl = 0, gr = 0;
        if (walls) {
          gl = p_.boundary(c, g.x_lo, g.y(j), t);
          gr = p_.boundary(c, g.x_hi, g.y(j), t);
        }
        auto get = [line](int k) { return line[k]; };
        for (int i = 0; i < g.nx; ++i) {
          const std::size_t k = g.index(i, j);
          double v = a_[k] * Ax_->apply_row(i, get, gl, gr);
          if (ax_[k] != 0.0) v += ax_[k] * Bx_->apply_row(i, get, gl, gr);
          o[i] = D * v;
        }
      }
    }
  }

  void apply_y(double t, std::span<const double> u, std::span<double> out, bool with_bc = true) const {
    check(u, out);
    const Grid2D& g = p_.grid;
    const bool walls = with_bc && g.bc == Boundary::Dirichlet;
    std::vector<double> line(g.ny);
    for (int c = 0; c < p_.components; ++c) {
      const double D = p_.diffusion[c];
      const std::size_t off = static_cast<std::size_t>(c) * g.size();
      for (int i = 0; i < g.nx; ++i) {
        if (D == 0.0) {
          for (int j = 0; j < g.ny; ++j) out[off + g.index(i, j)] = 0.0;
          continue;
        }
        for (int j = 0; j < g.ny; ++j) line[j] = u[off + g.index(i, j)];
        double gl = 0, gr = 0;
        if (walls) {
          gl = p_.boundary(c, g.x(i), g.y_lo, t);
          gr = p_.boundary(c, g.x(i), g.y_hi, t);
        }
        auto get = [&line](int k) { return line[k]; };
        for (int j = 0; j < g.ny; ++j) {
          const std::size_t k = g.index(i, j);
          double v = a_[k] * Ay_->apply_row(j, get, gl, gr);
          if (ay_[k] != 0.0) v += ay_[k] * By_->apply_row(j, get, gl, gr);
          out[off + k] = D * v;
        }
      }
    }
  }

  /// Known-wall contribution of the x (or y) terms at time t.
  std::vector<double> boundary_terms(Axis axis, double t) const {
    std::vector<double> zero(dimension(), 0.0), out(dimension());
    if (axis == Axis::X)
      apply_x(t, zero, out, true);
    else
      apply_y(t, zero, out, true);
    return out;
  }

  void apply_source(double t, std::span<const double> u, std::span<double> out) const {
    check(u, out);
    const Grid2D& g = p_.grid;
    const int nc = p_.components;
    const std::size_t N = g.size();
    if (!p_.source) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    double uu[8], ss[8];
    std::vector<double> ubuf, sbuf;
    double* up = uu;
    double* sp = ss;
    if (nc > 8) {
      ubuf.resize(nc);
      sbuf.resize(nc);
      up = ubuf.data();
      sp = sbuf.data();
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        for (int c = 0; c < nc; ++c) up[c] = u[c * N + k];
        p_.source(t, g.x(i), g.y(j), up, sp);
        for (int c = 0; c < nc; ++c) out[c * N + k] = sp[c];
      }
  }

  /// out = (I - alpha * J_axis)^{-1} rhs, where J_axis is the (linear) x or y operator.
  void solve_lines(Axis axis, double alpha, std::span<const double> rhs, std::span<double> out) const {
    check(rhs, out);
    const Grid2D& g = p_.grid;
    const std::size_t N = g.size();
    std::copy(rhs.begin(), rhs.end(), out.begin());
    if (alpha == 0.0) return;
    std::vector<double> buf(axis == Axis::X ? g.nx : g.ny);
    for (int c = 0; c < p_.components; ++c) {
      if (p_.diffusion[c] == 0.0) continue;
      const auto& solvers = line_solvers(axis, c, alpha);
      const std::size_t off = static_cast<std::size_t>(c) * N;
      if (axis == Axis::X) {
        for (int j = 0; j < g.ny; ++j) {
          const auto& s = solvers[solvers.size() == 1 ? 0 : j];
          s.solve_in_place(std::span<double>(&out[off + g.index(0, j)], g.nx));
        }
      } else {
        for (int i = 0; i < g.nx; ++i) {
          for (int j = 0; j < g.ny; ++j) buf[j] = out[off + g.index(i, j)];
          solvers[solvers.size() == 1 ? 0 : i].solve_in_place(buf);
          for (int j = 0; j < g.ny; ++j) out[off + g.index(i, j)] = buf[j];
        }
      }
    }
  }

  /// Per-node solve of (I - alpha * ds/du(t, x)) out = rhs.
  void solve_source(double t, std::span<const double> x, double alpha, std::span<const double> rhs,
                    std::span<double> out) const {
    check(rhs, out);
    const Grid2D& g = p_.grid;
    const int nc = p_.components;
    const std::size_t N = g.size();
    if (!p_.source || alpha == 0.0) {
      std::copy(rhs.begin(), rhs.end(), out.begin());
      return;
    }
    std::vector<double> xv(nc), jac(static_cast<std::size_t>(nc) * nc), b(nc);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        for (int c = 0; c < nc; ++c) {
          xv[c] = x[c * N + k];
          b[c] = rhs[c * N + k];
        }
        p_.source_jacobian(t, g.x(i), g.y(j), xv.data(), jac.data());
        for (int r = 0; r < nc; ++r)
          for (int c = 0; c < nc; ++c) jac[r * nc + c] = (r == c ? 1.0 : 0.0) - alpha * jac[r * nc + c];
        solve_small(nc, jac.data(), b.data(), i, j);
        for (int c = 0; c < nc; ++c) out[c * N + k] = b[c];
      }
  }

  /// Banded matrix of scale_i * I + scale_j * D_c (a A + a_d B) on one line.
  LineMatrix line_matrix(Axis axis, int c, int line, double scale_i, double scale_j) const {
    const Grid2D& g = p_.grid;
    const LineStencil& A = stencil(axis, 2);
    const LineStencil& B = stencil(axis, 1);
    const int n = A.size();
    const int w = std::max(A.half_width(), B.half_width());
    const double D = p_.diffusion[c];
    LineMatrix m;
    m.cyclic = g.bc == Boundary::Periodic;
    if (m.cyclic)
      m.cyc = CyclicBandedMatrix(n, w, w);
    else
      m.band = BandedMatrix(n, w, w);
    auto add = [&](int row, int col, double v) {
      if (col < 0 || col >= n) return;  // wall node, goes to the boundary terms
      if (m.cyclic) {
        int d = ((col - row) % n + n) % n;
        if (d > n / 2) d -= n;
        m.cyc.at_offset(row, d) += v;
      } else {
        m.band.at(row, col) += v;
      }
    };
    for (int r = 0; r < n; ++r) {
      const std::size_t k = axis == Axis::X ? g.index(r, line) : g.index(line, r);
      const double coef_d = axis == Axis::X ? ax_[k] : ay_[k];
      add(r, r, scale_i);
      const auto& ra = A.row(r);
      for (std::size_t q = 0; q < ra.cols.size(); ++q) add(r, ra.cols[q], scale_j * D * a_[k] * ra.weights[q]);
      if (coef_d != 0.0) {
        const auto& rb = B.row(r);
        for (std::size_t q = 0; q < rb.cols.size(); ++q) add(r, rb.cols[q], scale_j * D * coef_d * rb.weights[q]);
      }
    }
    return m;
  }

  std::vector<double> initial_state() const { return sample([&](int c, double x, double y) {
    return p_.initial(c, x, y, 0.0);
  }); }

  std::vector<double> exact(double t) const {
    if (!p_.exact) throw UsageError("problem '" + p_.name + "' has no exact solution");
    return sample([&](int c, double x, double y) { return p_.exact(c, x, y, t); });
  }

  template <class F>
  std::vector<double> sample(F&& f) const {
    const Grid2D& g = p_.grid;
    std::vector<double> u(dimension());
    for (int c = 0; c < p_.components; ++c)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) u[c * g.size() + g.index(i, j)] = f(c, g.x(i), g.y(j));
    return u;
  }

  /// The split problem. In correction mode the Dirichlet wall data is
  /// dropped: the correction sweeps see homogeneous boundary terms.
  /// The returned problem refers to this system, which must outlive it.
  SplitIVP<double> ivp(bool correction_mode = false, double end_time = -1) const {
    const bool bc = !correction_mode;
    std::vector<SplitOperator<double>> ops;
    for (Axis axis : {Axis::X, Axis::Y}) {
      SplitOperator<double> op;
      op.eval = [this, axis, bc](double t, std::span<const double> u, std::span<double> out) {
        if (axis == Axis::X)
          apply_x(t, u, out, bc);
        else
          apply_y(t, u, out, bc);
      };
      op.shifted_solve = [this, axis](double, std::span<const double>, double alpha,
                                      std::span<const double> rhs, std::span<double> out) {
        solve_lines(axis, alpha, rhs, out);
      };
      op.affine = true;
      ops.push_back(std::move(op));
    }
    if (p_.has_source()) {
      SplitOperator<double> op;
      op.eval = [this](double t, std::span<const double> u, std::span<double> out) { apply_source(t, u, out); };
      op.shifted_solve = [this](double t, std::span<const double> x, double alpha, std::span<const double> rhs,
                                std::span<double> out) { solve_source(t, x, alpha, rhs, out); };
      op.affine = p_.source_affine;
      ops.push_back(std::move(op));
    }
    return SplitIVP<double>(std::move(ops), initial_state(), end_time > 0 ? end_time : p_.end_time);
  }

  /// Number of distinct line factorizations currently cached.
  std::size_t cached_factorizations() const {
    std::size_t n = 0;
    for (const auto& e : cache_) n += e.solvers->size();
    return n;
  }

 private:
  struct CacheEntry {
    Axis axis;
    int c;
    double alpha;
    std::shared_ptr<std::vector<LineSolver>> solvers;
  };
  static constexpr std::size_t kCacheLimit = 24;

  const std::vector<LineSolver>& line_solvers(Axis axis, int c, double alpha) const {
    // step sizes computed from node differences wobble in the last bits
    for (const auto& e : cache_)
      if (e.axis == axis && e.c == c && std::abs(e.alpha - alpha) <= 1e-13 * std::abs(alpha)) return *e.solvers;
    const Grid2D& g = p_.grid;
    const bool shared = axis == Axis::X ? x_uniform_ : y_uniform_;
    const int lines = shared ? 1 : (axis == Axis::X ? g.ny : g.nx);
    auto solvers = std::make_shared<std::vector<LineSolver>>();
    solvers->reserve(lines);
    for (int l = 0; l < lines; ++l) {
      try {
        solvers->emplace_back(line_matrix(axis, c, l, 1.0, -alpha));
      } catch (const LinearSolveError& e) {
        std::ostringstream os;
        os << (axis == Axis::X ? "x" : "y") << " line " << l << ", component " << c << ": " << e.what();
        throw LinearSolveError(os.str());
      }
    }
    if (cache_.size() >= kCacheLimit) cache_.erase(cache_.begin());
    cache_.push_back({axis, c, alpha, solvers});
    return *cache_.back().solvers;
  }

  void solve_small(int nc, double* m, double* b, int i, int j) const {
    auto fail = [&] {
      std::ostringstream os;
      os << "singular pointwise system at node (" << p_.grid.x(i) << ", " << p_.grid.y(j) << ")";
      throw LinearSolveError(os.str());
    };
    if (nc == 1) {
      if (m[0] == 0.0) fail();
      b[0] /= m[0];
    } else if (nc == 2) {
      const double det = m[0] * m[3] - m[1] * m[2];
      if (det == 0.0) fail();
      const double x0 = (m[3] * b[0] - m[1] * b[1]) / det;
      const double x1 = (m[0] * b[1] - m[2] * b[0]) / det;
      b[0] = x0;
      b[1] = x1;
    } else {
      DenseLU<double> lu(std::vector<double>(m, m + nc * nc), nc);
      lu.solve_in_place(std::span<double>(b, nc));
    }
  }

  void check(std::span<const double> u, std::span<double> out) const {
    if (u.size() != dimension() || out.size() != dimension())
      throw UsageError("field size does not match the grid");
  }

  ParabolicProblem p_;
  int order_;
  std::unique_ptr<LineStencil> Ax_, Bx_, Ay_, By_;
  std::vector<double> a_, ax_, ay_;
  bool x_uniform_ = true, y_uniform_ = true;
  mutable std::vector<CacheEntry> cache_;
};

/// J_1 = dt/2 D(a A_x + a_x B_x) on every x line and J_2 likewise on y lines
/// (component c).
struct LineOperators {
  std::vector<LineMatrix> x, y;
};

inline LineOperators assemble_J(const SemiDiscreteSystem& sys, double dt, int c = 0) {
  LineOperators J;
  const Grid2D& g = sys.grid();
  for (int j = 0; j < g.ny; ++j) J.x.push_back(sys.line_matrix(Axis::X, c, j, 0.0, dt / 2));
  for (int i = 0; i < g.nx; ++i) J.y.push_back(sys.line_matrix(Axis::Y, c, i, 0.0, dt / 2));
  return J;
}

enum class ReactionScheme { BackwardEuler, Trapezoid };

/// One implicit step of u' = s(t, u) at every node independently, by Newton
/// on the local system.
inline std::vector<double> pointwise_reaction_solve(const Grid2D& g, int components,
                                                    const ParabolicProblem::Source& s,
                                                    const ParabolicProblem::Source& ds, double t, double dt,
                                                    std::span<const double> u, ReactionScheme scheme,
                                                    const NewtonConfig& cfg = {}) {
  const std::size_t N = g.size();
  const int nc = components;
  if (u.size() != N * nc) throw UsageError("field size does not match the grid");
  std::vector<double> out(u.begin(), u.end());
  if (!s) return out;
  std::vector<double> u0(nc), c(nc), s0(nc);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double x = g.x(i), y = g.y(j);
      for (int q = 0; q < nc; ++q) u0[q] = u[q * N + k];
      double w = dt;
      c = u0;
      if (scheme == ReactionScheme::Trapezoid) {
        w = dt / 2;
        s(t, x, y, u0.data(), s0.data());
        for (int q = 0; q < nc; ++q) c[q] += w * s0[q];
      }
      auto residual = [&](std::span<const double> v, std::span<double> r) {
        s(t + dt, x, y, v.data(), r.data());
        for (int q = 0; q < nc; ++q) r[q] = v[q] - w * r[q] - c[q];
      };
      auto jacobian = [&](std::span<const double> v, std::span<double> jac) {
        ds(t + dt, x, y, v.data(), jac.data());
        for (int r = 0; r < nc; ++r)
          for (int q = 0; q < nc; ++q) jac[r * nc + q] = (r == q ? 1.0 : 0.0) - w * jac[r * nc + q];
      };
      try {
        auto res = newton_solve_dense<double>(residual, jacobian, u0, cfg);
        for (int q = 0; q < nc; ++q) out[q * N + k] = res.x[q];
      } catch (const NonConvergenceError& e) {
        std::ostringstream os;
        os << "reaction solve failed at node (" << x << ", " << y << "): " << e.what();
        throw NonConvergenceError(os.str(), e.iterations(), e.residual_norm(), 2, t + dt);
      }
    }
  return out;
}

}  // namespace idcos::pde
