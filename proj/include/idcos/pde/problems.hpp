#pragma once

// Registered test problems.

#include <cmath>
#include <numbers>
#include <string>

#include "idcos/pde/system.hpp"

namespace idcos::pde {

/// u_t = Δu on [-1,1]^2, u = (1-y) e^{t+x} (also on the walls).
inline ParabolicProblem example1(int n = 45) {
  ParabolicProblem p;
  p.name = "example1";
  p.grid = {-1, 1, -1, 1, n, n, Boundary::Dirichlet};
  p.exact = [](int, double x, double y, double t) { return (1 - y) * std::exp(t + x); };
  p.boundary = p.exact;
  p.initial = p.exact;
  p.end_time = 0.025;
  return p;
}

/// u_t = ∇·(a ∇u), a = 2 + sin(π(4x+y))/2, u0 = sin(2π(x+y)), periodic on [-1,1]^2.
inline ParabolicProblem example2(int n = 45) {
  using std::numbers::pi;
  ParabolicProblem p;
  p.name = "example2";
  p.grid = {-1, 1, -1, 1, n, n, Boundary::Periodic};
  p.a = [](double x, double y) { return 2 + 0.5 * std::sin(pi * (4 * x + y)); };
  p.a_x = [](double x, double y) { return 2 * pi * std::cos(pi * (4 * x + y)); };
  p.a_y = [](double x, double y) { return 0.5 * pi * std::cos(pi * (4 * x + y)); };
  p.initial = [](int, double x, double y, double) { return std::sin(2 * pi * (x + y)); };
  p.end_time = 0.025;
  return p;
}

/// u_t = Δu - u^2 + forcing on [-1,1]^2 with u = e^{-t} cos(πx) cos(πy).
inline ParabolicProblem example3(int n = 45) {
  using std::numbers::pi;
  ParabolicProblem p;
  p.name = "example3";
  p.grid = {-1, 1, -1, 1, n, n, Boundary::Dirichlet};
  p.exact = [](int, double x, double y, double t) {
    return std::exp(-t) * std::cos(pi * x) * std::cos(pi * y);
  };
  p.boundary = p.exact;
  p.initial = p.exact;
  p.source = [](double t, double x, double y, const double* u, double* out) {
    const double cc = std::cos(pi * x) * std::cos(pi * y);
    out[0] = -u[0] * u[0] + std::exp(-2 * t) * cc * cc + (2 * pi * pi - 1) * std::exp(-t) * cc;
  };
  p.source_jacobian = [](double, double, double, const double* u, double* jac) { jac[0] = -2 * u[0]; };
  p.end_time = 0.025;
  return p;
}

struct FhnParams {
  double Du = 1, Dv = 0, a = 0.1, C = 1, d = 0.5, delta = 0.005;
};

/// FitzHugh-Nagumo: u_t = Du Δu + h(u,v)/δ, v_t = Dv Δv + u - d v,
/// h = C u (1-u)(u-a) - v, periodic on [-20,20]^2.
inline ParabolicProblem fhn(int n = 200, FhnParams q = {}) {
  ParabolicProblem p;
  p.name = "fhn";
  p.grid = {-20, 20, -20, 20, n, n, Boundary::Periodic};
  p.components = 2;
  p.diffusion = {q.Du, q.Dv};
  p.initial = [](int c, double x, double y, double) {
    if (c == 0) {
      if (x < 0 || y > 5) return 0.0;
      const double s1 = 1 + std::exp(4 * (std::abs(x) - 5)), s2 = 1 + std::exp(4 * (std::abs(x) - 1));
      return 1 / (s1 * s1) - 1 / (s2 * s2);
    }
    return (x < 1 && y > -10) ? 0.15 : 0.0;
  };
  p.source = [q](double, double, double, const double* u, double* out) {
    out[0] = (q.C * u[0] * (1 - u[0]) * (u[0] - q.a) - u[1]) / q.delta;
    out[1] = u[0] - q.d * u[1];
  };
  p.source_jacobian = [q](double, double, double, const double* u, double* jac) {
    // d/du [C u (1-u)(u-a)] = C (-3u^2 + 2(1+a)u - a)
    jac[0] = q.C * (-3 * u[0] * u[0] + 2 * (1 + q.a) * u[0] - q.a) / q.delta;
    jac[1] = -1 / q.delta;
    jac[2] = 1;
    jac[3] = -q.d;
  };
  p.end_time = 10;
  return p;
}

struct SchnakenbergParams {
  double kappa = 100, a = 0.1305, b = 0.7695, D1 = 0.05, D2 = 1;
};

/// Ca_t = D1 ΔCa + κ(a - Ca + Ca^2 Ci), Ci_t = D2 ΔCi + κ(b - Ca^2 Ci), periodic on [0,1]^2.
inline ParabolicProblem schnakenberg(int n = 200, SchnakenbergParams q = {}) {
  ParabolicProblem p;
  p.name = "schnakenberg";
  p.grid = {0, 1, 0, 1, n, n, Boundary::Periodic};
  p.components = 2;
  p.diffusion = {q.D1, q.D2};
  p.initial = [q](int c, double x, double y, double) {
    if (c == 0) {
      const double dx = x - 1.0 / 3.0, dy = y - 0.5;
      return q.a + q.b + 1e-3 * std::exp(-100 * (dx * dx + dy * dy));
    }
    return q.b / ((q.a + q.b) * (q.a + q.b));
  };
  p.source = [q](double, double, double, const double* u, double* out) {
    const double ca2ci = u[0] * u[0] * u[1];
    out[0] = q.kappa * (q.a - u[0] + ca2ci);
    out[1] = q.kappa * (q.b - ca2ci);
  };
  p.source_jacobian = [q](double, double, double, const double* u, double* jac) {
    jac[0] = q.kappa * (-1 + 2 * u[0] * u[1]);
    jac[1] = q.kappa * u[0] * u[0];
    jac[2] = -q.kappa * 2 * u[0] * u[1];
    jac[3] = -q.kappa * u[0] * u[0];
  };
  p.end_time = 1.5;
  return p;
}

/// Registered problem by id; n overrides the grid size when positive.
inline ParabolicProblem make_problem(const std::string& id, int n = 0) {
  if (id == "example1") return n > 0 ? example1(n) : example1();
  if (id == "example2") return n > 0 ? example2(n) : example2();
  if (id == "example3") return n > 0 ? example3(n) : example3();
  if (id == "fhn") return n > 0 ? fhn(n) : fhn();
  if (id == "schnakenberg") return n > 0 ? schnakenberg(n) : schnakenberg();
  throw UsageError("unknown problem '" + id + "'");
}

}  // namespace idcos::pde
