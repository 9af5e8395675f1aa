#pragma once

// Peaceman-Rachford step for the linear problem, with the wall data split
// between the sweeps so that only t_n and t_{n+1} values enter, and the
// unfactored Crank-Nicolson step used as its reference.

#include <vector>

#include "idcos/pde/system.hpp"

namespace idcos::pde {

/// (I - J_1) U~ = (I + J_2) U + S_1, then (I - J_2) U' = (I + J_1) U~ + S_2, with
/// S_1 = dt/2 (b_x(t+dt) + b_y(t)) and S_2 = dt/2 (b_x(t) + b_y(t+dt)).
inline std::vector<double> adi_pde_step(const SemiDiscreteSystem& sys, double t, double dt,
                                        std::span<const double> u) {
  if (sys.problem().has_source())
    throw UnsupportedConfiguration("adi_pde_step handles source-free problems only");
  const std::size_t n = sys.dimension();
  if (u.size() != n) throw UsageError("field size does not match the grid");
  const double h = dt / 2;
  std::vector<double> bx0 = sys.boundary_terms(Axis::X, t), bx1 = sys.boundary_terms(Axis::X, t + dt);
  std::vector<double> by0 = sys.boundary_terms(Axis::Y, t), by1 = sys.boundary_terms(Axis::Y, t + dt);
  std::vector<double> work(n), rhs(n), mid(n), out(n);

  sys.apply_y(t, u, work, false);
  for (std::size_t k = 0; k < n; ++k) rhs[k] = u[k] + h * work[k] + h * (bx1[k] + by0[k]);
  sys.solve_lines(Axis::X, h, rhs, mid);

  sys.apply_x(t, mid, work, false);
  for (std::size_t k = 0; k < n; ++k) rhs[k] = mid[k] + h * work[k] + h * (bx0[k] + by1[k]);
  sys.solve_lines(Axis::Y, h, rhs, out);
  return out;
}

/// (I - J_1 - J_2) U' = (I + J_1 + J_2) U + dt/2 (b(t) + b(t+dt)), solved as
/// one banded system over the whole (Dirichlet) grid. Single component.
inline std::vector<double> cn_unfactored_step(const SemiDiscreteSystem& sys, double t, double dt,
                                              std::span<const double> u) {
  const Grid2D& g = sys.grid();
  if (g.bc != Boundary::Dirichlet || sys.components() != 1)
    throw UnsupportedConfiguration("unfactored reference needs a scalar Dirichlet problem");
  if (sys.problem().has_source())
    throw UnsupportedConfiguration("unfactored reference handles source-free problems only");
  const std::size_t n = sys.dimension();
  const int N = static_cast<int>(n);
  const double h = dt / 2;

  std::vector<double> fx(n), fy(n), rhs(n);
  sys.apply_x(t, u, fx, false);
  sys.apply_y(t, u, fy, false);
  auto bx0 = sys.boundary_terms(Axis::X, t), bx1 = sys.boundary_terms(Axis::X, t + dt);
  auto by0 = sys.boundary_terms(Axis::Y, t), by1 = sys.boundary_terms(Axis::Y, t + dt);
  for (std::size_t k = 0; k < n; ++k) rhs[k] = u[k] + h * (fx[k] + fy[k]) + h * (bx0[k] + bx1[k] + by0[k] + by1[k]);

  const int wx = sys.stencil(Axis::X, 2).half_width();
  const int wy = sys.stencil(Axis::Y, 2).half_width();
  const int bw = std::max(wx, wy * g.nx);
  BandedMatrix A(N, bw, bw);
  for (int j = 0; j < g.ny; ++j) {
    LineMatrix m = sys.line_matrix(Axis::X, 0, j, 0.0, -h);
    for (int i = 0; i < g.nx; ++i)
      for (int c = std::max(0, i - wx); c <= std::min(g.nx - 1, i + wx); ++c)
        A.at(static_cast<int>(g.index(i, j)), static_cast<int>(g.index(c, j))) += m.band.get(i, c);
  }
  for (int i = 0; i < g.nx; ++i) {
    LineMatrix m = sys.line_matrix(Axis::Y, 0, i, 0.0, -h);
    for (int j = 0; j < g.ny; ++j)
      for (int c = std::max(0, j - wy); c <= std::min(g.ny - 1, j + wy); ++c)
        A.at(static_cast<int>(g.index(i, j)), static_cast<int>(g.index(i, c))) += m.band.get(j, c);
  }
  for (int k = 0; k < N; ++k) A.at(k, k) += 1.0;
  BandedLU lu(A);
  lu.solve_in_place(rhs);
  return rhs;
}

}  // namespace idcos::pde
