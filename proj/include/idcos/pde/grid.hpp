#pragma once

#include <cstddef>

#include "idcos/core.hpp"
#include "idcos/pde/stencil.hpp"

namespace idcos::pde {

/// Tensor grid on [x_lo,x_hi] x [y_lo,y_hi]. Dirichlet grids store the
/// nx*ny interior nodes (walls carry known data); periodic grids store nx
/// nodes per period starting at the low end. Fields are row-major with y
/// outer: index(i, j) = j*nx + i.
struct Grid2D {
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  int nx = 16, ny = 16;
  Boundary bc = Boundary::Dirichlet;

  void validate() const {
    if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw UsageError("grid domain is empty");
    if (nx < 1 || ny < 1) throw UsageError("grid needs at least one node per axis");
  }
  double dx() const { return (x_hi - x_lo) / (bc == Boundary::Periodic ? nx : nx + 1); }
  double dy() const { return (y_hi - y_lo) / (bc == Boundary::Periodic ? ny : ny + 1); }
  double x(int i) const { return x_lo + (bc == Boundary::Periodic ? i : i + 1) * dx(); }
  double y(int j) const { return y_lo + (bc == Boundary::Periodic ? j : j + 1) * dy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
};

}  // namespace idcos::pde
