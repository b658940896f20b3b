#pragma once

#include <functional>

#include "rshom/field.hpp"
#include "rshom/macro_domain.hpp"

namespace rshom {

/**
 * Staggered-grid (MAC) discretization of the variable-coefficient Stokes
 * system on the unit square with Dirichlet velocity data:
 *
 *   -div(A grad u) + grad p = f,   div u = h,   u = g on the boundary.
 *
 * Velocities live on faces, pressure at cell centers. The full-tensor flux
 * F_i^a = a_ij^{ab} d_j u^b is evaluated at centers and corners with the
 * cross derivatives averaged from their natural locations; Dirichlet rows
 * are eliminated (normal components directly, tangential ones through
 * ghost reflection). The assembled saddle system, bordered by the
 * pressure-mean constraint, is factored with a sparse LU.
 */
struct MacProblem {
  int n = 32;  // cells per side
  std::function<void(const double*, double*)> coeff;     // n^4 tensor at x
  std::function<void(const double*, double*)> forcing;   // 2 components
  std::function<double(const double*)> divergence;       // h at x
  std::function<void(const double*, double*)> boundary;  // g at x
};

struct MacSolution {
  MacroDomain dom;  // square, center lattice
  Field u;          // 2 components at centers (face averages)
  Field p;          // mean zero at centers
  double compat_residual = 0.0;
  double solve_residual = 0.0;
};

MacSolution mac_stokes_solve(const MacProblem& prob);

}  // namespace rshom
