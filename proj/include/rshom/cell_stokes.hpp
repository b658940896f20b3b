#pragma once

#include "rshom/field.hpp"
#include "rshom/spectral.hpp"

namespace rshom {

struct StokesOptions {
  double rtol = 1e-10;          // relative residual target
  int iter_budget_factor = 10;  // budget = factor * points_per_dim
  bool throw_on_stall = true;
};

struct SolveReport {
  int iterations = 0;
  double rel_residual = 0.0;       // projected momentum residual / rhs norm
  double momentum_residual = 0.0;  // absolute, after pressure recovery
  double divergence_residual = 0.0;
  bool used_cg = true;
};

struct StokesResult {
  Field velocity;  // n components, mean zero
  Field pressure;  // 1 component, mean zero
  SolveReport report;
};

/**
 * Periodic variable-coefficient Stokes solve on the unit cell:
 *
 *   -div(A grad u) + grad p = f - div(F),   div u = h,
 *
 * with mean-zero normalizations for u and p. Any of f (n comps), F (flux
 * components c2(i,a); forcing enters as -div of it) and h may be null.
 * The velocity iteration is a Leray-projection preconditioned Krylov loop
 * (CG when A has the a_ij^{ab} = a_ji^{ba} symmetry, BiCGStab otherwise)
 * with the constant-coefficient inverse applied spectrally. The pressure is
 * recovered afterwards from the divergence of the momentum residual.
 *
 * Throws SingularSystem if A is not positive definite on the grid,
 * NoConvergence if the iteration budget is exhausted.
 */
StokesResult stokes_cell_solve(const Field& coeff, const Field* f,
                               const Field* F, const Field* h,
                               const StokesOptions& opts = {});

/// out = -div(A grad u), the unprojected momentum operator (spectral
/// derivatives, pointwise coefficient product). Used by the solver and by
/// test oracles that assemble the dense saddle-point matrix.
void apply_momentum_operator(const Field& coeff, const Field& u, Field& out);

struct AuxStokesResult {
  Field f;  // n components, mean zero, divergence free
  Field q;  // 1 component, mean zero
};

/**
 * Constant-coefficient auxiliary cell problem, solved exactly mode by mode:
 *
 *   Laplace f + grad q = I,   div f = 0,   mean-zero f and q.
 *
 * Throws NonZeroMean if any component average of I exceeds
 * 1e-10 * ||I||_L2.
 */
AuxStokesResult solve_stokes_auxiliary(const Field& rhs);

}  // namespace rshom
