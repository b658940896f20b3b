#pragma once

#include "rshom/cell_stokes.hpp"
#include "rshom/coefficient.hpp"
#include "rshom/field.hpp"

namespace rshom {

/// Fast correctors chi_k^{gb}(y,z), pi_k^b(y,z): one Z-cell Stokes solve per
/// (y node, k, b), mean-zero and divergence-free in z.
struct FastCorrectorFamily {
  PeriodicGrid gridY, gridZ;
  TwoScaleField chi;  // components cchi(g,k,b)
  TwoScaleField pi;   // components cpi(k,b)
  int max_iterations = 0;
  double worst_rel_residual = 0.0;
};

struct SlowCorrectorFamily {
  PeriodicGrid gridY;
  Field chi;  // components cchi(g,k,b)
  Field pi;   // components cpi(k,b)
  SolveReport worst_report;
};

/// Z-averaged coefficient a2_ij^{ab}(y) driving the slow cell problem. The
/// contraction pairs the coefficient's second component index with the
/// corrector's value component, matching the effective-tensor assembly.
struct MesoscaleCoefficient {
  PeriodicGrid gridY;
  double mu = 0.0;
  Field a2;  // components c4(i,j,a,b)
  EllipticityReport ell;
};

struct FastCellSlice {
  Field chi;  // n^3 components on gridZ
  Field pi;   // n^2 components
  SolveReport worst_report;
};

/// One y-slice of the fast cell problem: solves
/// A1(chi_k^b - P_k^b) + grad_z pi_k^b = 0, div_z chi = 0, mean-zero,
/// i.e. forcing -div_z(A(y,.) grad_z P_k^b) in divergence form.
FastCellSlice solve_fast_cell(const TwoScaleCoefficient& A,
                              std::size_t y_index,
                              const StokesOptions& opts = {});

/// Whole family; the per-y solves run as a parallel map.
FastCorrectorFamily solve_fast_cell_family(const TwoScaleCoefficient& A,
                                           const StokesOptions& opts = {});

/// a2(y) = avg_Z (a_ij^{ab} - a_ik^{ag} d_{z_k} chi_j^{gb}) dz by spectral
/// quadrature (plain grid average, exact for trigonometric integrands).
MesoscaleCoefficient assemble_mesoscale(const TwoScaleCoefficient& A,
                                        const FastCorrectorFamily& fast);

SlowCorrectorFamily solve_slow_cell(const MesoscaleCoefficient& meso,
                                    const StokesOptions& opts = {});

/// d_{z_m} chi of the whole fast family, components cdchi(m,g,k,b).
TwoScaleField fast_gradient_z(const FastCorrectorFamily& fast);
/// d_{z_m} of a general Y x Z family, components m * ncomp + c.
TwoScaleField gradient_z(const TwoScaleField& f);
/// d_{y_m} of a Y x Z family (spectral transform in y per z node).
TwoScaleField gradient_y(const TwoScaleField& f, const PeriodicGrid& gridY);

/// Max residuals of the family normalizations (means, discrete divergence),
/// for invariant checks and run logs.
struct FamilyCheck {
  double max_mean_chi = 0.0;
  double max_mean_pi = 0.0;
  double max_div = 0.0;      // spectral divergence norm
  double grad_scale = 0.0;   // max ||grad chi|| over the family
};
FamilyCheck check_fast_family(const FastCorrectorFamily& fast);
FamilyCheck check_slow_family(const SlowCorrectorFamily& slow);

}  // namespace rshom
