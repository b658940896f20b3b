#pragma once

#include <map>
#include <string>

#include "rshom/effective.hpp"
#include "rshom/fine_stokes.hpp"
#include "rshom/smoothing.hpp"

namespace rshom {

/// Cell-problem outputs feeding the corrector expansion.
struct CorrectorBundle {
  const CoefficientSpec* spec = nullptr;
  const EffectiveTensor* ahat = nullptr;
  const FastCorrectorFamily* fast = nullptr;
  const SlowCorrectorFamily* slow = nullptr;
  const TwoScaleField* I1 = nullptr;
  const Field* I2 = nullptr;
  const TwoScaleField* I3 = nullptr;
  const FluxCorrectorSet* flux1 = nullptr;
  const FluxCorrectorSetY* flux2 = nullptr;
  const FluxCorrectorSet* flux3 = nullptr;
};

/**
 * All corrector objects evaluated on the macroscopic grid at one eps,
 * with cell-side spectral derivatives taken before evaluation so that
 * every x-derivative of an oscillatory factor is exact (chain rule), never
 * a macro-grid derivative of an unresolved product.
 */
struct CorrectorEvals {
  double eps = 0.0;
  // slow objects at y = x/eps
  Field chi_s;    // cchi(g,k,b)
  Field dchi_s;   // cdchi(m,g,k,b)
  Field d2chi_s;  // ((h*n+m)*n^3 + cchi): second y derivatives
  Field pi_s;     // cpi(k,b)
  // fast objects at (x/eps, x/eps^2)
  Field chi_f, dzchi_f, dychi_f;  // cchi / cdchi packing
  Field pi_f;                     // cpi
  // flux correctors
  Field E1, q1, dyq1, CyE1, Czq1;  // dyq1: cdq4 packing; CyE1: c4; Czq1: cpi
  Field E2, q2, dyq2;              // on y only
  Field E3, q3, dyq3, CyE3, Czq3;
  // coefficient and discrepancy tensors at the composite coordinates
  Field A;              // c4
  Field I1e, I2e, I3e;  // c4
};

// Derivative-axis-augmented q packing: (axis, i, k, b).
inline int cdq4(int axis, int i, int k, int b, int n) {
  return ((axis * n + i) * n + k) * n + b;
}

CorrectorEvals evaluate_correctors(const CorrectorBundle& in, double eps,
                                   const MacroDomain& dom,
                                   bool force_pointwise = false);

/// psi_{c eps} S_eps(d_k u0^b), components cpi(k,b), plus the smoothed and
/// raw gradients needed by the diagnostics.
struct SmoothedGradients {
  Field G;    // psi * S_eps(grad u0), components cpi(k,b)
  Field DG;   // d_h G, components cq(h,k,b)
  Field du0;  // raw grad u0, components cpi(k,b)
  double grad_u0_l2 = 0.0;
  double hess_u0_l2 = 0.0;
  double grad_u0_boundary_l2 = 0.0;  // over the 5-eps boundary layer
};
SmoothedGradients smoothed_gradients(const Field& u0, double eps,
                                     double cutoff_multiple,
                                     const MacroDomain& dom);

/// Corrector sum phi of the expansion (equals w_eps - (u_eps - u0)).
Field build_phi(const CorrectorEvals& ev, const SmoothedGradients& sg);
Field build_w_eps(const Field& u_eps, const Field& u0,
                  const CorrectorEvals& ev, const SmoothedGradients& sg);
/// Mean-zero pressure corrector of the two-scale expansion.
Field build_pi_tilde(const CorrectorEvals& ev, const SmoothedGradients& sg);
/// Corrected pressure combination built from the flux-corrector potentials
/// (chain-rule exact x-derivatives).
Field build_z_eps(const Field& p_eps, const Field& p0,
                  const CorrectorEvals& ev, const SmoothedGradients& sg);

/// L2 norms of the residual decomposition terms; keys H1, H21, H22, H23,
/// H3, H4, J1, J2, J3 plus the combined H21+H22+H23 and the reference H2.
std::map<std::string, double> residual_decomposition(
    const CorrectorEvals& ev, const SmoothedGradients& sg,
    const MacroDomain& dom);

struct ExpansionBundle {
  Field w_eps, phi, z_eps, pi_tilde;
  std::map<std::string, double> residual_norms;
  double div_identity_rel = 0.0;   // ||div w - div phi|| / ||div phi||
  double compat_integral = 0.0;    // |int div phi|
  double z_identity_rel = 0.0;     // pressure rewriting residual
  FieldNorms w_norms;
  double z_minus_mean_l2 = 0.0;
  double err_u_l2 = 0.0;
  double err_p_corrected_l2 = 0.0;  // ||p_eps - p0 + pi_tilde - mean||
};

ExpansionBundle build_expansion(const CorrectorBundle& in,
                                const StokesSolution& fine,
                                const StokesSolution& hom, double eps,
                                double cutoff_multiple);

/// Weak-form consistency of the family-1 flux rewriting: both sides of the
/// divergence identity are assembled with chain-rule-exact derivatives and
/// tested against random smooth fields; returns the relative mismatch.
double flux_rewrite_weak_residual(const CorrectorEvals& ev,
                                  const SmoothedGradients& sg,
                                  const MacroDomain& dom,
                                  std::uint64_t seed = 99);

}  // namespace rshom
