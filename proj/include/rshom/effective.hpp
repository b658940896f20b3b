#pragma once

#include <cstdint>
#include <vector>

#include "rshom/coefficient.hpp"
#include "rshom/correctors.hpp"
#include "rshom/field.hpp"

namespace rshom {

struct EffectiveTensor {
  int dim = 2;
  double mu = 0.0;
  std::vector<double> a;      // c4(i,j,a,b), raw assembly
  std::vector<double> a_sym;  // symmetrized report form (no symmetry assumed)
  EllipticityReport ell;

  double at(int i, int j, int alpha, int beta) const {
    return a[c4(i, j, alpha, beta, dim)];
  }
};

/// Homogenized tensor: the Y x Z average of
///   a - a dz_chi(y,z) - a dy_chi(y) + a dz_chi(y,z) dy_chi(y)
/// with spectral quadrature, plus a verified ellipticity report
/// (mu <= min quotient, max quotient <= 1/mu must hold).
EffectiveTensor assemble_effective(const TwoScaleCoefficient& A,
                                   const FastCorrectorFamily& fast,
                                   const SlowCorrectorFamily& slow,
                                   std::uint64_t seed = 20240901,
                                   int n_xi = 10000);

/// Discrepancy tensors feeding the flux correctors. All have n^4
/// components indexed c4(i,j,a,b).
TwoScaleField compute_I1(const TwoScaleCoefficient& A,
                         const FastCorrectorFamily& fast);
/// I2 lives on Y. Its measured Y-average (largest entry magnitude) is
/// reported through measured_mean and subtracted; MeanNotZero is thrown if
/// it exceeds 1e-9 times the coefficient scale.
Field compute_I2(const EffectiveTensor& ahat, const TwoScaleCoefficient& A,
                 const FastCorrectorFamily& fast,
                 const SlowCorrectorFamily& slow,
                 double* measured_mean = nullptr);
TwoScaleField compute_I3(const TwoScaleCoefficient& A,
                         const FastCorrectorFamily& fast,
                         const SlowCorrectorFamily& slow);

// Skew pair packing for E_{hij}^{ab}: pairs (h < i) are stored, the
// accessor applies the sign.
inline int n_pairs(int n) { return n * (n - 1) / 2; }
inline int pair_index(int h, int i, int n) {
  // (0,1) -> 0, (0,2) -> 1, (1,2) -> 2 for n = 3
  int p = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (a == h && b == i) return p;
      ++p;
    }
  return -1;
}
inline int cE(int pair, int j, int a, int b, int n) {
  return ((pair * n + j) * n + a) * n + b;
}

/**
 * Flux corrector pair (E, q) for a discrepancy tensor on the oscillatory
 * cell, built mode by mode from the closed-form Fourier expressions of the
 * auxiliary problem  Laplace f + grad q = I, div f = 0  with
 * E_{hij} = d_h f_{ij} - d_i f_{hj}. Sign convention used throughout:
 *
 *   I_{ij}^{ab} = d_k E_{kij}^{ab} + d_a q_{ij}^b,
 *
 * for every family; the family-3 pressure link then reads
 * d_i q_{3,ik}^a = -pi_j^g(y,z) dy_j chi_k^{ga}(y).
 */
struct FluxCorrectorSet {
  int family = 0;  // 1 or 3
  TwoScaleField E;  // components cE(pair,j,a,b)
  TwoScaleField q;  // components cq(i,k,b)
};

struct FluxCorrectorSetY {
  Field E;  // components cE(pair,j,a,b), on Y
  Field q;  // components cq(i,k,b)
};

/// Cell kernel: one oscillatory variable. Throws NonZeroMean if any
/// component average exceeds 1e-10 * max(||I||, scale_hint); the hint lets
/// family sweeps use the family-wide norm for slices that vanish.
FluxCorrectorSetY build_flux_correctors_cell(const Field& I,
                                             double scale_hint = 0.0);
/// Y x Z families (m = 1, 3): the cell kernel per y node (parallel map).
FluxCorrectorSet build_flux_correctors(const TwoScaleField& I, int family);

/// Relative residual of d_k E + d_a q - I over the whole family.
double flux_divergence_residual(const FluxCorrectorSet& set,
                                const TwoScaleField& I);
double flux_divergence_residual_cell(const FluxCorrectorSetY& set,
                                     const Field& I);

/// Relative residual of sum_i d_i q_{ik}^b against a target field with
/// components cpi(k,b).
double pressure_link_residual(const FluxCorrectorSet& set,
                              const TwoScaleField& target);
double pressure_link_residual_cell(const FluxCorrectorSetY& set,
                                   const Field& target);

/// Family-3 link target: -pi_j^g(y,z) dy_j chi_k^{ga}(y), components
/// cpi(k,a).
TwoScaleField family3_link_target(const FastCorrectorFamily& fast,
                                  const SlowCorrectorFamily& slow);

}  // namespace rshom
