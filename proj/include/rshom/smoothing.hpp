#pragma once

#include <cstdint>
#include <vector>

#include "rshom/field.hpp"
#include "rshom/macro_domain.hpp"

namespace rshom {

/// Radial bump exp(-1/(1 - s)) on s = (|x| / (1/2))^2 < 1, zero outside;
/// supported in the ball of radius 1/2 and normalized discretely at use.
double mollifier_profile(double r_over_half_sq);

/**
 * Smoothing operator: convolution with the scaled unit-mass bump,
 * kernel support radius eps/2. On the torus the circular convolution is
 * computed through the FFT, which equals the direct quadrature sum over the
 * support ball; on the square the sum is taken directly with the field
 * extended by zero. The discrete kernel mass is normalized to one, so
 * constants are preserved exactly. Throws EpsilonTooSmall for
 * eps < 2 * spacing.
 */
Field mollify(const Field& f, double eps, const MacroDomain& dom);

struct CutoffField {
  double r = 0.0;
  Field psi;
  std::vector<std::uint8_t> in_sigma_r;    // dist > r
  std::vector<std::uint8_t> in_sigma_2r;   // dist > 2r
  double max_grad_times_r = 0.0;
};

/// psi_r: 1 on Sigma_2r, 0 outside Sigma_r, values in [0,1], built by
/// mollifying the indicator of Sigma_{3r/2} with kernel radius r/2.
/// On the torus psi is identically one. Throws RTooSmall for
/// r <= 2 * spacing on the square.
CutoffField cutoff(const MacroDomain& dom, double r);

/**
 * Evaluation of periodic cell fields at the scaled macroscopic coordinates
 * x / eps^power mod 1 (trigonometric interpolation; exact for resolved
 * modes). When 1/eps is an integer the composite lands on the macro
 * lattice and is computed by spectral mode accumulation; otherwise each
 * node is evaluated directly from the interpolant.
 */
Field two_scale_eval(const Field& cell, double eps, int power,
                     const MacroDomain& dom, bool force_pointwise = false);

/// g(x/eps, x/eps^2) for a field on Y x Z.
Field two_scale_eval(const TwoScaleField& cell, double eps,
                     const MacroDomain& dom, bool force_pointwise = false);

/// Interpolant of one component at an arbitrary cell coordinate pair
/// (y, z in unit-cell coords); reference implementation for tests.
double eval_two_scale_at(const TwoScaleField& cell, int comp, const double* y,
                         const double* z);

}  // namespace rshom
