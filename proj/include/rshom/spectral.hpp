#pragma once

#include <complex>
#include <vector>

#include "rshom/field.hpp"
#include "rshom/grid.hpp"

namespace rshom {

using cplx = std::complex<double>;

/**
 * Spectral coefficients of a real field in the Fourier-series convention
 *
 *   g(x) = sum_k  ghat_k  exp(2 pi i k . x),       x in (0,1)^dim,
 *
 * so that ghat_0 is the cell average and Plancherel reads
 * (1/N^d) sum_x |g(x)|^2 = sum_k |ghat_k|^2. Storage mirrors Field
 * (component-major, row-major nodes); the wave number of spectral index t
 * along an axis is wavenumber(t, n).
 */
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(const PeriodicGrid& grid, int ncomp)
      : grid_(grid), ncomp_(ncomp),
        data_(grid.node_count() * static_cast<std::size_t>(ncomp)) {}

  const PeriodicGrid& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }
  std::size_t nodes() const { return grid_.node_count(); }

  cplx* comp(int c) { return data_.data() + nodes() * c; }
  const cplx* comp(int c) const { return data_.data() + nodes() * c; }
  cplx& at(int c, std::size_t m) { return data_[nodes() * c + m]; }
  cplx at(int c, std::size_t m) const { return data_[nodes() * c + m]; }

 private:
  PeriodicGrid grid_;
  int ncomp_ = 0;
  std::vector<cplx> data_;
};

namespace fft {
// Normalized transforms (thread-safe; plans cached per grid size).
void forward(const PeriodicGrid& g, const double* in, cplx* out);
void inverse(const PeriodicGrid& g, const cplx* in, double* out);
void forward_c(const PeriodicGrid& g, const cplx* in, cplx* out);
void inverse_c(const PeriodicGrid& g, const cplx* in, cplx* out);
}  // namespace fft

Spectrum to_spectrum(const Field& f);
Field from_spectrum(const Spectrum& s);

/// out = d/dx_axis in (factor 2 pi i k_axis); Nyquist modes are zeroed.
void spectral_derivative(const PeriodicGrid& g, const cplx* in, cplx* out,
                         int axis);

/// out = (-Laplace)^{-1} in: divide by 4 pi^2 |k|^2, zero mode to 0.
void spectral_inv_neg_laplacian(const PeriodicGrid& g, const cplx* in,
                                cplx* out);

/// Zero all modes that touch a Nyquist index. The discrete solvers work on
/// the Nyquist-free trigonometric space (odd derivatives are not
/// representable there), so input data is filtered through this.
void zero_nyquist(const PeriodicGrid& g, cplx* spec);

/// Nodal-field variants of the Nyquist filter (FFT round trip per
/// component; the two-scale variant filters the oscillatory grid only).
void filter_nyquist(Field& f);
void filter_nyquist_z(TwoScaleField& f);

/// In-place Leray projection of a velocity spectrum (n components):
/// uhat <- uhat - k (k . uhat) / |k|^2. Removes the zero mode.
void leray_project(const PeriodicGrid& g, std::vector<cplx*> comps);

/// Derivative of a nodal field, via the spectrum. Returns d_axis f per comp.
Field spectral_derivative_field(const Field& f, int axis);

/// Gradient of a vector field u (n comps) packed as d_j u^b -> c2(j,b).
Field spectral_gradient(const Field& u);

/// Divergence of a flux field F_i^a (components c2(i,a)): returns the
/// n-component field sum_i d_i F_i^a.
Field spectral_divergence_flux(const Field& flux);

/// Trigonometric interpolant value at an arbitrary point (unit cell coords).
/// Nyquist modes are split evenly between +n/2 and -n/2.
double eval_trig(const PeriodicGrid& g, const cplx* spec, const double* point);

/// sum_k |ghat_k|^2 for one component (for Plancherel checks).
double spectral_power(const PeriodicGrid& g, const cplx* spec);

}  // namespace rshom
