#pragma once

#include <cstdint>
#include <vector>

#include "rshom/field.hpp"
#include "rshom/grid.hpp"

namespace rshom {

/**
 * Coefficient tensors are finite trigonometric polynomials with integer
 * wave vectors,
 *
 *   A(y,z) = sum_t  amp_t * cos(2 pi (ky_t . y + kz_t . z) + phase_t),
 *
 * which makes them Y-Z periodic by construction and gives a computable
 * Lipschitz-in-y constant  M = sum_t |amp_t|_F * 2 pi |ky_t|.
 */
struct CoefficientTerm {
  std::vector<double> amp;  // n^4 entries, index c4(i,j,a,b)
  std::vector<int> ky;      // size dim
  std::vector<int> kz;      // size dim
  double phase = 0.0;
};

struct CoefficientSpec {
  int dim = 2;
  double mu = 1.0;  // declared ellipticity constant
  std::vector<CoefficientTerm> terms;

  void validate() const;
  void evaluate(const double* y, const double* z, double* out) const;
  double lipschitz_m() const;
  double max_abs_bound() const;  // sum of |amp| entries, crude sup bound
  bool is_symmetric(double tol = 1e-14) const;  // a_ij^{ab} == a_ji^{ba}

  static std::vector<double> identity_tensor(int dim);
  /// Convenience: scalar multiple of the identity tensor, scale*cos(...).
  static CoefficientTerm isotropic_term(int dim, double scale,
                                        std::vector<int> ky,
                                        std::vector<int> kz,
                                        double phase = 0.0);
  /// Constant identity coefficient with the given mu.
  static CoefficientSpec identity(int dim, double mu = 1.0);
};

struct EllipticityReport {
  double min_eig = 0.0;   // min eigenvalue of the symmetrized tensor
  double max_eig = 0.0;   // max eigenvalue
  double min_rayleigh = 0.0;  // over the random xi probes
  double max_rayleigh = 0.0;
};

/// Rayleigh quotient a_ij^{ab} xi_i^a xi_j^b / |xi|^2 for one tensor.
double rayleigh_quotient(const double* tensor, const double* xi, int dim);
/// Min/max eigenvalue of the symmetrized tensor (exact ellipticity bounds).
void tensor_eig_range(const double* tensor, int dim, double& lo, double& hi);

struct TwoScaleCoefficient {
  CoefficientSpec spec;
  PeriodicGrid gridY, gridZ;
  bool materialized = false;
  TwoScaleField samples;  // n^4 components; empty when not materialized
  EllipticityReport ell;

  /// A(y, .) on gridZ for one y node (copied from storage or evaluated).
  Field slice_y(std::size_t ynode) const;
  /// Z-average of the samples at one y node (n^4 values).
  std::vector<double> z_average(std::size_t ynode) const;
};

/// Samples A on gridY x gridZ, verifies the ellipticity condition at every
/// sampled point against the declared mu, and attaches the report (exact
/// eigenvalue range plus random-xi Rayleigh probes). With materialize=false
/// the samples are evaluated on demand instead of stored; the verification
/// still visits every node.
TwoScaleCoefficient sample_coefficient(const CoefficientSpec& spec,
                                       const PeriodicGrid& gridY,
                                       const PeriodicGrid& gridZ,
                                       bool materialize = true,
                                       std::uint64_t seed = 12345,
                                       int n_xi = 64);

}  // namespace rshom
