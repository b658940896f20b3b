#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rshom/cell_stokes.hpp"
#include "rshom/coefficient.hpp"
#include "rshom/effective.hpp"
#include "rshom/macro_domain.hpp"

namespace rshom {

/// Analytic trigonometric-polynomial data field:
/// value_c(x) = sum_t amp_t[c] * cos(2 pi k_t . x + phase_t).
struct AnalyticField {
  int dim = 2;
  int ncomp = 1;
  struct Term {
    std::vector<double> amp;  // ncomp entries
    std::vector<int> k;       // dim entries
    double phase = 0.0;
  };
  std::vector<Term> terms;

  void eval(const double* x, double* out) const;
  /// d/dx_d of component c at x.
  double eval_deriv(const double* x, int c, int d) const;
  bool empty() const { return terms.empty(); }
  Field sample(const MacroDomain& dom) const;
};

struct DomainSpec {
  MacroDomain::Kind kind = MacroDomain::Kind::torus;
  int dim = 2;
  int macro_n = 64;
  AnalyticField f;  // forcing, ncomp = dim
  AnalyticField h;  // divergence data, scalar
  AnalyticField g;  // square only: boundary data = trace of this field

  MacroDomain domain() const {
    return MacroDomain(kind, PeriodicGrid(dim, macro_n));
  }
  /// Torus: mean-zero f and h; square: int h = boundary flux of g.
  void validate() const;
};

struct ResidualReport {
  int iterations = 0;
  double rel_residual = 0.0;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  double energy_quotient = 0.0;  // (|u|_H1 + |p|_L2) / data norm
};

struct StokesSolution {
  MacroDomain dom;
  Field u;  // dim components
  Field p;  // mean zero
  ResidualReport report;
};

/// Oscillating-coefficient solve with A(x/eps, x/eps^2). Torus: spectral
/// Leray-preconditioned iteration; square: MAC discretization with a sparse
/// direct factorization. Throws ResolutionInsufficient unless
/// spacing <= eps^2 / 8.
StokesSolution solve_reiterated(const CoefficientSpec& A, double eps,
                                const DomainSpec& spec,
                                const StokesOptions& opts = {});

/// Constant-coefficient (homogenized) solve on the same domain.
StokesSolution solve_homogenized(const EffectiveTensor& ahat,
                                 const DomainSpec& spec,
                                 const StokesOptions& opts = {});

/// Generic constant- or variable-tensor solve used by both entry points;
/// the coefficient is supplied as an analytic evaluator at macro points.
StokesSolution solve_fine(
    const std::function<void(const double*, double*)>& coeff,
    const DomainSpec& spec, const StokesOptions& opts);

struct FieldNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
};

/// Discrete norms by quadrature (spectral gradient on the torus, finite
/// differences on the square).
FieldNorms norms(const MacroDomain& dom, const Field& f);
/// L2 over the boundary layer {dist <= r} (empty on the torus).
double boundary_layer_l2(const MacroDomain& dom, const Field& f, double r);

}  // namespace rshom
