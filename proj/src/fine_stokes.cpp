#include "rshom/fine_stokes.hpp"

#include <cmath>

#include "rshom/errors.hpp"
#include "rshom/mac_stokes.hpp"

namespace rshom {

void AnalyticField::eval(const double* x, double* out) const {
  for (int c = 0; c < ncomp; ++c) out[c] = 0.0;
  for (const auto& t : terms) {
    double arg = t.phase;
    for (int d = 0; d < dim; ++d) arg += 2.0 * M_PI * t.k[d] * x[d];
    double w = std::cos(arg);
    for (int c = 0; c < ncomp; ++c) out[c] += w * t.amp[c];
  }
}

double AnalyticField::eval_deriv(const double* x, int c, int d) const {
  double v = 0.0;
  for (const auto& t : terms) {
    double arg = t.phase;
    for (int dd = 0; dd < dim; ++dd) arg += 2.0 * M_PI * t.k[dd] * x[dd];
    v += -2.0 * M_PI * t.k[d] * std::sin(arg) * t.amp[c];
  }
  return v;
}

Field AnalyticField::sample(const MacroDomain& dom) const {
  Field out(dom.grid, ncomp);
  std::vector<double> val(ncomp);
  for (std::size_t m = 0; m < dom.nodes(); ++m) {
    auto x = dom.coord(m);
    eval(x.data(), val.data());
    for (int c = 0; c < ncomp; ++c) out.at(c, m) = val[c];
  }
  return out;
}

void DomainSpec::validate() const {
  if (kind == MacroDomain::Kind::torus) {
    // mean-zero forcing and divergence data: every term must oscillate
    for (const auto& t : f.terms) {
      bool zero_mode = true;
      for (int d = 0; d < dim; ++d) zero_mode = zero_mode && t.k[d] == 0;
      if (zero_mode) {
        double amp = 0.0;
        for (double a : t.amp) amp = std::max(amp, std::fabs(a));
        if (amp * std::fabs(std::cos(t.phase)) > 1e-14)
          throw MeanNotZero("torus forcing must be mean-zero componentwise");
      }
    }
    for (const auto& t : h.terms) {
      bool zero_mode = true;
      for (int d = 0; d < dim; ++d) zero_mode = zero_mode && t.k[d] == 0;
      if (zero_mode && std::fabs(t.amp[0] * std::cos(t.phase)) > 1e-14)
        throw MeanNotZero("torus divergence data must be mean-zero");
    }
  }
}

namespace {

StokesSolution solve_fine_torus(
    const std::function<void(const double*, double*)>& coeff,
    const DomainSpec& spec, const StokesOptions& opts) {
  MacroDomain dom = spec.domain();
  const int n = spec.dim;
  Field A(dom.grid, n * n * n * n);
  std::vector<double> tensor(n * n * n * n);
  for (std::size_t m = 0; m < dom.nodes(); ++m) {
    auto x = dom.coord(m);
    coeff(x.data(), tensor.data());
    for (int c = 0; c < A.ncomp(); ++c) A.at(c, m) = tensor[c];
  }
  Field f = spec.f.sample(dom);
  Field h = spec.h.sample(dom);
  bool has_h = !spec.h.empty();
  StokesResult r =
      stokes_cell_solve(A, &f, nullptr, has_h ? &h : nullptr, opts);

  StokesSolution out;
  out.dom = dom;
  out.u = std::move(r.velocity);
  out.p = std::move(r.pressure);
  out.report.iterations = r.report.iterations;
  out.report.rel_residual = r.report.rel_residual;
  out.report.momentum_residual = r.report.momentum_residual;
  out.report.divergence_residual = r.report.divergence_residual;
  return out;
}

StokesSolution solve_fine_square(
    const std::function<void(const double*, double*)>& coeff,
    const DomainSpec& spec, const StokesOptions&) {
  MacProblem prob;
  prob.n = spec.macro_n;
  prob.coeff = coeff;
  prob.forcing = [&spec](const double* x, double* out) {
    spec.f.eval(x, out);
  };
  prob.divergence = [&spec](const double* x) {
    if (spec.h.empty()) return 0.0;
    double v;
    spec.h.eval(x, &v);
    return v;
  };
  prob.boundary = [&spec](const double* x, double* out) {
    if (spec.g.empty()) {
      out[0] = out[1] = 0.0;
      return;
    }
    spec.g.eval(x, out);
  };
  MacSolution sol = mac_stokes_solve(prob);
  StokesSolution out;
  out.dom = sol.dom;
  out.u = std::move(sol.u);
  out.p = std::move(sol.p);
  out.report.rel_residual = sol.solve_residual;
  out.report.momentum_residual = sol.solve_residual;
  out.report.divergence_residual = sol.compat_residual;
  return out;
}

double data_norm(const DomainSpec& spec) {
  MacroDomain dom = spec.domain();
  double s = spec.f.sample(dom).l2_norm() + spec.h.sample(dom).l2_norm();
  if (!spec.g.empty()) {
    // H^{1/2} proxy for the analytic boundary field: H^1 norm of the field
    Field g = spec.g.sample(dom);
    FieldNorms gn = norms(dom, g);
    s += gn.h1;
  }
  return s;
}

}  // namespace

StokesSolution solve_fine(
    const std::function<void(const double*, double*)>& coeff,
    const DomainSpec& spec, const StokesOptions& opts) {
  spec.validate();
  StokesSolution out = spec.kind == MacroDomain::Kind::torus
                           ? solve_fine_torus(coeff, spec, opts)
                           : solve_fine_square(coeff, spec, opts);
  FieldNorms un = norms(out.dom, out.u);
  double dn = data_norm(spec);
  out.report.energy_quotient =
      dn > 0.0 ? (un.h1 + out.p.l2_norm()) / dn : 0.0;
  return out;
}

StokesSolution solve_reiterated(const CoefficientSpec& A, double eps,
                                const DomainSpec& spec,
                                const StokesOptions& opts) {
  if (1.0 / spec.macro_n > eps * eps / 8.0 + 1e-15)
    throw ResolutionInsufficient(
        "macro spacing 1/" + std::to_string(spec.macro_n) +
        " exceeds eps^2/8 for eps = " + std::to_string(eps));
  auto coeff = [&A, eps](const double* x, double* out) {
    double y[3] = {0, 0, 0}, z[3] = {0, 0, 0};
    for (int d = 0; d < A.dim; ++d) {
      y[d] = x[d] / eps;
      z[d] = x[d] / (eps * eps);
    }
    A.evaluate(y, z, out);
  };
  return solve_fine(coeff, spec, opts);
}

StokesSolution solve_homogenized(const EffectiveTensor& ahat,
                                 const DomainSpec& spec,
                                 const StokesOptions& opts) {
  auto coeff = [&ahat](const double*, double* out) {
    for (std::size_t c = 0; c < ahat.a.size(); ++c) out[c] = ahat.a[c];
  };
  return solve_fine(coeff, spec, opts);
}

FieldNorms norms(const MacroDomain& dom, const Field& f) {
  FieldNorms out;
  out.l2 = f.l2_norm();
  double s = 0.0;
  for (int d = 0; d < dom.grid.dim; ++d) {
    Field df = dom.derivative(f, d);
    double v = df.l2_norm();
    s += v * v;
  }
  out.h1_semi = std::sqrt(s);
  out.h1 = std::sqrt(out.l2 * out.l2 + s);
  return out;
}

double boundary_layer_l2(const MacroDomain& dom, const Field& f, double r) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < dom.nodes(); ++m) {
    if (dom.dist_to_boundary(m) > r) continue;
    ++count;
    for (int c = 0; c < f.ncomp(); ++c) s += f.at(c, m) * f.at(c, m);
  }
  (void)count;
  return std::sqrt(s / double(dom.nodes()));
}

}  // namespace rshom
