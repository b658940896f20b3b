#include "rshom/cell_stokes.hpp"

#include <cmath>
#include <vector>

#include "rshom/coefficient.hpp"
#include "rshom/errors.hpp"

namespace rshom {

namespace {

// Velocity spectra stacked component-major into one work vector.
using SpecVec = std::vector<cplx>;

struct OpContext {
  const Field* coeff = nullptr;
  PeriodicGrid grid;
  int n = 0;
  std::size_t nodes = 0;
  double ref = 1.0;  // reference constant for the spectral preconditioner
  bool symmetric = true;

  // scratch
  mutable std::vector<cplx> dspec;
  mutable Field grad, flux;

  void init(const Field& a) {
    coeff = &a;
    grid = a.grid();
    n = grid.dim;
    nodes = grid.node_count();
    dspec.resize(nodes);
    grad = Field(grid, n * n);
    flux = Field(grid, n * n);

    double lo = 1e300, hi = -1e300;
    std::vector<double> t(n * n * n * n);
    for (std::size_t m = 0; m < nodes; ++m) {
      for (int c = 0; c < a.ncomp(); ++c) t[c] = a.at(c, m);
      double l, h;
      tensor_eig_range(t.data(), n, l, h);
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
    if (lo <= 0.0)
      throw SingularSystem("coefficient is not positive definite: min eig " +
                           std::to_string(lo));
    ref = 0.5 * (lo + hi);

    symmetric = true;
    double scale = a.max_abs();
    for (std::size_t m = 0; m < nodes && symmetric; ++m)
      for (int i = 0; i < n && symmetric; ++i)
        for (int j = 0; j < n && symmetric; ++j)
          for (int aa = 0; aa < n && symmetric; ++aa)
            for (int b = 0; b < n; ++b)
              if (std::fabs(a.at(c4(i, j, aa, b, n), m) -
                            a.at(c4(j, i, b, aa, n), m)) > 1e-12 * scale) {
                symmetric = false;
                break;
              }
  }

  // out = P[-div(A grad u)] on spectra (n components stacked).
  void apply(const SpecVec& in, SpecVec& out) const {
    for (int b = 0; b < n; ++b)
      for (int j = 0; j < n; ++j) {
        spectral_derivative(grid, in.data() + b * nodes, dspec.data(), j);
        fft::inverse(grid, dspec.data(), grad.comp(c2(j, b, n)));
      }
    for (std::size_t m = 0; m < nodes; ++m)
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int j = 0; j < n; ++j)
            for (int b = 0; b < n; ++b)
              s += coeff->at(c4(i, j, a, b, n), m) * grad.at(c2(j, b, n), m);
          flux.at(c2(i, a, n), m) = s;
        }
    std::vector<cplx> acc(nodes);
    for (int a = 0; a < n; ++a) {
      std::fill(acc.begin(), acc.end(), cplx(0.0));
      for (int i = 0; i < n; ++i) {
        fft::forward(grid, flux.comp(c2(i, a, n)), dspec.data());
        spectral_derivative(grid, dspec.data(), dspec.data(), i);
        for (std::size_t m = 0; m < nodes; ++m) acc[m] += dspec[m];
      }
      for (std::size_t m = 0; m < nodes; ++m) out[a * nodes + m] = -acc[m];
    }
    project(out);
  }

  void project(SpecVec& v) const {
    std::vector<cplx*> comps(n);
    for (int a = 0; a < n; ++a) comps[a] = v.data() + a * nodes;
    leray_project(grid, comps);
  }

  // Spectral preconditioner: (-ref * Laplace)^{-1} per component, restricted
  // to the Nyquist-free subspace the operator acts on.
  void precondition(const SpecVec& in, SpecVec& out) const {
    for (int a = 0; a < n; ++a) {
      spectral_inv_neg_laplacian(grid, in.data() + a * nodes,
                                 out.data() + a * nodes);
      zero_nyquist(grid, out.data() + a * nodes);
      for (std::size_t m = 0; m < nodes; ++m) out[a * nodes + m] /= ref;
    }
  }
};

double dot_re(const SpecVec& a, const SpecVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

cplx dot_c(const SpecVec& a, const SpecVec& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(const SpecVec& a) { return std::sqrt(dot_re(a, a)); }

int pcg(const OpContext& op, const SpecVec& b, SpecVec& x, double rtol,
        int max_iter, double& final_rel) {
  double bnorm = norm2(b);
  SpecVec r = b, z(b.size()), p(b.size()), q(b.size());
  op.precondition(r, z);
  p = z;
  double rz = dot_re(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, q);
    double pq = dot_re(p, q);
    if (pq <= 0.0) {
      // Round-off floor: accept if the residual is already negligible.
      final_rel = norm2(r) / bnorm;
      if (final_rel <= std::max(rtol, 1e-11)) return it;
      throw SingularSystem("indefinite operator in cg");
    }
    double alpha = rz / pq;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    final_rel = norm2(r) / bnorm;
    if (final_rel <= rtol) return it;
    op.precondition(r, z);
    double rz_new = dot_re(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return -1;
}

int bicgstab(const OpContext& op, const SpecVec& b, SpecVec& x, double rtol,
             int max_iter, double& final_rel) {
  double bnorm = norm2(b);
  SpecVec r = b;  // x = 0 initially
  SpecVec rhat = r, p(b.size(), cplx(0.0)), v(b.size(), cplx(0.0));
  SpecVec phat(b.size()), shat(b.size()), s(b.size()), t(b.size());
  cplx rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    cplx rho_new = dot_c(rhat, r);
    if (std::abs(rho_new) < 1e-300) break;
    cplx beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = r[i] + beta * (p[i] - omega * v[i]);
    op.precondition(p, phat);
    op.apply(phat, v);
    alpha = rho_new / dot_c(rhat, v);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) / bnorm <= rtol) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * phat[i];
      final_rel = norm2(s) / bnorm;
      return it;
    }
    op.precondition(s, shat);
    op.apply(shat, t);
    omega = dot_c(t, s) / dot_c(t, t);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += alpha * phat[i] + omega * shat[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] - omega * t[i];
    final_rel = norm2(r) / bnorm;
    if (final_rel <= rtol) return it;
    rho = rho_new;
  }
  return -1;
}

template <typename Fn>
void modes_with_nyquist(const PeriodicGrid& g, Fn&& fn) {
  const int N = g.n;
  if (g.dim == 2) {
    std::size_t m = 0;
    for (int t0 = 0; t0 < N; ++t0)
      for (int t1 = 0; t1 < N; ++t1, ++m) {
        int k[3] = {wavenumber(t0, N), wavenumber(t1, N), 0};
        bool nyq = (t0 == N / 2) || (t1 == N / 2);
        fn(m, k, nyq);
      }
  } else {
    std::size_t m = 0;
    for (int t0 = 0; t0 < N; ++t0)
      for (int t1 = 0; t1 < N; ++t1)
        for (int t2 = 0; t2 < N; ++t2, ++m) {
          int k[3] = {wavenumber(t0, N), wavenumber(t1, N), wavenumber(t2, N)};
          bool nyq = (t0 == N / 2) || (t1 == N / 2) || (t2 == N / 2);
          fn(m, k, nyq);
        }
  }
}

}  // namespace

void apply_momentum_operator(const Field& coeff, const Field& u, Field& out) {
  const PeriodicGrid& g = u.grid();
  const int n = g.dim;
  Field grad = spectral_gradient(u);
  Field flux(g, n * n);
  for (std::size_t m = 0; m < g.node_count(); ++m)
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
          for (int b = 0; b < n; ++b)
            s += coeff.at(c4(i, j, a, b, n), m) * grad.at(c2(j, b, n), m);
        flux.at(c2(i, a, n), m) = s;
      }
  Field divf = spectral_divergence_flux(flux);
  out = Field(g, n);
  for (std::size_t m = 0; m < g.node_count(); ++m)
    for (int a = 0; a < n; ++a) out.at(a, m) = -divf.at(a, m);
}

StokesResult stokes_cell_solve(const Field& coeff, const Field* f,
                               const Field* F, const Field* h,
                               const StokesOptions& opts) {
  const PeriodicGrid& g = coeff.grid();
  const int n = g.dim;
  const std::size_t nodes = g.node_count();
  if (coeff.ncomp() != n * n * n * n)
    throw GridMismatch("coefficient must have n^4 components");
  if (f && (f->grid() != g || f->ncomp() != n))
    throw GridMismatch("forcing must have n components on the same grid");
  if (F && (F->grid() != g || F->ncomp() != n * n))
    throw GridMismatch("divergence-form forcing must have n^2 components");
  if (h && (h->grid() != g || h->ncomp() != 1))
    throw GridMismatch("divergence data must be scalar");

  OpContext op;
  op.init(coeff);

  // Momentum right-hand side r = f - div(F), assembled spectrally.
  SpecVec rhs(static_cast<std::size_t>(n) * nodes, cplx(0.0));
  std::vector<cplx> tmp(nodes);
  if (f) {
    for (int a = 0; a < n; ++a) {
      fft::forward(g, f->comp(a), tmp.data());
      for (std::size_t m = 0; m < nodes; ++m) rhs[a * nodes + m] += tmp[m];
    }
  }
  if (F) {
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i) {
        fft::forward(g, F->comp(c2(i, a, n)), tmp.data());
        spectral_derivative(g, tmp.data(), tmp.data(), i);
        for (std::size_t m = 0; m < nodes; ++m) rhs[a * nodes + m] -= tmp[m];
      }
  }
  for (int a = 0; a < n; ++a) zero_nyquist(g, rhs.data() + a * nodes);

  // Divergence constraint: curl-free lift u_h with div u_h = h.
  SpecVec uh;
  bool have_h = false;
  if (h) {
    fft::forward(g, h->comp(0), tmp.data());
    if (std::abs(tmp[0]) > 1e-10 * std::max(h->l2_norm(), 1e-300))
      throw MeanNotZero("divergence data must have zero mean on the torus");
    tmp[0] = 0.0;
    zero_nyquist(g, tmp.data());
    std::vector<cplx> phi(nodes);
    spectral_inv_neg_laplacian(g, tmp.data(), phi.data());
    // div u_h = h with u_h = -grad((-Laplace)^{-1} h)
    uh.assign(static_cast<std::size_t>(n) * nodes, cplx(0.0));
    for (int d = 0; d < n; ++d) {
      spectral_derivative(g, phi.data(), uh.data() + d * nodes, d);
      for (std::size_t m = 0; m < nodes; ++m)
        uh[d * nodes + m] = -uh[d * nodes + m];
    }
    have_h = true;
  }

  // b = P[rhs] + P[div(A grad u_h)], so that L v = b with u = u_h + v.
  SpecVec b = rhs;
  op.project(b);
  if (have_h) {
    SpecVec lu(uh.size());
    op.apply(uh, lu);  // P[-div(A grad u_h)]
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lu[i];
  }

  StokesResult res;
  res.velocity = Field(g, n);
  res.pressure = Field(g, 1);
  res.report.used_cg = op.symmetric;

  SpecVec x(static_cast<std::size_t>(n) * nodes, cplx(0.0));
  double bnorm = norm2(b);
  double data_scale = std::max(norm2(rhs), have_h ? norm2(uh) : 0.0);
  int iters = 0;
  double final_rel = 0.0;
  if (bnorm > 1e-14 * std::max(data_scale, 1e-300)) {
    int budget = opts.iter_budget_factor * g.n;
    iters = op.symmetric ? pcg(op, b, x, opts.rtol, budget, final_rel)
                         : bicgstab(op, b, x, opts.rtol, budget, final_rel);
    if (iters < 0) {
      if (opts.throw_on_stall) throw NoConvergence(final_rel, budget);
      iters = budget;
    }
  }
  res.report.iterations = std::max(iters, 0);
  res.report.rel_residual = final_rel;

  // u = u_h + v, mean zero.
  SpecVec uhat = x;
  if (have_h)
    for (std::size_t i = 0; i < uhat.size(); ++i) uhat[i] += uh[i];
  for (int a = 0; a < n; ++a) {
    uhat[a * nodes] = 0.0;
    fft::inverse(g, uhat.data() + a * nodes, res.velocity.comp(a));
  }

  // Pressure from the momentum residual: grad p = rhs + div(A grad u).
  {
    Field lu;
    apply_momentum_operator(coeff, res.velocity, lu);
    std::vector<cplx> rfull(static_cast<std::size_t>(n) * nodes);
    for (int a = 0; a < n; ++a) {
      fft::forward(g, lu.comp(a), tmp.data());
      for (std::size_t m = 0; m < nodes; ++m)
        rfull[a * nodes + m] = rhs[a * nodes + m] - tmp[m];
    }
    std::vector<cplx> phat(nodes, cplx(0.0));
    modes_with_nyquist(g, [&](std::size_t m, const int* k, bool nyq) {
      double k2 = 0.0;
      for (int d = 0; d < n; ++d) k2 += double(k[d]) * k[d];
      if (k2 == 0.0 || nyq) return;
      cplx num = 0.0;
      for (int a = 0; a < n; ++a) num += double(k[a]) * rfull[a * nodes + m];
      phat[m] = num / cplx(0.0, 2.0 * M_PI * k2);
    });
    fft::inverse(g, phat.data(), res.pressure.comp(0));

    SpecVec proj = rfull;
    op.project(proj);
    res.report.momentum_residual = norm2(proj);
  }

  // Divergence check.
  {
    Field grad = spectral_gradient(res.velocity);
    double s = 0.0;
    for (std::size_t m = 0; m < nodes; ++m) {
      double div = 0.0;
      for (int d = 0; d < n; ++d) div += grad.at(c2(d, d, n), m);
      double target = h ? h->at(0, m) : 0.0;
      s += (div - target) * (div - target);
    }
    res.report.divergence_residual = std::sqrt(s / double(nodes));
  }
  return res;
}

AuxStokesResult solve_stokes_auxiliary(const Field& rhs) {
  const PeriodicGrid& g = rhs.grid();
  const int n = g.dim;
  const std::size_t nodes = g.node_count();
  if (rhs.ncomp() != n)
    throw GridMismatch("auxiliary rhs must have n components");
  double scale = rhs.l2_norm();
  for (int a = 0; a < n; ++a)
    if (std::fabs(rhs.mean(a)) > 1e-10 * std::max(scale, 1e-300))
      throw NonZeroMean("auxiliary rhs must have zero cell average");

  std::vector<std::vector<cplx>> ihat(n, std::vector<cplx>(nodes));
  for (int a = 0; a < n; ++a) fft::forward(g, rhs.comp(a), ihat[a].data());

  AuxStokesResult out;
  out.f = Field(g, n);
  out.q = Field(g, 1);
  std::vector<std::vector<cplx>> fhat(n, std::vector<cplx>(nodes, cplx(0.0)));
  std::vector<cplx> qhat(nodes, cplx(0.0));

  modes_with_nyquist(g, [&](std::size_t m, const int* k, bool nyq) {
    double k2 = 0.0;
    for (int d = 0; d < n; ++d) k2 += double(k[d]) * k[d];
    if (k2 == 0.0 || nyq) return;
    cplx kdot = 0.0;
    for (int a = 0; a < n; ++a) kdot += double(k[a]) * ihat[a][m];
    qhat[m] = kdot / cplx(0.0, 2.0 * M_PI * k2);
    for (int a = 0; a < n; ++a)
      fhat[a][m] =
          (double(k[a]) * kdot / k2 - ihat[a][m]) / (4.0 * M_PI * M_PI * k2);
  });
  for (int a = 0; a < n; ++a) fft::inverse(g, fhat[a].data(), out.f.comp(a));
  fft::inverse(g, qhat.data(), out.q.comp(0));
  return out;
}

}  // namespace rshom
