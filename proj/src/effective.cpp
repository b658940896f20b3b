#include "rshom/effective.hpp"

#include <cmath>

#include "rshom/errors.hpp"
#include "rshom/parallel.hpp"
#include "rshom/rng.hpp"
#include "rshom/spectral.hpp"

namespace rshom {

namespace {

// Per-y helper: d_{z_m} chi slice as a Field with components cdchi.
Field dz_chi_slice(const FastCorrectorFamily& fast, std::size_t yn) {
  const int n = fast.gridZ.dim;
  const int nc = fast.chi.ncomp();
  Field chi(fast.gridZ, nc);
  for (int c = 0; c < nc; ++c) {
    const double* src = fast.chi.slice(c, yn);
    double* dst = chi.comp(c);
    for (std::size_t m = 0; m < chi.nodes(); ++m) dst[m] = src[m];
  }
  Field out(fast.gridZ, n * nc);
  std::vector<cplx> spec(chi.nodes()), dspec(chi.nodes());
  for (int c = 0; c < nc; ++c) {
    fft::forward(fast.gridZ, chi.comp(c), spec.data());
    for (int m = 0; m < n; ++m) {
      spectral_derivative(fast.gridZ, spec.data(), dspec.data(), m);
      fft::inverse(fast.gridZ, dspec.data(), out.comp(m * nc + c));
    }
  }
  return out;
}

}  // namespace

EffectiveTensor assemble_effective(const TwoScaleCoefficient& A,
                                   const FastCorrectorFamily& fast,
                                   const SlowCorrectorFamily& slow,
                                   std::uint64_t seed, int n_xi) {
  require_same(A.gridY, fast.gridY, "assemble_effective (Y)");
  require_same(A.gridZ, fast.gridZ, "assemble_effective (Z)");
  require_same(A.gridY, slow.gridY, "assemble_effective (slow)");
  const int n = A.spec.dim;
  const int n4 = n * n * n * n;
  const std::size_t ny = A.gridY.node_count();
  const std::size_t nz = A.gridZ.node_count();

  Field dyslow = spectral_gradient(slow.chi);  // components cdchi(m,g,k,b)

  std::vector<std::vector<double>> acc_y(ny, std::vector<double>(n4, 0.0));
  parallel_for(ny, [&](std::size_t yn) {
    Field ay = A.slice_y(yn);
    Field dz = dz_chi_slice(fast, yn);
    // zavg[c4] and P_il^{as} = avg_z sum_{k,g} a_ik^{ag} dz_k chi_l^{gs}
    std::vector<double> zavg(n4, 0.0), P(n4, 0.0);
    for (int c = 0; c < n4; ++c) zavg[c] = ay.mean(c);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l)
        for (int a = 0; a < n; ++a)
          for (int s = 0; s < n; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
              for (int g = 0; g < n; ++g) {
                const double* av = ay.comp(c4(i, k, a, g, n));
                const double* d = dz.comp(cdchi(k, g, l, s, n));
                for (std::size_t m = 0; m < nz; ++m) acc += av[m] * d[m];
              }
            P[c4(i, l, a, s, n)] = acc / double(nz);
          }
    // Four terms of the effective-tensor integrand, z-averaged at this y:
    //   zavg - P - zavg . dy_chi + P . dy_chi
    std::vector<double>& out = acc_y[yn];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            double v = zavg[c4(i, j, a, b, n)] - P[c4(i, j, a, b, n)];
            for (int l = 0; l < n; ++l)
              for (int s = 0; s < n; ++s)
                v -= (zavg[c4(i, l, a, s, n)] - P[c4(i, l, a, s, n)]) *
                     dyslow.at(cdchi(l, s, j, b, n), yn);
            out[c4(i, j, a, b, n)] = v;
          }
  });

  EffectiveTensor t;
  t.dim = n;
  t.mu = A.spec.mu;
  t.a.assign(n4, 0.0);
  for (std::size_t yn = 0; yn < ny; ++yn)
    for (int c = 0; c < n4; ++c) t.a[c] += acc_y[yn][c];
  for (int c = 0; c < n4; ++c) t.a[c] /= double(ny);

  t.a_sym.assign(n4, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          t.a_sym[c4(i, j, a, b, n)] =
              0.5 * (t.a[c4(i, j, a, b, n)] + t.a[c4(j, i, b, a, n)]);

  tensor_eig_range(t.a.data(), n, t.ell.min_eig, t.ell.max_eig);
  Rng rng(seed);
  t.ell.min_rayleigh = 1e300;
  t.ell.max_rayleigh = -1e300;
  std::vector<double> xi(n * n);
  for (int q = 0; q < n_xi; ++q) {
    for (double& v : xi) v = rng.normal();
    double r = rayleigh_quotient(t.a.data(), xi.data(), n);
    t.ell.min_rayleigh = std::min(t.ell.min_rayleigh, r);
    t.ell.max_rayleigh = std::max(t.ell.max_rayleigh, r);
  }
  double slack = 1e-8 * std::max(1.0, A.spec.max_abs_bound());
  if (t.ell.min_eig < t.mu - slack)
    throw EllipticityViolation(t.ell.min_eig, t.mu, "assemble_effective");
  if (t.ell.max_eig > 1.0 / t.mu + slack)
    throw EllipticityViolation(t.ell.max_eig, t.mu,
                               "assemble_effective (upper bound)");
  return t;
}

TwoScaleField compute_I1(const TwoScaleCoefficient& A,
                         const FastCorrectorFamily& fast) {
  require_same(A.gridY, fast.gridY, "compute_I1 (Y)");
  require_same(A.gridZ, fast.gridZ, "compute_I1 (Z)");
  const int n = A.spec.dim;
  const int n4 = n * n * n * n;
  const std::size_t nz = A.gridZ.node_count();
  TwoScaleField I(A.gridY, A.gridZ, n4);
  parallel_for(A.gridY.node_count(), [&](std::size_t yn) {
    Field ay = A.slice_y(yn);
    Field dz = dz_chi_slice(fast, yn);
    std::vector<double> flux(nz);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            const double* aij = ay.comp(c4(i, j, a, b, n));
            for (std::size_t m = 0; m < nz; ++m) flux[m] = aij[m];
            for (int k = 0; k < n; ++k)
              for (int g = 0; g < n; ++g) {
                const double* av = ay.comp(c4(i, k, a, g, n));
                const double* d = dz.comp(cdchi(k, g, j, b, n));
                for (std::size_t m = 0; m < nz; ++m) flux[m] -= av[m] * d[m];
              }
            double avg = 0.0;
            for (std::size_t m = 0; m < nz; ++m) avg += flux[m];
            avg /= double(nz);
            double* dst = I.slice(c4(i, j, a, b, n), yn);
            for (std::size_t m = 0; m < nz; ++m) dst[m] = avg - flux[m];
          }
  });
  filter_nyquist_z(I);
  return I;
}

Field compute_I2(const EffectiveTensor& ahat, const TwoScaleCoefficient& A,
                 const FastCorrectorFamily& fast,
                 const SlowCorrectorFamily& slow, double* measured_mean) {
  const int n = A.spec.dim;
  const int n4 = n * n * n * n;
  const std::size_t ny = A.gridY.node_count();
  const std::size_t nz = A.gridZ.node_count();
  Field dyslow = spectral_gradient(slow.chi);
  Field I(A.gridY, n4);

  parallel_for(ny, [&](std::size_t yn) {
    Field ay = A.slice_y(yn);
    Field dz = dz_chi_slice(fast, yn);
    std::vector<double> zavg(n4, 0.0), P(n4, 0.0);
    for (int c = 0; c < n4; ++c) zavg[c] = ay.mean(c);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l)
        for (int a = 0; a < n; ++a)
          for (int s = 0; s < n; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
              for (int g = 0; g < n; ++g) {
                const double* av = ay.comp(c4(i, k, a, g, n));
                const double* d = dz.comp(cdchi(k, g, l, s, n));
                for (std::size_t m = 0; m < nz; ++m) acc += av[m] * d[m];
              }
            P[c4(i, l, a, s, n)] = acc / double(nz);
          }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            // ahat + zavg(a).dy_chi - (a dz_chi avg).dy_chi - a2, a2 = zavg - P
            double v = ahat.a[c4(i, j, a, b, n)];
            for (int k = 0; k < n; ++k)
              for (int g = 0; g < n; ++g)
                v += (zavg[c4(i, k, a, g, n)] - P[c4(i, k, a, g, n)]) *
                     dyslow.at(cdchi(k, g, j, b, n), yn);
            v -= zavg[c4(i, j, a, b, n)] - P[c4(i, j, a, b, n)];
            I.at(c4(i, j, a, b, n), yn) = v;
          }
  });

  filter_nyquist(I);

  // The Y-average vanishes analytically; measure it, report, subtract.
  double worst = 0.0;
  for (int c = 0; c < n4; ++c) {
    double m = I.mean(c);
    worst = std::max(worst, std::fabs(m));
    double* p = I.comp(c);
    for (std::size_t yn = 0; yn < ny; ++yn) p[yn] -= m;
  }
  if (measured_mean) *measured_mean = worst;
  double scale = std::max(A.spec.max_abs_bound(), 1e-300);
  if (worst > 1e-9 * scale)
    throw MeanNotZero("I2 average " + std::to_string(worst) +
                      " exceeds 1e-9 of the coefficient scale");
  return I;
}

TwoScaleField compute_I3(const TwoScaleCoefficient& A,
                         const FastCorrectorFamily& fast,
                         const SlowCorrectorFamily& slow) {
  const int n = A.spec.dim;
  const int n4 = n * n * n * n;
  const std::size_t nz = A.gridZ.node_count();
  Field dyslow = spectral_gradient(slow.chi);
  TwoScaleField I(A.gridY, A.gridZ, n4);
  parallel_for(A.gridY.node_count(), [&](std::size_t yn) {
    Field ay = A.slice_y(yn);
    Field dz = dz_chi_slice(fast, yn);
    std::vector<double> G(nz);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            std::fill(G.begin(), G.end(), 0.0);
            for (int k = 0; k < n; ++k)
              for (int g = 0; g < n; ++g) {
                const double* av = ay.comp(c4(i, k, a, g, n));
                double w = dyslow.at(cdchi(k, g, j, b, n), yn);
                for (std::size_t m = 0; m < nz; ++m) G[m] += av[m] * w;
              }
            for (int k = 0; k < n; ++k)
              for (int eta = 0; eta < n; ++eta) {
                const double* av = ay.comp(c4(i, k, a, eta, n));
                for (int l = 0; l < n; ++l)
                  for (int g = 0; g < n; ++g) {
                    const double* d = dz.comp(cdchi(k, eta, l, g, n));
                    double w = dyslow.at(cdchi(l, g, j, b, n), yn);
                    for (std::size_t m = 0; m < nz; ++m)
                      G[m] -= av[m] * d[m] * w;
                  }
              }
            double avg = 0.0;
            for (std::size_t m = 0; m < nz; ++m) avg += G[m];
            avg /= double(nz);
            double* dst = I.slice(c4(i, j, a, b, n), yn);
            for (std::size_t m = 0; m < nz; ++m) dst[m] = G[m] - avg;
          }
  });
  filter_nyquist_z(I);
  return I;
}

FluxCorrectorSetY build_flux_correctors_cell(const Field& I,
                                             double scale_hint) {
  const PeriodicGrid& g = I.grid();
  const int n = g.dim;
  const int n4 = n * n * n * n;
  if (I.ncomp() != n4)
    throw GridMismatch("flux corrector input must have n^4 components");
  const std::size_t nodes = g.node_count();

  double scale = std::max(I.l2_norm(), scale_hint);
  for (int c = 0; c < n4; ++c)
    if (std::fabs(I.mean(c)) > 1e-10 * std::max(scale, 1e-300))
      throw NonZeroMean("discrepancy tensor must have zero cell average");

  std::vector<std::vector<cplx>> ihat(n4, std::vector<cplx>(nodes));
  for (int c = 0; c < n4; ++c) fft::forward(g, I.comp(c), ihat[c].data());

  const int np = n_pairs(n);
  FluxCorrectorSetY out;
  out.E = Field(g, np * n * n * n);
  out.q = Field(g, n * n * n);
  std::vector<std::vector<cplx>> ehat(out.E.ncomp(),
                                      std::vector<cplx>(nodes, cplx(0.0)));
  std::vector<std::vector<cplx>> qhat(out.q.ncomp(),
                                      std::vector<cplx>(nodes, cplx(0.0)));

  auto visit = [&](std::size_t m, const int* k, bool nyq) {
    double k2 = 0.0;
    for (int d = 0; d < n; ++d) k2 += double(k[d]) * k[d];
    if (k2 == 0.0 || nyq) return;
    const cplx i2pi(0.0, 1.0 / (2.0 * M_PI));
    // qhat_{ij}^b = sum_a k_a Ihat_{ij}^{ab} / (2 pi i |k|^2)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < n; ++b) {
          cplx s = 0.0;
          for (int a = 0; a < n; ++a)
            s += double(k[a]) * ihat[c4(i, j, a, b, n)][m];
          qhat[cq(i, j, b, n)][m] = -i2pi * s / k2;
        }
    // Ehat_{hij}^{ab} = (i/2pi) [ k_i |k|^-2 Ihat_{hj}^{ab}
    //                           - k_h |k|^-2 Ihat_{ij}^{ab}
    //                           - k_i k_a |k|^-4 k_eta Ihat_{hj}^{eta b}
    //                           + k_h k_a |k|^-4 k_eta Ihat_{ij}^{eta b} ]
    for (int h = 0; h < n; ++h)
      for (int i = h + 1; i < n; ++i) {
        int p = pair_index(h, i, n);
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
              cplx shj = 0.0, sij = 0.0;
              for (int eta = 0; eta < n; ++eta) {
                shj += double(k[eta]) * ihat[c4(h, j, eta, b, n)][m];
                sij += double(k[eta]) * ihat[c4(i, j, eta, b, n)][m];
              }
              cplx v = double(k[i]) / k2 * ihat[c4(h, j, a, b, n)][m] -
                       double(k[h]) / k2 * ihat[c4(i, j, a, b, n)][m] -
                       double(k[i]) * double(k[a]) / (k2 * k2) * shj +
                       double(k[h]) * double(k[a]) / (k2 * k2) * sij;
              ehat[cE(p, j, a, b, n)][m] = i2pi * v;
            }
      }
  };

  const int N = g.n;
  if (g.dim == 2) {
    std::size_t m = 0;
    for (int t0 = 0; t0 < N; ++t0)
      for (int t1 = 0; t1 < N; ++t1, ++m) {
        int k[3] = {wavenumber(t0, N), wavenumber(t1, N), 0};
        bool nyq = (t0 == N / 2) || (t1 == N / 2);
        visit(m, k, nyq);
      }
  } else {
    std::size_t m = 0;
    for (int t0 = 0; t0 < N; ++t0)
      for (int t1 = 0; t1 < N; ++t1)
        for (int t2 = 0; t2 < N; ++t2, ++m) {
          int k[3] = {wavenumber(t0, N), wavenumber(t1, N), wavenumber(t2, N)};
          bool nyq = (t0 == N / 2) || (t1 == N / 2) || (t2 == N / 2);
          visit(m, k, nyq);
        }
  }

  for (int c = 0; c < out.E.ncomp(); ++c)
    fft::inverse(g, ehat[c].data(), out.E.comp(c));
  for (int c = 0; c < out.q.ncomp(); ++c)
    fft::inverse(g, qhat[c].data(), out.q.comp(c));
  return out;
}

FluxCorrectorSet build_flux_correctors(const TwoScaleField& I, int family) {
  const PeriodicGrid gz = I.gridZ();
  const int n = gz.dim;
  const double family_scale = I.l2_norm();
  FluxCorrectorSet set;
  set.family = family;
  set.E = TwoScaleField(I.gridY(), gz, n_pairs(n) * n * n * n);
  set.q = TwoScaleField(I.gridY(), gz, n * n * n);
  parallel_for(I.ny(), [&](std::size_t yn) {
    Field slice(gz, I.ncomp());
    for (int c = 0; c < I.ncomp(); ++c) {
      const double* src = I.slice(c, yn);
      double* dst = slice.comp(c);
      for (std::size_t m = 0; m < slice.nodes(); ++m) dst[m] = src[m];
    }
    FluxCorrectorSetY one = build_flux_correctors_cell(slice, family_scale);
    for (int c = 0; c < set.E.ncomp(); ++c) {
      const double* src = one.E.comp(c);
      double* dst = set.E.slice(c, yn);
      for (std::size_t m = 0; m < set.E.nz(); ++m) dst[m] = src[m];
    }
    for (int c = 0; c < set.q.ncomp(); ++c) {
      const double* src = one.q.comp(c);
      double* dst = set.q.slice(c, yn);
      for (std::size_t m = 0; m < set.q.nz(); ++m) dst[m] = src[m];
    }
  });
  return set;
}

namespace {

// Residual of d_k E_{kij}^{ab} + d_a q_{ij}^b - I_{ij}^{ab} on one cell.
double identity_residual_cell(const Field& E, const Field& q, const Field& I) {
  const PeriodicGrid& g = I.grid();
  const int n = g.dim;
  std::vector<Field> dE(n), dq(n);
  for (int d = 0; d < n; ++d) {
    dE[d] = spectral_derivative_field(E, d);
    dq[d] = spectral_derivative_field(q, d);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (std::size_t m = 0; m < g.node_count(); ++m) {
            double v = -I.at(c4(i, j, a, b, n), m);
            for (int k = 0; k < n; ++k) {
              if (k == i) continue;
              int p = k < i ? pair_index(k, i, n) : pair_index(i, k, n);
              double sign = k < i ? 1.0 : -1.0;
              v += sign * dE[k].at(cE(p, j, a, b, n), m);
            }
            v += dq[a].at(cq(i, j, b, n), m);
            s += v * v;
          }
  return std::sqrt(s / double(g.node_count()));
}

double link_residual_cell(const Field& q, const Field& target) {
  const PeriodicGrid& g = q.grid();
  const int n = g.dim;
  std::vector<Field> dq(n);
  for (int d = 0; d < n; ++d) dq[d] = spectral_derivative_field(q, d);
  double s = 0.0;
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b)
      for (std::size_t m = 0; m < g.node_count(); ++m) {
        double v = -target.at(cpi(k, b, n), m);
        for (int i = 0; i < n; ++i) v += dq[i].at(cq(i, k, b, n), m);
        s += v * v;
      }
  return std::sqrt(s / double(g.node_count()));
}

Field slice_of(const TwoScaleField& f, std::size_t yn) {
  Field out(f.gridZ(), f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c) {
    const double* src = f.slice(c, yn);
    double* dst = out.comp(c);
    for (std::size_t m = 0; m < out.nodes(); ++m) dst[m] = src[m];
  }
  return out;
}

}  // namespace

double flux_divergence_residual(const FluxCorrectorSet& set,
                                const TwoScaleField& I) {
  double worst = 0.0;
  double scale = std::max(I.l2_norm(), 1e-300);
  for (std::size_t yn = 0; yn < I.ny(); ++yn) {
    Field Ey = slice_of(set.E, yn);
    Field qy = slice_of(set.q, yn);
    Field Iy = slice_of(I, yn);
    worst = std::max(worst, identity_residual_cell(Ey, qy, Iy));
  }
  return worst / scale;
}

double flux_divergence_residual_cell(const FluxCorrectorSetY& set,
                                     const Field& I) {
  return identity_residual_cell(set.E, set.q, I) /
         std::max(I.l2_norm(), 1e-300);
}

double pressure_link_residual(const FluxCorrectorSet& set,
                              const TwoScaleField& target) {
  double worst = 0.0;
  double scale = std::max(target.l2_norm(), 1e-300);
  for (std::size_t yn = 0; yn < target.ny(); ++yn) {
    Field qy = slice_of(set.q, yn);
    Field ty = slice_of(target, yn);
    worst = std::max(worst, link_residual_cell(qy, ty));
  }
  return worst / scale;
}

double pressure_link_residual_cell(const FluxCorrectorSetY& set,
                                   const Field& target) {
  return link_residual_cell(set.q, target) /
         std::max(target.l2_norm(), 1e-300);
}

TwoScaleField family3_link_target(const FastCorrectorFamily& fast,
                                  const SlowCorrectorFamily& slow) {
  const int n = fast.gridZ.dim;
  Field dyslow = spectral_gradient(slow.chi);
  TwoScaleField out(fast.gridY, fast.gridZ, n * n);
  for (std::size_t yn = 0; yn < out.ny(); ++yn)
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < n; ++a) {
        double* dst = out.slice(cpi(k, a, n), yn);
        std::fill(dst, dst + out.nz(), 0.0);
        for (int j = 0; j < n; ++j)
          for (int g = 0; g < n; ++g) {
            const double* pi = fast.pi.slice(cpi(j, g, n), yn);
            double w = dyslow.at(cdchi(j, g, k, a, n), yn);
            for (std::size_t m = 0; m < out.nz(); ++m) dst[m] -= pi[m] * w;
          }
      }
  return out;
}

}  // namespace rshom
