#include "rshom/correctors.hpp"

#include <cmath>

#include "rshom/errors.hpp"
#include "rshom/parallel.hpp"
#include "rshom/spectral.hpp"

namespace rshom {

FastCellSlice solve_fast_cell(const TwoScaleCoefficient& A,
                              std::size_t y_index, const StokesOptions& opts) {
  const int n = A.spec.dim;
  Field ay = A.slice_y(y_index);
  FastCellSlice out;
  out.chi = Field(A.gridZ, n * n * n);
  out.pi = Field(A.gridZ, n * n);
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b) {
      Field F(A.gridZ, n * n);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          const double* src = ay.comp(c4(i, k, a, b, n));
          double* dst = F.comp(c2(i, a, n));
          for (std::size_t m = 0; m < F.nodes(); ++m) dst[m] = src[m];
        }
      StokesResult r = stokes_cell_solve(ay, nullptr, &F, nullptr, opts);
      for (int gcomp = 0; gcomp < n; ++gcomp) {
        const double* src = r.velocity.comp(gcomp);
        double* dst = out.chi.comp(cchi(gcomp, k, b, n));
        for (std::size_t m = 0; m < out.chi.nodes(); ++m) dst[m] = src[m];
      }
      {
        const double* src = r.pressure.comp(0);
        double* dst = out.pi.comp(cpi(k, b, n));
        for (std::size_t m = 0; m < out.pi.nodes(); ++m) dst[m] = src[m];
      }
      out.worst_report.iterations =
          std::max(out.worst_report.iterations, r.report.iterations);
      out.worst_report.rel_residual =
          std::max(out.worst_report.rel_residual, r.report.rel_residual);
      out.worst_report.momentum_residual = std::max(
          out.worst_report.momentum_residual, r.report.momentum_residual);
      out.worst_report.divergence_residual =
          std::max(out.worst_report.divergence_residual,
                   r.report.divergence_residual);
    }
  return out;
}

FastCorrectorFamily solve_fast_cell_family(const TwoScaleCoefficient& A,
                                           const StokesOptions& opts) {
  const int n = A.spec.dim;
  FastCorrectorFamily fam;
  fam.gridY = A.gridY;
  fam.gridZ = A.gridZ;
  fam.chi = TwoScaleField(A.gridY, A.gridZ, n * n * n);
  fam.pi = TwoScaleField(A.gridY, A.gridZ, n * n);
  const std::size_t ny = A.gridY.node_count();
  std::vector<int> iters(ny, 0);
  std::vector<double> resid(ny, 0.0);
  parallel_for(ny, [&](std::size_t yn) {
    FastCellSlice s = solve_fast_cell(A, yn, opts);
    for (int c = 0; c < fam.chi.ncomp(); ++c) {
      double* dst = fam.chi.slice(c, yn);
      const double* src = s.chi.comp(c);
      for (std::size_t m = 0; m < fam.chi.nz(); ++m) dst[m] = src[m];
    }
    for (int c = 0; c < fam.pi.ncomp(); ++c) {
      double* dst = fam.pi.slice(c, yn);
      const double* src = s.pi.comp(c);
      for (std::size_t m = 0; m < fam.pi.nz(); ++m) dst[m] = src[m];
    }
    iters[yn] = s.worst_report.iterations;
    resid[yn] = s.worst_report.rel_residual;
  });
  for (std::size_t yn = 0; yn < ny; ++yn) {
    fam.max_iterations = std::max(fam.max_iterations, iters[yn]);
    fam.worst_rel_residual = std::max(fam.worst_rel_residual, resid[yn]);
  }
  return fam;
}

MesoscaleCoefficient assemble_mesoscale(const TwoScaleCoefficient& A,
                                        const FastCorrectorFamily& fast) {
  require_same(A.gridY, fast.gridY, "assemble_mesoscale (Y)");
  require_same(A.gridZ, fast.gridZ, "assemble_mesoscale (Z)");
  const int n = A.spec.dim;
  const std::size_t ny = A.gridY.node_count();
  const std::size_t nz = A.gridZ.node_count();

  MesoscaleCoefficient out;
  out.gridY = A.gridY;
  out.mu = A.spec.mu;
  out.a2 = Field(A.gridY, n * n * n * n);

  parallel_for(ny, [&](std::size_t yn) {
    Field ay = A.slice_y(yn);
    // d_{z_k} chi_j^{gb} for this y slice
    Field chi_y(A.gridZ, n * n * n);
    for (int c = 0; c < chi_y.ncomp(); ++c) {
      const double* src = fast.chi.slice(c, yn);
      double* dst = chi_y.comp(c);
      for (std::size_t m = 0; m < nz; ++m) dst[m] = src[m];
    }
    std::vector<Field> dchi(n);
    for (int m = 0; m < n; ++m) dchi[m] = spectral_derivative_field(chi_y, m);

    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            double acc = 0.0;
            const double* aij = ay.comp(c4(i, j, a, b, n));
            for (std::size_t m = 0; m < nz; ++m) acc += aij[m];
            for (int k = 0; k < n; ++k)
              for (int gcomp = 0; gcomp < n; ++gcomp) {
                const double* aik = ay.comp(c4(i, k, a, gcomp, n));
                const double* dc = dchi[k].comp(cchi(gcomp, j, b, n));
                for (std::size_t m = 0; m < nz; ++m) acc -= aik[m] * dc[m];
              }
            out.a2.at(c4(i, j, a, b, n), yn) = acc / double(nz);
          }
  });

  // Ellipticity of a2 with the same mu as A.
  std::vector<double> t(n * n * n * n);
  double lo = 1e300, hi = -1e300;
  for (std::size_t yn = 0; yn < ny; ++yn) {
    for (int c = 0; c < out.a2.ncomp(); ++c) t[c] = out.a2.at(c, yn);
    double l, h;
    tensor_eig_range(t.data(), n, l, h);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  out.ell.min_eig = lo;
  out.ell.max_eig = hi;
  double slack = 1e-8 * std::max(1.0, A.spec.max_abs_bound());
  if (lo < A.spec.mu - slack)
    throw EllipticityViolation(lo, A.spec.mu, "assemble_mesoscale");
  return out;
}

SlowCorrectorFamily solve_slow_cell(const MesoscaleCoefficient& meso,
                                    const StokesOptions& opts) {
  const int n = meso.gridY.dim;
  SlowCorrectorFamily out;
  out.gridY = meso.gridY;
  out.chi = Field(meso.gridY, n * n * n);
  out.pi = Field(meso.gridY, n * n);
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b) {
      Field F(meso.gridY, n * n);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          const double* src = meso.a2.comp(c4(i, k, a, b, n));
          double* dst = F.comp(c2(i, a, n));
          for (std::size_t m = 0; m < F.nodes(); ++m) dst[m] = src[m];
        }
      StokesResult r = stokes_cell_solve(meso.a2, nullptr, &F, nullptr, opts);
      for (int gcomp = 0; gcomp < n; ++gcomp) {
        const double* src = r.velocity.comp(gcomp);
        double* dst = out.chi.comp(cchi(gcomp, k, b, n));
        for (std::size_t m = 0; m < out.chi.nodes(); ++m) dst[m] = src[m];
      }
      const double* src = r.pressure.comp(0);
      double* dst = out.pi.comp(cpi(k, b, n));
      for (std::size_t m = 0; m < out.pi.nodes(); ++m) dst[m] = src[m];
      out.worst_report.iterations =
          std::max(out.worst_report.iterations, r.report.iterations);
      out.worst_report.rel_residual =
          std::max(out.worst_report.rel_residual, r.report.rel_residual);
    }
  return out;
}

TwoScaleField gradient_z(const TwoScaleField& f) {
  const int n = f.gridZ().dim;
  const int nc = f.ncomp();
  TwoScaleField out(f.gridY(), f.gridZ(), n * nc);
  const std::size_t nz = f.nz();
  parallel_for(f.ny(), [&](std::size_t yn) {
    std::vector<cplx> spec(nz), dspec(nz);
    for (int c = 0; c < nc; ++c) {
      fft::forward(f.gridZ(), f.slice(c, yn), spec.data());
      for (int m = 0; m < n; ++m) {
        spectral_derivative(f.gridZ(), spec.data(), dspec.data(), m);
        fft::inverse(f.gridZ(), dspec.data(), out.slice(m * nc + c, yn));
      }
    }
  });
  return out;
}

TwoScaleField fast_gradient_z(const FastCorrectorFamily& fast) {
  return gradient_z(fast.chi);
}

TwoScaleField gradient_y(const TwoScaleField& f, const PeriodicGrid& gridY) {
  require_same(f.gridY(), gridY, "gradient_y");
  const int n = gridY.dim;
  const int nc = f.ncomp();
  const std::size_t ny = f.ny();
  const std::size_t nz = f.nz();
  TwoScaleField out(f.gridY(), f.gridZ(), n * nc);
  parallel_for(nz, [&](std::size_t zn) {
    std::vector<double> buf(ny);
    std::vector<cplx> spec(ny), dspec(ny);
    std::vector<double> dbuf(ny);
    for (int c = 0; c < nc; ++c) {
      for (std::size_t yn = 0; yn < ny; ++yn) buf[yn] = f.at(c, yn, zn);
      fft::forward(gridY, buf.data(), spec.data());
      for (int m = 0; m < n; ++m) {
        spectral_derivative(gridY, spec.data(), dspec.data(), m);
        fft::inverse(gridY, dspec.data(), dbuf.data());
        for (std::size_t yn = 0; yn < ny; ++yn)
          out.at(m * nc + c, yn, zn) = dbuf[yn];
      }
    }
  });
  return out;
}

namespace {

FamilyCheck check_cell(const Field& chi, const Field& pi,
                       const PeriodicGrid& g) {
  const int n = g.dim;
  FamilyCheck c;
  for (int comp = 0; comp < chi.ncomp(); ++comp)
    c.max_mean_chi = std::max(c.max_mean_chi, std::fabs(chi.mean(comp)));
  for (int comp = 0; comp < pi.ncomp(); ++comp)
    c.max_mean_pi = std::max(c.max_mean_pi, std::fabs(pi.mean(comp)));
  // Discrete divergence of each (k,b) corrector.
  std::vector<Field> d(n);
  for (int m = 0; m < n; ++m) d[m] = spectral_derivative_field(chi, m);
  double grad2 = 0.0;
  for (int m = 0; m < n; ++m)
    for (int comp = 0; comp < chi.ncomp(); ++comp) {
      const double* p = d[m].comp(comp);
      for (std::size_t i = 0; i < chi.nodes(); ++i) grad2 += p[i] * p[i];
    }
  c.grad_scale = std::sqrt(grad2 / double(chi.nodes()));
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < chi.nodes(); ++i) {
        double div = 0.0;
        for (int m = 0; m < n; ++m) div += d[m].at(cchi(m, k, b, n), i);
        s += div * div;
      }
      c.max_div = std::max(c.max_div, std::sqrt(s / double(chi.nodes())));
    }
  return c;
}

}  // namespace

FamilyCheck check_fast_family(const FastCorrectorFamily& fast) {
  const int n = fast.gridZ.dim;
  FamilyCheck total;
  for (std::size_t yn = 0; yn < fast.chi.ny(); ++yn) {
    Field chi(fast.gridZ, fast.chi.ncomp());
    Field pi(fast.gridZ, fast.pi.ncomp());
    for (int c = 0; c < chi.ncomp(); ++c) {
      const double* src = fast.chi.slice(c, yn);
      for (std::size_t m = 0; m < chi.nodes(); ++m) chi.at(c, m) = src[m];
    }
    for (int c = 0; c < pi.ncomp(); ++c) {
      const double* src = fast.pi.slice(c, yn);
      for (std::size_t m = 0; m < pi.nodes(); ++m) pi.at(c, m) = src[m];
    }
    FamilyCheck one = check_cell(chi, pi, fast.gridZ);
    total.max_mean_chi = std::max(total.max_mean_chi, one.max_mean_chi);
    total.max_mean_pi = std::max(total.max_mean_pi, one.max_mean_pi);
    total.max_div = std::max(total.max_div, one.max_div);
    total.grad_scale = std::max(total.grad_scale, one.grad_scale);
    (void)n;
  }
  return total;
}

FamilyCheck check_slow_family(const SlowCorrectorFamily& slow) {
  return check_cell(slow.chi, slow.pi, slow.gridY);
}

}  // namespace rshom
