#include "oracles.hpp"

#include <Eigen/Dense>

#include "rshom/errors.hpp"
#include "rshom/spectral.hpp"

namespace rshom::oracles {

StokesResult dense_stokes_solve(const Field& coeff, const Field* f,
                                const Field* F, const Field* h) {
  const PeriodicGrid& g = coeff.grid();
  const int n = g.dim;
  const std::size_t N = g.node_count();
  const std::size_t nu = static_cast<std::size_t>(n) * N;
  const std::size_t total = nu + N + n + 1;

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(total, total);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total);

  // Momentum block and continuity block, one unit velocity at a time.
  Field unit(g, n), lu;
  for (int a = 0; a < n; ++a)
    for (std::size_t m = 0; m < N; ++m) {
      std::fill(unit.raw().begin(), unit.raw().end(), 0.0);
      unit.at(a, m) = 1.0;
      apply_momentum_operator(coeff, unit, lu);
      std::size_t col = a * N + m;
      for (int aa = 0; aa < n; ++aa)
        for (std::size_t mm = 0; mm < N; ++mm)
          K(aa * N + mm, col) = lu.at(aa, mm);
      Field grad = spectral_gradient(unit);
      for (std::size_t mm = 0; mm < N; ++mm) {
        double div = 0.0;
        for (int d = 0; d < n; ++d) div += grad.at(c2(d, d, n), mm);
        K(nu + mm, col) = div;
      }
    }

  // Pressure gradient columns.
  Field punit(g, 1);
  for (std::size_t m = 0; m < N; ++m) {
    std::fill(punit.raw().begin(), punit.raw().end(), 0.0);
    punit.at(0, m) = 1.0;
    for (int d = 0; d < n; ++d) {
      Field dp = spectral_derivative_field(punit, d);
      for (std::size_t mm = 0; mm < N; ++mm)
        K(d * N + mm, nu + m) = dp.at(0, mm);
    }
  }

  // The spectral operators annihilate Nyquist content, so the saddle system
  // is posed on the Nyquist-free subspace. Regularize the complementary
  // subspace with the identity (projector assembled by FFT round trips) and
  // filter the data the same way the iterative solver does.
  Eigen::MatrixXd nyq = Eigen::MatrixXd::Zero(N, N);
  {
    std::vector<cplx> spec(N);
    Field e(g, 1), col(g, 1);
    for (std::size_t m = 0; m < N; ++m) {
      std::fill(e.raw().begin(), e.raw().end(), 0.0);
      e.at(0, m) = 1.0;
      fft::forward(g, e.comp(0), spec.data());
      std::vector<cplx> keep = spec;
      zero_nyquist(g, spec.data());
      for (std::size_t t = 0; t < N; ++t) keep[t] -= spec[t];
      fft::inverse(g, keep.data(), col.comp(0));
      for (std::size_t mm = 0; mm < N; ++mm) nyq(mm, m) = col.at(0, mm);
    }
  }
  for (int a = 0; a < n; ++a)
    for (std::size_t m = 0; m < N; ++m)
      for (std::size_t mm = 0; mm < N; ++mm)
        K(a * N + mm, a * N + m) += nyq(mm, m);
  for (std::size_t m = 0; m < N; ++m)
    for (std::size_t mm = 0; mm < N; ++mm) K(nu + mm, nu + m) += nyq(mm, m);

  // Mean constraints: velocity means (n multipliers) and pressure mean.
  for (int a = 0; a < n; ++a)
    for (std::size_t m = 0; m < N; ++m) {
      K(a * N + m, nu + N + a) = 1.0;          // multiplier in momentum
      K(nu + N + a, a * N + m) = 1.0 / double(N);  // mean row
    }
  for (std::size_t m = 0; m < N; ++m) {
    K(nu + m, nu + N + n) = 1.0;               // multiplier in continuity
    K(nu + N + n, nu + m) = 1.0 / double(N);   // pressure mean row
  }

  // Right-hand side: momentum r = f - div(F); continuity h. Both filtered
  // to the Nyquist-free subspace.
  Field r(g, n);
  if (f)
    for (int a = 0; a < n; ++a)
      for (std::size_t m = 0; m < N; ++m) r.at(a, m) += f->at(a, m);
  if (F) {
    Field divF = spectral_divergence_flux(*F);
    for (int a = 0; a < n; ++a)
      for (std::size_t m = 0; m < N; ++m) r.at(a, m) -= divF.at(a, m);
  }
  {
    std::vector<cplx> spec(N);
    for (int a = 0; a < n; ++a) {
      fft::forward(g, r.comp(a), spec.data());
      zero_nyquist(g, spec.data());
      fft::inverse(g, spec.data(), r.comp(a));
    }
  }
  for (int a = 0; a < n; ++a)
    for (std::size_t m = 0; m < N; ++m) rhs(a * N + m) = r.at(a, m);
  if (h) {
    Field hf(g, 1);
    std::vector<cplx> spec(N);
    fft::forward(g, h->comp(0), spec.data());
    zero_nyquist(g, spec.data());
    fft::inverse(g, spec.data(), hf.comp(0));
    for (std::size_t m = 0; m < N; ++m) rhs(nu + m) = hf.at(0, m);
  }

  Eigen::VectorXd sol = K.partialPivLu().solve(rhs);

  StokesResult out;
  out.velocity = Field(g, n);
  out.pressure = Field(g, 1);
  for (int a = 0; a < n; ++a)
    for (std::size_t m = 0; m < N; ++m) out.velocity.at(a, m) = sol(a * N + m);
  for (std::size_t m = 0; m < N; ++m) out.pressure.at(0, m) = sol(nu + m);
  out.pressure.subtract_mean(0);
  return out;
}

std::vector<double> single_scale_effective(const Field& cell_coeff) {
  const PeriodicGrid& g = cell_coeff.grid();
  const int n = g.dim;
  const std::size_t N = g.node_count();
  std::vector<double> ahat(static_cast<std::size_t>(n) * n * n * n, 0.0);

  // One corrector per (k, b); flux average assembled freshly here.
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b) {
      Field F(g, n * n);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          const double* src = cell_coeff.comp(c4(i, k, a, b, n));
          double* dst = F.comp(c2(i, a, n));
          for (std::size_t m = 0; m < N; ++m) dst[m] = src[m];
        }
      StokesOptions opts;
      opts.rtol = 1e-12;
      StokesResult r = stokes_cell_solve(cell_coeff, nullptr, &F, nullptr, opts);
      Field grad = spectral_gradient(r.velocity);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          double acc = 0.0;
          const double* aik = cell_coeff.comp(c4(i, k, a, b, n));
          for (std::size_t m = 0; m < N; ++m) acc += aik[m];
          for (int kk = 0; kk < n; ++kk)
            for (int gg = 0; gg < n; ++gg) {
              const double* av = cell_coeff.comp(c4(i, kk, a, gg, n));
              const double* dg = grad.comp(c2(kk, gg, n));
              for (std::size_t m = 0; m < N; ++m) acc -= av[m] * dg[m];
            }
          ahat[c4(i, k, a, b, n)] = acc / double(N);
        }
    }
  return ahat;
}

}  // namespace rshom::oracles
