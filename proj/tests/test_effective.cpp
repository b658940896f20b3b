#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rshom/correctors.hpp"
#include "rshom/effective.hpp"
#include "rshom/errors.hpp"
#include "rshom/rng.hpp"
#include "rshom/spectral.hpp"

using namespace rshom;

namespace {

const int n = 2;

struct Pipeline {
  TwoScaleCoefficient A;
  FastCorrectorFamily fast;
  MesoscaleCoefficient meso;
  SlowCorrectorFamily slow;
};

Pipeline run_cells(const CoefficientSpec& spec, int ygrid, int zgrid,
                   double rtol = 1e-11) {
  Pipeline p;
  p.A = sample_coefficient(spec, PeriodicGrid(2, ygrid),
                           PeriodicGrid(2, zgrid));
  StokesOptions opts;
  opts.rtol = rtol;
  p.fast = solve_fast_cell_family(p.A, opts);
  p.meso = assemble_mesoscale(p.A, p.fast);
  p.slow = solve_slow_cell(p.meso, opts);
  return p;
}

// 1 + 0.3 sin(2 pi y1) sin(2 pi z2) + 0.3 cos(2 pi y2) cos(2 pi z1), as
// products of y- and z-oscillations so the z-profile amplitude (and hence
// a2) genuinely varies with y.
CoefficientSpec generic_two_scale() {
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.4;
  spec.terms.push_back(CoefficientSpec::isotropic_term(2, 1.0, {0, 0}, {0, 0}));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.15, {1, 0}, {0, -1}));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, -0.15, {1, 0}, {0, 1}));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.15, {0, 1}, {-1, 0}));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.15, {0, 1}, {1, 0}));
  return spec;
}

}  // namespace

TEST_CASE("constant coefficient: effective tensor equals A, I tensors vanish") {
  auto spec = CoefficientSpec::identity(2, 0.9);
  auto p = run_cells(spec, 4, 8);
  auto ahat = assemble_effective(p.A, p.fast, p.slow);
  for (int c = 0; c < 16; ++c) {
    double expect = spec.terms[0].amp[c];
    CHECK(std::fabs(ahat.a[c] - expect) <= 1e-13);
  }
  CHECK(ahat.ell.min_eig == doctest::Approx(1.0).epsilon(1e-12));

  auto I1 = compute_I1(p.A, p.fast);
  double mean_i2 = 0.0;
  auto I2 = compute_I2(ahat, p.A, p.fast, p.slow, &mean_i2);
  auto I3 = compute_I3(p.A, p.fast, p.slow);
  CHECK(I1.max_abs() <= 1e-12);
  CHECK(I2.max_abs() <= 1e-12);
  CHECK(I3.max_abs() <= 1e-12);
  CHECK(mean_i2 <= 1e-12);
}

TEST_CASE("z-only coefficient collapses to single-scale homogenization") {
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.3;
  spec.terms.push_back(CoefficientSpec::identity(2).terms[0]);
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.5, {0, 0}, {1, 0}, -M_PI / 2));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.2, {0, 0}, {1, 1}, 0.7));
  auto p = run_cells(spec, 4, 64, 1e-12);
  auto ahat = assemble_effective(p.A, p.fast, p.slow);

  // slow corrector vanishes, I3 is identically zero
  CHECK(p.slow.chi.max_abs() <= 1e-11);
  auto I3 = compute_I3(p.A, p.fast, p.slow);
  CHECK(I3.max_abs() <= 1e-10);

  auto ss = oracles::single_scale_effective(p.A.slice_y(0));
  for (int c = 0; c < 16; ++c) CHECK(std::fabs(ahat.a[c] - ss[c]) <= 1e-8);
}

TEST_CASE("y-only coefficient collapses to single-scale homogenization") {
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.3;
  spec.terms.push_back(CoefficientSpec::identity(2).terms[0]);
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.5, {1, 0}, {0, 0}, -M_PI / 2));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.2, {1, 1}, {0, 0}, 0.7));
  auto p = run_cells(spec, 64, 4, 1e-12);
  auto ahat = assemble_effective(p.A, p.fast, p.slow);

  // fast correctors vanish, so a2(y) = A(y) and the slow problem is the
  // classical one-cell pipeline over Y.
  CHECK(p.fast.chi.max_abs() <= 1e-11);
  Field cell(p.A.gridY, 16);
  for (std::size_t yn = 0; yn < p.A.gridY.node_count(); ++yn) {
    auto y = p.A.gridY.coord(yn);
    double z0[3] = {0, 0, 0};
    std::vector<double> val(16);
    spec.evaluate(y.data(), z0, val.data());
    for (int c = 0; c < 16; ++c) cell.at(c, yn) = val[c];
  }
  auto ss = oracles::single_scale_effective(cell);
  for (int c = 0; c < 16; ++c) CHECK(std::fabs(ahat.a[c] - ss[c]) <= 1e-8);
}

TEST_CASE("flux corrector kernel: zero and single-mode hand checks") {
  PeriodicGrid g(2, 16);

  SUBCASE("zero input") {
    Field I(g, 16);
    auto set = build_flux_correctors_cell(I);
    CHECK(set.E.max_abs() == 0.0);
    CHECK(set.q.max_abs() == 0.0);
  }

  SUBCASE("gradient-direction mode: q only") {
    // I_{00}^{00} = cos(2 pi z1): alpha-direction parallel to k, so E = 0
    // and q_{00}^0 = sin(2 pi z1) / (2 pi).
    Field I(g, 16);
    for (std::size_t m = 0; m < g.node_count(); ++m)
      I.at(c4(0, 0, 0, 0, n), m) = std::cos(2 * M_PI * g.coord(m)[0]);
    auto set = build_flux_correctors_cell(I);
    CHECK(set.E.max_abs() <= 1e-13);
    for (std::size_t m = 0; m < g.node_count(); ++m) {
      double expect = std::sin(2 * M_PI * g.coord(m)[0]) / (2 * M_PI);
      CHECK(set.q.at(cq(0, 0, 0, n), m) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
    double other = 0.0;
    for (int c = 0; c < set.q.ncomp(); ++c) {
      if (c == cq(0, 0, 0, n)) continue;
      for (std::size_t m = 0; m < g.node_count(); ++m)
        other = std::max(other, std::fabs(set.q.at(c, m)));
    }
    CHECK(other <= 1e-13);
  }

  SUBCASE("solenoidal-direction mode: E only") {
    // I_{10}^{10} = cos(2 pi z1): alpha-direction orthogonal to k, so q = 0
    // and E_{010}^{10} = sin(2 pi z1) / (2 pi).
    Field I(g, 16);
    for (std::size_t m = 0; m < g.node_count(); ++m)
      I.at(c4(1, 0, 1, 0, n), m) = std::cos(2 * M_PI * g.coord(m)[0]);
    auto set = build_flux_correctors_cell(I);
    CHECK(set.q.max_abs() <= 1e-13);
    int p01 = pair_index(0, 1, n);
    for (std::size_t m = 0; m < g.node_count(); ++m) {
      double expect = std::sin(2 * M_PI * g.coord(m)[0]) / (2 * M_PI);
      CHECK(set.E.at(cE(p01, 0, 1, 0, n), m) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }

  SUBCASE("nonzero mean rejected") {
    Field I(g, 16);
    for (std::size_t m = 0; m < g.node_count(); ++m)
      I.at(c4(0, 0, 0, 0, n), m) = 1.0;
    CHECK_THROWS_AS(build_flux_correctors_cell(I), NonZeroMean);
  }
}

TEST_CASE("flux corrector E agrees with the auxiliary-problem construction") {
  PeriodicGrid g(2, 16);
  Rng rng(21);
  Field I(g, 16);
  for (double& v : I.raw()) v = rng.normal();
  I.subtract_means();
  // strip Nyquist so both paths see identical data
  Spectrum s = to_spectrum(I);
  for (int c = 0; c < 16; ++c) zero_nyquist(g, s.comp(c));
  I = from_spectrum(s);
  for (int c = 0; c < 16; ++c) I.subtract_mean(c);

  auto set = build_flux_correctors_cell(I);

  // Independent route: solve the auxiliary problem per (i,j,b) slice and
  // form E_{hij} = d_h f_{ij} - d_i f_{hj}.
  int p01 = pair_index(0, 1, n);
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < n; ++b) {
      Field I0(g, n), I1(g, n);
      for (int a = 0; a < n; ++a)
        for (std::size_t m = 0; m < g.node_count(); ++m) {
          I0.at(a, m) = I.at(c4(0, j, a, b, n), m);
          I1.at(a, m) = I.at(c4(1, j, a, b, n), m);
        }
      auto aux0 = solve_stokes_auxiliary(I0);
      auto aux1 = solve_stokes_auxiliary(I1);
      Field d0f1 = spectral_derivative_field(aux1.f, 0);
      Field d1f0 = spectral_derivative_field(aux0.f, 1);
      for (int a = 0; a < n; ++a)
        for (std::size_t m = 0; m < g.node_count(); ++m) {
          double expect = d0f1.at(a, m) - d1f0.at(a, m);
          CHECK(std::fabs(set.E.at(cE(p01, j, a, b, n), m) - expect) <=
                1e-12 * std::max(1.0, I.max_abs()));
        }
      // and q matches the auxiliary pressure per slice
      for (std::size_t m = 0; m < g.node_count(); ++m) {
        CHECK(std::fabs(set.q.at(cq(0, j, b, n), m) - aux0.q.at(0, m)) <=
              1e-12);
        CHECK(std::fabs(set.q.at(cq(1, j, b, n), m) - aux1.q.at(0, m)) <=
              1e-12);
      }
    }
}

TEST_CASE("flux families on a generic two-scale coefficient") {
  auto p = run_cells(generic_two_scale(), 8, 32, 1e-11);
  auto ahat = assemble_effective(p.A, p.fast, p.slow);

  auto I1 = compute_I1(p.A, p.fast);
  double i2mean = 0.0;
  auto I2 = compute_I2(ahat, p.A, p.fast, p.slow, &i2mean);
  auto I3 = compute_I3(p.A, p.fast, p.slow);

  // Zero z-average of I1 and I3 per y node (quadrature check).
  for (std::size_t yn = 0; yn < I1.ny(); ++yn)
    for (int c = 0; c < I1.ncomp(); ++c) {
      double s1 = 0.0, s3 = 0.0;
      const double* p1 = I1.slice(c, yn);
      const double* p3 = I3.slice(c, yn);
      for (std::size_t m = 0; m < I1.nz(); ++m) {
        s1 += p1[m];
        s3 += p3[m];
      }
      CHECK(std::fabs(s1 / double(I1.nz())) <= 1e-9);
      CHECK(std::fabs(s3 / double(I3.nz())) <= 1e-9);
    }

  auto f1 = build_flux_correctors(I1, 1);
  auto f2 = build_flux_correctors_cell(I2);
  auto f3 = build_flux_correctors(I3, 3);

  // Divergence identities for all three families.
  CHECK(flux_divergence_residual(f1, I1) <= 1e-9);
  CHECK(flux_divergence_residual_cell(f2, I2) <= 1e-9);
  CHECK(flux_divergence_residual(f3, I3) <= 1e-9);

  // Pressure links: d_i q1 reproduces the independently solved pi(y,z);
  // d_i q2 reproduces pi(y); d_i q3 reproduces -pi dy_chi.
  CHECK(pressure_link_residual(f1, p.fast.pi) <= 1e-9);
  CHECK(pressure_link_residual_cell(f2, p.slow.pi) <= 1e-9);
  auto target3 = family3_link_target(p.fast, p.slow);
  double t3scale = std::max(target3.l2_norm(), 1e-300);
  double link3 = pressure_link_residual(f3, target3);
  CHECK(link3 * t3scale <= 1e-9 * std::max(1.0, p.fast.pi.l2_norm()));

  // Effective-tensor ellipticity over the random probes.
  CHECK(ahat.ell.min_rayleigh >= 0.4);
  CHECK(ahat.ell.max_rayleigh <= 1.0 / 0.4);
}

TEST_CASE("E1 Lipschitz in y and E2 H1 norm are refinement stable") {
  auto fit_e1 = [&](int zgrid) {
    auto p = run_cells(generic_two_scale(), 8, zgrid, 1e-11);
    auto I1 = compute_I1(p.A, p.fast);
    auto f1 = build_flux_correctors(I1, 1);
    // H1(Z) distance between E slices at nearby y, per unit y distance.
    double cmax = 0.0;
    Rng rng(3);
    const std::size_t ny = f1.E.ny();
    for (int trial = 0; trial < 30; ++trial) {
      std::size_t y1 = rng.integer() % ny;
      std::size_t y2 = rng.integer() % ny;
      if (y1 == y2) continue;
      auto a = p.A.gridY.coord(y1);
      auto b = p.A.gridY.coord(y2);
      double dy = 0.0;
      for (int d = 0; d < n; ++d) {
        double diff = std::fabs(a[d] - b[d]);
        diff = std::min(diff, 1.0 - diff);
        dy += diff * diff;
      }
      if (dy == 0.0) continue;
      Field e1(f1.E.gridZ(), f1.E.ncomp());
      for (int c = 0; c < f1.E.ncomp(); ++c) {
        const double* s1 = f1.E.slice(c, y1);
        const double* s2 = f1.E.slice(c, y2);
        for (std::size_t m = 0; m < e1.nodes(); ++m)
          e1.at(c, m) = s1[m] - s2[m];
      }
      double l2 = e1.l2_norm();
      double h1 = 0.0;
      for (int d = 0; d < n; ++d) {
        Field de = spectral_derivative_field(e1, d);
        h1 += de.l2_norm() * de.l2_norm();
      }
      double dist = std::sqrt(l2 * l2 + h1);
      cmax = std::max(cmax, dist / std::sqrt(dy));
    }
    return cmax;
  };
  double c32 = fit_e1(32);
  double c64 = fit_e1(64);
  CHECK(c64 <= 1.2 * c32);
  CHECK(c32 <= 1.2 * c64);

  auto e2_h1 = [&](int ygrid) {
    auto p = run_cells(generic_two_scale(), ygrid, 16, 1e-11);
    auto ahat = assemble_effective(p.A, p.fast, p.slow);
    auto I2 = compute_I2(ahat, p.A, p.fast, p.slow);
    auto f2 = build_flux_correctors_cell(I2);
    double l2 = f2.E.l2_norm();
    double h1 = 0.0;
    for (int d = 0; d < n; ++d) {
      Field de = spectral_derivative_field(f2.E, d);
      h1 += de.l2_norm() * de.l2_norm();
    }
    return std::sqrt(l2 * l2 + h1);
  };
  double h8 = e2_h1(8);
  double h16 = e2_h1(16);
  CHECK(h16 <= 1.2 * h8 + 1e-12);
  CHECK(h8 <= 1.2 * h16 + 1e-12);
}

TEST_CASE("effective tensor is stable under z-grid refinement") {
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.3;
  spec.terms.push_back(CoefficientSpec::identity(2).terms[0]);
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.2, {1, 0}, {0, -1}));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.15, {0, 1}, {4, 0}, 0.2));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.1, {1, 1}, {2, 3}, 1.0));
  auto p32 = run_cells(spec, 8, 32, 1e-12);
  auto p64 = run_cells(spec, 8, 64, 1e-12);
  auto a32 = assemble_effective(p32.A, p32.fast, p32.slow);
  auto a64 = assemble_effective(p64.A, p64.fast, p64.slow);
  double scale = 0.0, diff = 0.0;
  for (int c = 0; c < 16; ++c) {
    scale = std::max(scale, std::fabs(a64.a[c]));
    diff = std::max(diff, std::fabs(a64.a[c] - a32.a[c]));
  }
  CHECK(diff <= 1e-6 * scale);
}
