#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rshom/errors.hpp"
#include "rshom/fine_stokes.hpp"
#include "rshom/mac_stokes.hpp"
#include "rshom/rng.hpp"

using namespace rshom;

namespace {

AnalyticField one_mode_forcing() {
  // f = (sin 2 pi x2, 0)
  AnalyticField f;
  f.dim = 2;
  f.ncomp = 2;
  f.terms.push_back({{1.0, 0.0}, {0, 1}, -M_PI / 2});
  return f;
}

EffectiveTensor identity_tensor_eff() {
  EffectiveTensor t;
  t.dim = 2;
  t.mu = 1.0;
  t.a = CoefficientSpec::identity_tensor(2);
  t.a_sym = t.a;
  return t;
}

}  // namespace

TEST_CASE("homogenized solve: closed form for a single mode, zero for zero") {
  DomainSpec spec;
  spec.kind = MacroDomain::Kind::torus;
  spec.macro_n = 32;
  spec.f = one_mode_forcing();
  auto sol = solve_homogenized(identity_tensor_eff(), spec);
  for (std::size_t m = 0; m < sol.dom.nodes(); ++m) {
    auto x = sol.dom.coord(m);
    double expect = std::sin(2 * M_PI * x[1]) / (4 * M_PI * M_PI);
    CHECK(sol.u.at(0, m) == doctest::Approx(expect).epsilon(1e-10));
    CHECK(std::fabs(sol.u.at(1, m)) <= 1e-12);
    CHECK(std::fabs(sol.p.at(0, m)) <= 1e-12);
  }

  DomainSpec zero = spec;
  zero.f.terms.clear();
  auto z = solve_homogenized(identity_tensor_eff(), zero);
  CHECK(z.u.max_abs() == 0.0);
  CHECK(z.p.max_abs() == 0.0);
}

TEST_CASE("constant coefficient: reiterated path degenerates to homogenized") {
  auto spec_id = CoefficientSpec::identity(2, 0.8);
  DomainSpec dspec;
  dspec.kind = MacroDomain::Kind::torus;
  dspec.macro_n = 64;
  dspec.f = one_mode_forcing();
  auto a = solve_reiterated(spec_id, 0.5, dspec);
  auto b = solve_homogenized(identity_tensor_eff(), dspec);
  for (std::size_t m = 0; m < a.dom.nodes(); ++m)
    for (int c = 0; c < 2; ++c)
      CHECK(a.u.at(c, m) == doctest::Approx(b.u.at(c, m)).epsilon(1e-12));
}

TEST_CASE("eps = 1 variable-coefficient solve matches the dense oracle") {
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.3;
  spec.terms.push_back(CoefficientSpec::identity(2).terms[0]);
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.25, {1, 0}, {0, 1}, 0.4));
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.2, {0, 1}, {1, 0}, -0.3));

  DomainSpec dspec;
  dspec.kind = MacroDomain::Kind::torus;
  dspec.macro_n = 32;
  dspec.f = one_mode_forcing();
  dspec.f.terms.push_back({{0.0, 0.7}, {1, 0}, 0.2});

  StokesOptions opts;
  opts.rtol = 1e-12;
  auto sol = solve_reiterated(spec, 1.0, dspec, opts);

  // dense saddle-point oracle on the same sampled coefficient
  MacroDomain dom = dspec.domain();
  Field A(dom.grid, 16), f(dom.grid, 2);
  std::vector<double> t(16), fv(2);
  for (std::size_t m = 0; m < dom.nodes(); ++m) {
    auto x = dom.coord(m);
    spec.evaluate(x.data(), x.data(), t.data());
    for (int c = 0; c < 16; ++c) A.at(c, m) = t[c];
    dspec.f.eval(x.data(), fv.data());
    for (int c = 0; c < 2; ++c) f.at(c, m) = fv[c];
  }
  auto dn = oracles::dense_stokes_solve(A, &f, nullptr, nullptr);
  double scale = std::max(dn.velocity.max_abs(), 1e-30);
  for (std::size_t m = 0; m < dom.nodes(); ++m)
    for (int c = 0; c < 2; ++c)
      CHECK(std::fabs(sol.u.at(c, m) - dn.velocity.at(c, m)) <= 1e-6 * scale);
}

TEST_CASE("manufactured solution on the torus is recovered to solver tol") {
  // A = (1 + 0.3 cos 2 pi x1) I, u* = (sin 2 pi x2, 0), p* = 0.3 sin 2 pi x1.
  // f* = L u* + grad p* worked out analytically below.
  CoefficientSpec spec;
  spec.dim = 2;
  spec.mu = 0.5;
  spec.terms.push_back(CoefficientSpec::identity(2).terms[0]);
  spec.terms.push_back(
      CoefficientSpec::isotropic_term(2, 0.3, {1, 0}, {0, 0}));

  DomainSpec dspec;
  dspec.kind = MacroDomain::Kind::torus;
  dspec.macro_n = 64;
  dspec.f.dim = 2;
  dspec.f.ncomp = 2;
  // 4 pi^2 sin(2 pi x2)
  dspec.f.terms.push_back({{4 * M_PI * M_PI, 0.0}, {0, 1}, -M_PI / 2});
  // 0.3 * 4 pi^2 cos(2 pi x1) sin(2 pi x2)
  //   = 0.6 pi^2 [sin(2 pi (x1+x2)) - sin(2 pi (x1-x2))]
  dspec.f.terms.push_back({{0.6 * M_PI * M_PI, 0.0}, {1, 1}, -M_PI / 2});
  dspec.f.terms.push_back({{-0.6 * M_PI * M_PI, 0.0}, {1, -1}, -M_PI / 2});
  // grad p*: 0.6 pi cos(2 pi x1) in component 1
  dspec.f.terms.push_back({{0.6 * M_PI, 0.0}, {1, 0}, 0.0});

  auto sol = solve_reiterated(spec, 1.0, dspec);
  double err = 0.0;
  for (std::size_t m = 0; m < sol.dom.nodes(); ++m) {
    auto x = sol.dom.coord(m);
    double u1 = std::sin(2 * M_PI * x[1]);
    double ps = 0.3 * std::sin(2 * M_PI * x[0]);
    err = std::max(err, std::fabs(sol.u.at(0, m) - u1));
    err = std::max(err, std::fabs(sol.u.at(1, m)));
    err = std::max(err, std::fabs(sol.p.at(0, m) - ps));
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("MAC square solver: manufactured-solution convergence order") {
  // A = (1 + 0.3 cos(2 pi x1) cos(2 pi x2)) I,
  // u* = (sin(2 pi x2), sin(2 pi x1)), p* = cos(2 pi x1) - cos(2 pi x2);
  // div u* = 0 and f* = -grad A . grad u* - A Lap u* + grad p*.
  auto a_val = [](const double* x) {
    return 1.0 + 0.3 * std::cos(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
  };
  auto a_d1 = [](const double* x) {
    return -0.6 * M_PI * std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
  };
  auto a_d2 = [](const double* x) {
    return -0.6 * M_PI * std::cos(2 * M_PI * x[0]) * std::sin(2 * M_PI * x[1]);
  };
  auto ustar = [](const double* x, double* u) {
    u[0] = std::sin(2 * M_PI * x[1]);
    u[1] = std::sin(2 * M_PI * x[0]);
  };

  std::vector<double> hs, errs;
  for (int N : {16, 32, 64}) {
    MacProblem prob;
    prob.n = N;
    prob.coeff = [&](const double* x, double* t) {
      double v = a_val(x);
      for (int c = 0; c < 16; ++c) t[c] = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) t[c4(i, i, a, a, 2)] = v;
    };
    prob.forcing = [&](const double* x, double* f) {
      double du1[2] = {0.0, 2 * M_PI * std::cos(2 * M_PI * x[1])};
      double du2[2] = {2 * M_PI * std::cos(2 * M_PI * x[0]), 0.0};
      double lap1 = -4 * M_PI * M_PI * std::sin(2 * M_PI * x[1]);
      double lap2 = -4 * M_PI * M_PI * std::sin(2 * M_PI * x[0]);
      double gp1 = -2 * M_PI * std::sin(2 * M_PI * x[0]);
      double gp2 = 2 * M_PI * std::sin(2 * M_PI * x[1]);
      f[0] = -(a_d1(x) * du1[0] + a_d2(x) * du1[1]) - a_val(x) * lap1 + gp1;
      f[1] = -(a_d1(x) * du2[0] + a_d2(x) * du2[1]) - a_val(x) * lap2 + gp2;
    };
    prob.divergence = [](const double*) { return 0.0; };
    prob.boundary = [&](const double* x, double* g) { ustar(x, g); };

    MacSolution sol = mac_stokes_solve(prob);
    double err2 = 0.0;
    for (std::size_t m = 0; m < sol.dom.nodes(); ++m) {
      auto x = sol.dom.coord(m);
      double u[2];
      ustar(x.data(), u);
      for (int c = 0; c < 2; ++c) {
        double d = sol.u.at(c, m) - u[c];
        err2 += d * d;
      }
    }
    hs.push_back(1.0 / N);
    errs.push_back(std::sqrt(err2 / double(sol.dom.nodes())));
    CHECK(sol.solve_residual <= 1e-10);
  }
  double slope = (std::log(errs.back()) - std::log(errs.front())) /
                 (std::log(hs.back()) - std::log(hs.front()));
  CHECK(slope >= 1.5);
  CHECK(errs.back() <= 2e-3);
}

TEST_CASE("norms: closed forms on the torus, boundary layer on the square") {
  MacroDomain torus = MacroDomain::torus(2, 64);
  Field one(torus.grid, 1);
  for (double& v : one.raw()) v = 1.0;
  CHECK(norms(torus, one).l2 == doctest::Approx(1.0).epsilon(1e-14));

  Field sine(torus.grid, 1);
  for (std::size_t m = 0; m < torus.nodes(); ++m)
    sine.at(0, m) = std::sin(2 * M_PI * torus.coord(m)[0]);
  FieldNorms sn = norms(torus, sine);
  CHECK(sn.l2 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(sn.h1_semi ==
        doctest::Approx(2 * M_PI / std::sqrt(2.0)).epsilon(1e-12));

  // Boundary-layer inequality (square): int_{dist<=eps} |u|^2 <=
  // C eps ||u||_H1 ||u||_L2, fitted C stable across eps halvings.
  MacroDomain square = MacroDomain::square(2, 256);
  Rng rng(9);
  std::vector<AnalyticField> fields;
  for (int s = 0; s < 20; ++s) {
    AnalyticField u;
    u.dim = 2;
    u.ncomp = 2;
    for (int t = 0; t < 3; ++t) {
      AnalyticField::Term term;
      term.amp = {rng.normal(), rng.normal()};
      term.k = {int(rng.integer() % 4) - 2, int(rng.integer() % 4) - 2};
      term.phase = rng.uniform(0.0, 2 * M_PI);
      u.terms.push_back(term);
    }
    fields.push_back(u);
  }
  std::vector<double> cs;
  for (double eps : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    double cmax = 0.0;
    for (const auto& uf : fields) {
      Field u = uf.sample(square);
      FieldNorms un = norms(square, u);
      double bl = boundary_layer_l2(square, u, eps);
      if (un.l2 < 1e-12) continue;
      cmax = std::max(cmax, bl * bl / (eps * un.h1 * un.l2));
    }
    cs.push_back(cmax);
  }
  double lo = *std::min_element(cs.begin(), cs.end());
  double hi = *std::max_element(cs.begin(), cs.end());
  CHECK(hi <= 2.0 * lo);
}

TEST_CASE("adjoint duality identity for a constant nonsymmetric tensor") {
  // a = I + skew coupling; solve L u = b and L* v = G, then <u, G> = <b, v>.
  std::vector<double> a = CoefficientSpec::identity_tensor(2);
  a[c4(0, 1, 0, 1, 2)] += 0.2;  // breaks a_ij^{ab} = a_ji^{ba}
  std::vector<double> at(16);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          at[c4(i, j, al, be, 2)] = a[c4(j, i, be, al, 2)];

  DomainSpec dspec;
  dspec.kind = MacroDomain::Kind::torus;
  dspec.macro_n = 32;
  dspec.f = one_mode_forcing();
  DomainSpec dspec_adj = dspec;
  dspec_adj.f.terms.clear();
  dspec_adj.f.terms.push_back({{0.3, 0.8}, {0, 1}, 0.4});
  dspec_adj.f.terms.push_back({{0.5, 0.2}, {1, 1}, -0.7});

  StokesOptions opts;
  opts.rtol = 1e-13;
  auto coeff = [&a](const double*, double* out) {
    for (int c = 0; c < 16; ++c) out[c] = a[c];
  };
  auto coeff_t = [&at](const double*, double* out) {
    for (int c = 0; c < 16; ++c) out[c] = at[c];
  };
  auto u = solve_fine(coeff, dspec, opts);
  auto v = solve_fine(coeff_t, dspec_adj, opts);

  MacroDomain dom = dspec.domain();
  Field b = dspec.f.sample(dom);
  Field G = dspec_adj.f.sample(dom);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t m = 0; m < dom.nodes(); ++m)
    for (int c = 0; c < 2; ++c) {
      lhs += u.u.at(c, m) * G.at(c, m);
      rhs += b.at(c, m) * v.u.at(c, m);
    }
  lhs /= double(dom.nodes());
  rhs /= double(dom.nodes());
  CHECK(std::fabs(lhs - rhs) <=
        1e-10 * std::max({std::fabs(lhs), std::fabs(rhs), 1e-12}));
}

TEST_CASE("resolution rule is enforced") {
  auto spec = CoefficientSpec::identity(2, 0.9);
  DomainSpec dspec;
  dspec.kind = MacroDomain::Kind::torus;
  dspec.macro_n = 32;  // spacing 1/32 > (1/6)^2 / 8 = 1/288
  dspec.f = one_mode_forcing();
  CHECK_THROWS_AS(solve_reiterated(spec, 1.0 / 6.0, dspec),
                  ResolutionInsufficient);
}
