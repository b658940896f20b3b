#include "rshom/coefficient.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <mutex>

#include "rshom/errors.hpp"
#include "rshom/parallel.hpp"
#include "rshom/rng.hpp"

namespace rshom {

void CoefficientSpec::validate() const {
  if (dim < 2 || dim > 3) throw ConfigError("coefficient dim must be 2 or 3");
  if (mu <= 0.0) throw ConfigError("mu must be positive");
  const std::size_t n4 = static_cast<std::size_t>(dim) * dim * dim * dim;
  for (const auto& t : terms) {
    if (t.amp.size() != n4) throw ConfigError("term amplitude must have n^4 entries");
    if (t.ky.size() != static_cast<std::size_t>(dim) ||
        t.kz.size() != static_cast<std::size_t>(dim))
      throw ConfigError("term wave vectors must have dim entries");
  }
}

void CoefficientSpec::evaluate(const double* y, const double* z,
                               double* out) const {
  const std::size_t n4 = static_cast<std::size_t>(dim) * dim * dim * dim;
  for (std::size_t c = 0; c < n4; ++c) out[c] = 0.0;
  for (const auto& t : terms) {
    double arg = t.phase;
    for (int d = 0; d < dim; ++d) arg += 2.0 * M_PI * (t.ky[d] * y[d] + t.kz[d] * z[d]);
    double w = std::cos(arg);
    for (std::size_t c = 0; c < n4; ++c) out[c] += w * t.amp[c];
  }
}

double CoefficientSpec::lipschitz_m() const {
  double m = 0.0;
  for (const auto& t : terms) {
    double fro = 0.0;
    for (double a : t.amp) fro += a * a;
    fro = std::sqrt(fro);
    double ky2 = 0.0;
    for (int d = 0; d < dim; ++d) ky2 += double(t.ky[d]) * t.ky[d];
    m += fro * 2.0 * M_PI * std::sqrt(ky2);
  }
  return m;
}

double CoefficientSpec::max_abs_bound() const {
  double s = 0.0;
  for (const auto& t : terms) {
    double m = 0.0;
    for (double a : t.amp) m = std::max(m, std::fabs(a));
    s += m;
  }
  return s;
}

bool CoefficientSpec::is_symmetric(double tol) const {
  const int n = dim;
  for (const auto& t : terms)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            if (std::fabs(t.amp[c4(i, j, a, b, n)] -
                          t.amp[c4(j, i, b, a, n)]) > tol)
              return false;
  return true;
}

std::vector<double> CoefficientSpec::identity_tensor(int dim) {
  std::vector<double> t(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < dim; ++a) t[c4(i, i, a, a, dim)] = 1.0;
  return t;
}

CoefficientTerm CoefficientSpec::isotropic_term(int dim, double scale,
                                                std::vector<int> ky,
                                                std::vector<int> kz,
                                                double phase) {
  CoefficientTerm t;
  t.amp = identity_tensor(dim);
  for (double& a : t.amp) a *= scale;
  t.ky = std::move(ky);
  t.kz = std::move(kz);
  t.phase = phase;
  return t;
}

CoefficientSpec CoefficientSpec::identity(int dim, double mu) {
  CoefficientSpec s;
  s.dim = dim;
  s.mu = mu;
  s.terms.push_back(isotropic_term(dim, 1.0, std::vector<int>(dim, 0),
                                   std::vector<int>(dim, 0)));
  return s;
}

double rayleigh_quotient(const double* tensor, const double* xi, int dim) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < dim; ++a) {
      den += xi[c2(i, a, dim)] * xi[c2(i, a, dim)];
      for (int j = 0; j < dim; ++j)
        for (int b = 0; b < dim; ++b)
          num += tensor[c4(i, j, a, b, dim)] * xi[c2(i, a, dim)] *
                 xi[c2(j, b, dim)];
    }
  return num / den;
}

void tensor_eig_range(const double* tensor, int dim, double& lo, double& hi) {
  const int m = dim * dim;
  Eigen::MatrixXd sym(m, m);
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < dim; ++a)
      for (int j = 0; j < dim; ++j)
        for (int b = 0; b < dim; ++b)
          sym(c2(i, a, dim), c2(j, b, dim)) =
              0.5 * (tensor[c4(i, j, a, b, dim)] + tensor[c4(j, i, b, a, dim)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  lo = es.eigenvalues().minCoeff();
  hi = es.eigenvalues().maxCoeff();
}

Field TwoScaleCoefficient::slice_y(std::size_t ynode) const {
  const int n = spec.dim;
  const int n4 = n * n * n * n;
  Field out(gridZ, n4);
  if (materialized) {
    for (int c = 0; c < n4; ++c) {
      const double* src = samples.slice(c, ynode);
      double* dst = out.comp(c);
      for (std::size_t zn = 0; zn < out.nodes(); ++zn) dst[zn] = src[zn];
    }
    return out;
  }
  auto y = gridY.coord(ynode);
  std::vector<double> val(n4);
  for (std::size_t zn = 0; zn < out.nodes(); ++zn) {
    auto z = gridZ.coord(zn);
    spec.evaluate(y.data(), z.data(), val.data());
    for (int c = 0; c < n4; ++c) out.at(c, zn) = val[c];
  }
  return out;
}

std::vector<double> TwoScaleCoefficient::z_average(std::size_t ynode) const {
  Field a = slice_y(ynode);
  std::vector<double> avg(a.ncomp());
  for (int c = 0; c < a.ncomp(); ++c) avg[c] = a.mean(c);
  return avg;
}

TwoScaleCoefficient sample_coefficient(const CoefficientSpec& spec,
                                       const PeriodicGrid& gridY,
                                       const PeriodicGrid& gridZ,
                                       bool materialize, std::uint64_t seed,
                                       int n_xi) {
  spec.validate();
  if (gridY.dim != spec.dim || gridZ.dim != spec.dim)
    throw GridMismatch("coefficient grids must match spec dim");
  const int n = spec.dim;
  const int n4 = n * n * n * n;

  TwoScaleCoefficient out;
  out.spec = spec;
  out.gridY = gridY;
  out.gridZ = gridZ;
  out.materialized = materialize;
  if (materialize) out.samples = TwoScaleField(gridY, gridZ, n4);

  // Random xi probes shared by all nodes.
  Rng rng(seed);
  std::vector<double> xis(static_cast<std::size_t>(n_xi) * n * n);
  for (double& v : xis) v = rng.normal();

  const std::size_t ny = gridY.node_count();
  std::vector<double> lo_y(ny, 0.0), hi_y(ny, 0.0), rlo_y(ny, 0.0),
      rhi_y(ny, 0.0);

  parallel_for(ny, [&](std::size_t yn) {
    auto y = gridY.coord(yn);
    std::vector<double> val(n4);
    double lo = 1e300, hi = -1e300, rlo = 1e300, rhi = -1e300;
    for (std::size_t zn = 0; zn < gridZ.node_count(); ++zn) {
      auto z = gridZ.coord(zn);
      spec.evaluate(y.data(), z.data(), val.data());
      if (materialize)
        for (int c = 0; c < n4; ++c) out.samples.at(c, yn, zn) = val[c];
      double l, h;
      tensor_eig_range(val.data(), n, l, h);
      lo = std::min(lo, l);
      hi = std::max(hi, h);
      for (int q = 0; q < n_xi; ++q) {
        double r = rayleigh_quotient(val.data(), &xis[q * n * n], n);
        rlo = std::min(rlo, r);
        rhi = std::max(rhi, r);
      }
    }
    lo_y[yn] = lo;
    hi_y[yn] = hi;
    rlo_y[yn] = rlo;
    rhi_y[yn] = rhi;
  });

  EllipticityReport rep;
  rep.min_eig = 1e300;
  rep.max_eig = -1e300;
  rep.min_rayleigh = 1e300;
  rep.max_rayleigh = -1e300;
  for (std::size_t yn = 0; yn < ny; ++yn) {
    rep.min_eig = std::min(rep.min_eig, lo_y[yn]);
    rep.max_eig = std::max(rep.max_eig, hi_y[yn]);
    rep.min_rayleigh = std::min(rep.min_rayleigh, rlo_y[yn]);
    rep.max_rayleigh = std::max(rep.max_rayleigh, rhi_y[yn]);
  }
  out.ell = rep;

  double slack = 1e-10 * std::max(1.0, spec.max_abs_bound());
  if (rep.min_eig < spec.mu - slack)
    throw EllipticityViolation(rep.min_eig, spec.mu, "sample_coefficient");
  if (rep.max_eig > 1.0 / spec.mu + slack)
    throw EllipticityViolation(rep.max_eig, spec.mu,
                               "sample_coefficient (upper bound)");
  return out;
}

}  // namespace rshom
