#include "rshom/smoothing.hpp"

#include <cmath>

#include "rshom/errors.hpp"
#include "rshom/parallel.hpp"

namespace rshom {

double mollifier_profile(double s) {
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s));
}

namespace {

// Kernel sample at lattice offset delta for parameter eps (support eps/2).
double kernel_value(const double* delta, int dim, double eps) {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) r2 += delta[d] * delta[d];
  double half = 0.5 * eps;
  return mollifier_profile(r2 / (half * half));
}

struct KernelStencil {
  std::vector<std::array<int, 3>> offsets;  // lattice steps
  std::vector<double> weights;              // normalized to unit mass
};

KernelStencil build_stencil(const MacroDomain& dom, double eps) {
  const int dim = dom.grid.dim;
  const double h = dom.spacing();
  int reach = static_cast<int>(std::floor(0.5 * eps / h)) + 1;
  KernelStencil st;
  double total = 0.0;
  auto push = [&](int i, int j, int k) {
    double delta[3] = {i * h, j * h, k * h};
    double w = kernel_value(delta, dim, eps);
    if (w > 0.0) {
      st.offsets.push_back({i, j, k});
      st.weights.push_back(w);
      total += w;
    }
  };
  if (dim == 2) {
    for (int i = -reach; i <= reach; ++i)
      for (int j = -reach; j <= reach; ++j) push(i, j, 0);
  } else {
    for (int i = -reach; i <= reach; ++i)
      for (int j = -reach; j <= reach; ++j)
        for (int k = -reach; k <= reach; ++k) push(i, j, k);
  }
  for (double& w : st.weights) w /= total;
  return st;
}

Field mollify_square_direct(const Field& f, double eps,
                            const MacroDomain& dom) {
  KernelStencil st = build_stencil(dom, eps);
  const int N = dom.grid.n;
  const int dim = dom.grid.dim;
  Field out(dom.grid, f.ncomp());
  parallel_for(dom.nodes(), [&](std::size_t m) {
    auto idx = dom.grid.unindex(m);
    for (std::size_t t = 0; t < st.offsets.size(); ++t) {
      std::array<int, 3> src = idx;
      bool inside = true;
      for (int d = 0; d < dim; ++d) {
        src[d] -= st.offsets[t][d];
        if (src[d] < 0 || src[d] >= N) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;  // zero extension outside the square
      std::size_t sm = dom.grid.index(src);
      for (int c = 0; c < f.ncomp(); ++c)
        out.at(c, m) += st.weights[t] * f.at(c, sm);
    }
  });
  return out;
}

Field mollify_torus_fft(const Field& f, double eps, const MacroDomain& dom) {
  const PeriodicGrid& g = dom.grid;
  // kernel on the torus (min-image offsets), unit discrete mass
  Field ker(g, 1);
  double total = 0.0;
  for (std::size_t m = 0; m < g.node_count(); ++m) {
    auto idx = g.unindex(m);
    double delta[3] = {0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
      double x = idx[d] * g.spacing();
      if (x > 0.5) x -= 1.0;
      delta[d] = x;
    }
    double w = kernel_value(delta, g.dim, eps);
    ker.at(0, m) = w;
    total += w;
  }
  for (std::size_t m = 0; m < g.node_count(); ++m) ker.at(0, m) /= total;

  // Circular convolution with quadrature weight h^d: with h = 1/N the
  // combined factor is exactly one, so the smoothing symbol is khat * N^d
  // with khat(0) = 1.
  std::vector<cplx> khat(g.node_count()), spec(g.node_count());
  fft::forward(g, ker.comp(0), khat.data());
  for (std::size_t m = 0; m < g.node_count(); ++m)
    khat[m] *= double(g.node_count());

  Field out(g, f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c) {
    fft::forward(g, f.comp(c), spec.data());
    for (std::size_t m = 0; m < g.node_count(); ++m) spec[m] *= khat[m];
    fft::inverse(g, spec.data(), out.comp(c));
  }
  return out;
}

}  // namespace

Field mollify(const Field& f, double eps, const MacroDomain& dom) {
  require_same(f.grid(), dom.grid, "mollify");
  if (eps < 2.0 * dom.spacing())
    throw EpsilonTooSmall("mollifier unresolved: eps " + std::to_string(eps) +
                          " < 2 * spacing " + std::to_string(dom.spacing()));
  if (dom.kind == MacroDomain::Kind::torus)
    return mollify_torus_fft(f, eps, dom);
  return mollify_square_direct(f, eps, dom);
}

CutoffField cutoff(const MacroDomain& dom, double r) {
  CutoffField out;
  out.r = r;
  out.psi = Field(dom.grid, 1);
  out.in_sigma_r.assign(dom.nodes(), 0);
  out.in_sigma_2r.assign(dom.nodes(), 0);
  if (dom.kind == MacroDomain::Kind::torus) {
    for (std::size_t m = 0; m < dom.nodes(); ++m) {
      out.psi.at(0, m) = 1.0;
      out.in_sigma_r[m] = 1;
      out.in_sigma_2r[m] = 1;
    }
    out.max_grad_times_r = 0.0;
    return out;
  }
  if (r <= 2.0 * dom.spacing())
    throw RTooSmall("cutoff radius " + std::to_string(r) +
                    " must exceed 2 * spacing");
  Field ind(dom.grid, 1);
  for (std::size_t m = 0; m < dom.nodes(); ++m)
    ind.at(0, m) = dom.dist_to_boundary(m) >= 1.5 * r ? 1.0 : 0.0;
  out.psi = mollify_square_direct(ind, r, dom);
  for (std::size_t m = 0; m < dom.nodes(); ++m) {
    double v = out.psi.at(0, m);
    out.psi.at(0, m) = std::min(1.0, std::max(0.0, v));
    double d = dom.dist_to_boundary(m);
    out.in_sigma_r[m] = d > r ? 1 : 0;
    out.in_sigma_2r[m] = d > 2.0 * r ? 1 : 0;
  }
  double gmax = 0.0;
  for (int d = 0; d < dom.grid.dim; ++d) {
    Field dp = dom.derivative(out.psi, d);
    gmax = std::max(gmax, dp.max_abs());
  }
  out.max_grad_times_r = gmax * r;
  return out;
}

namespace {

struct SignedMode {
  int k;
  double weight;
};

// Nyquist index splits into +-n/2 at half weight; every other index maps
// to its signed wave number.
std::vector<SignedMode> signed_modes(int t, int n) {
  if (t == n / 2 && t != 0) return {{n / 2, 0.5}, {-n / 2, 0.5}};
  return {{wavenumber(t, n), 1.0}};
}

bool integral_inverse(double eps, long& m) {
  double inv = 1.0 / eps;
  long r = std::lround(inv);
  if (r >= 1 && std::fabs(inv - double(r)) < 1e-9) {
    m = r;
    return true;
  }
  return false;
}

// Accumulate amp * exp(2 pi i w . x) sampled at x = (j + offset)/N into the
// macro spectral array (the lattice aliases w into w mod N; the offset
// contributes a fixed phase from the true w).
void accumulate_wave(std::vector<cplx>& acc, const PeriodicGrid& macro,
                     double offset, const long* w, cplx amp) {
  const int N = macro.n;
  cplx phase = amp;
  std::size_t idx = 0;
  for (int d = 0; d < macro.dim; ++d) {
    long wm = ((w[d] % N) + N) % N;
    idx = idx * N + static_cast<std::size_t>(wm);
    if (offset != 0.0) {
      double ang = 2.0 * M_PI * double(w[d]) * offset / double(N);
      phase *= cplx(std::cos(ang), std::sin(ang));
    }
  }
  acc[idx] += phase;
}

}  // namespace

Field two_scale_eval(const Field& cell, double eps, int power,
                     const MacroDomain& dom, bool force_pointwise) {
  const PeriodicGrid& gc = cell.grid();
  const PeriodicGrid& gm = dom.grid;
  if (gc.dim != gm.dim) throw GridMismatch("two_scale_eval dims");
  if (!(eps > 0.0) || eps > 1.0)
    throw Error("two_scale_eval requires eps in (0, 1]");
  Field out(gm, cell.ncomp());
  long m = 0;
  if (!force_pointwise && integral_inverse(eps, m)) {
    long scale = 1;
    for (int p = 0; p < power; ++p) scale *= m;
    std::vector<cplx> spec(gc.node_count());
    std::vector<cplx> acc(gm.node_count());
    for (int c = 0; c < cell.ncomp(); ++c) {
      fft::forward(gc, cell.comp(c), spec.data());
      std::fill(acc.begin(), acc.end(), cplx(0.0));
      const int nc = gc.n;
      if (gc.dim == 2) {
        std::size_t mm = 0;
        for (int t0 = 0; t0 < nc; ++t0)
          for (int t1 = 0; t1 < nc; ++t1, ++mm) {
            cplx a = spec[mm];
            if (std::abs(a) < 1e-300) continue;
            for (const auto& s0 : signed_modes(t0, nc))
              for (const auto& s1 : signed_modes(t1, nc)) {
                long w[3] = {s0.k * scale, s1.k * scale, 0};
                accumulate_wave(acc, gm, dom.offset(), w,
                                a * s0.weight * s1.weight);
              }
          }
      } else {
        std::size_t mm = 0;
        for (int t0 = 0; t0 < nc; ++t0)
          for (int t1 = 0; t1 < nc; ++t1)
            for (int t2 = 0; t2 < nc; ++t2, ++mm) {
              cplx a = spec[mm];
              if (std::abs(a) < 1e-300) continue;
              for (const auto& s0 : signed_modes(t0, nc))
                for (const auto& s1 : signed_modes(t1, nc))
                  for (const auto& s2 : signed_modes(t2, nc)) {
                    long w[3] = {s0.k * scale, s1.k * scale, s2.k * scale};
                    accumulate_wave(acc, gm, dom.offset(), w,
                                    a * s0.weight * s1.weight * s2.weight);
                  }
            }
      }
      fft::inverse(gm, acc.data(), out.comp(c));
    }
    return out;
  }

  // General path: evaluate the interpolant pointwise.
  std::vector<cplx> spec(gc.node_count());
  for (int c = 0; c < cell.ncomp(); ++c) {
    fft::forward(gc, cell.comp(c), spec.data());
    parallel_for(dom.nodes(), [&](std::size_t node) {
      auto x = dom.coord(node);
      double t[3] = {0, 0, 0};
      double s = std::pow(1.0 / eps, power);
      for (int d = 0; d < gm.dim; ++d) {
        double v = x[d] * s;
        t[d] = v - std::floor(v);
      }
      out.at(c, node) = eval_trig(gc, spec.data(), t);
    });
  }
  return out;
}

Field two_scale_eval(const TwoScaleField& cell, double eps,
                     const MacroDomain& dom, bool force_pointwise) {
  const PeriodicGrid& gy = cell.gridY();
  const PeriodicGrid& gz = cell.gridZ();
  const PeriodicGrid& gm = dom.grid;
  Field out(gm, cell.ncomp());
  long m = 0;
  if (force_pointwise || !integral_inverse(eps, m)) {
    for (int c = 0; c < cell.ncomp(); ++c)
      parallel_for(dom.nodes(), [&](std::size_t node) {
        auto x = dom.coord(node);
        double y[3] = {0, 0, 0}, z[3] = {0, 0, 0};
        for (int d = 0; d < gm.dim; ++d) {
          double vy = x[d] / eps, vz = x[d] / (eps * eps);
          y[d] = vy - std::floor(vy);
          z[d] = vz - std::floor(vz);
        }
        out.at(c, node) = eval_two_scale_at(cell, c, y, z);
      });
    return out;
  }
  if (gy.dim != 2)
    throw Error("lattice two-scale evaluation implemented for 2d cells");

  const std::size_t ny = cell.ny();
  const std::size_t nz = cell.nz();
  std::vector<cplx> zspec(ny * nz);  // [ynode][zmode]
  std::vector<cplx> full(ny * nz);   // [ymode][zmode]
  std::vector<cplx> ybuf(ny), yspec(ny);
  std::vector<cplx> acc(gm.node_count());

  for (int c = 0; c < cell.ncomp(); ++c) {
    for (std::size_t yn = 0; yn < ny; ++yn)
      fft::forward(gz, cell.slice(c, yn), zspec.data() + yn * nz);
    for (std::size_t zm = 0; zm < nz; ++zm) {
      for (std::size_t yn = 0; yn < ny; ++yn) ybuf[yn] = zspec[yn * nz + zm];
      fft::forward_c(gy, ybuf.data(), yspec.data());
      for (std::size_t ym = 0; ym < ny; ++ym) full[ym * nz + zm] = yspec[ym];
    }

    std::fill(acc.begin(), acc.end(), cplx(0.0));
    const int nyn = gy.n, nzn = gz.n;
    std::size_t ym = 0;
    for (int ty0 = 0; ty0 < nyn; ++ty0)
      for (int ty1 = 0; ty1 < nyn; ++ty1, ++ym) {
        std::size_t zm = 0;
        for (int tz0 = 0; tz0 < nzn; ++tz0)
          for (int tz1 = 0; tz1 < nzn; ++tz1, ++zm) {
            cplx a = full[ym * nz + zm];
            if (std::abs(a) < 1e-300) continue;
            for (const auto& sy0 : signed_modes(ty0, nyn))
              for (const auto& sy1 : signed_modes(ty1, nyn))
                for (const auto& sz0 : signed_modes(tz0, nzn))
                  for (const auto& sz1 : signed_modes(tz1, nzn)) {
                    long w[3] = {sy0.k * m + sz0.k * m * m,
                                 sy1.k * m + sz1.k * m * m, 0};
                    accumulate_wave(acc, gm, dom.offset(), w,
                                    a * sy0.weight * sy1.weight * sz0.weight *
                                        sz1.weight);
                  }
          }
      }
    fft::inverse(gm, acc.data(), out.comp(c));
  }
  return out;
}

double eval_two_scale_at(const TwoScaleField& cell, int comp, const double* y,
                         const double* z) {
  const PeriodicGrid& gy = cell.gridY();
  const PeriodicGrid& gz = cell.gridZ();
  // evaluate the z-interpolant at z for every y node, then interpolate in y
  std::vector<double> vals(cell.ny());
  std::vector<cplx> zspec(cell.nz());
  for (std::size_t yn = 0; yn < cell.ny(); ++yn) {
    fft::forward(gz, cell.slice(comp, yn), zspec.data());
    vals[yn] = eval_trig(gz, zspec.data(), z);
  }
  std::vector<cplx> yspec(cell.ny());
  fft::forward(gy, vals.data(), yspec.data());
  return eval_trig(gy, yspec.data(), y);
}

}  // namespace rshom
