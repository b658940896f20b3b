#include "rshom/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace rshom {

namespace {

struct PlanKey {
  int dim, n, sign;
  bool operator<(const PlanKey& o) const {
    if (dim != o.dim) return dim < o.dim;
    if (n != o.n) return n < o.n;
    return sign < o.sign;
  }
};

// Plans are created once per (dim, n, direction), out-of-place and with
// FFTW_UNALIGNED so they can execute on any caller buffer. Plan creation is
// serialized; fftw_execute_dft on distinct arrays is thread-safe. Every
// execution stages the input through a thread-local scratch buffer so the
// out-of-place contract always holds.
fftw_plan get_plan(const PeriodicGrid& g, int sign) {
  static std::map<PlanKey, fftw_plan> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lk(mtx);
  PlanKey key{g.dim, g.n, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cplx> tin(g.node_count()), tout(g.node_count());
  auto* pin = reinterpret_cast<fftw_complex*>(tin.data());
  auto* pout = reinterpret_cast<fftw_complex*>(tout.data());
  fftw_plan plan;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (g.dim == 2)
    plan = fftw_plan_dft_2d(g.n, g.n, pin, pout, sign, flags);
  else
    plan = fftw_plan_dft_3d(g.n, g.n, g.n, pin, pout, sign, flags);
  cache[key] = plan;
  return plan;
}

thread_local std::vector<cplx> scratch;

void run_staged(const PeriodicGrid& g, int sign, const cplx* in, cplx* out) {
  fftw_plan plan = get_plan(g, sign);
  scratch.assign(in, in + g.node_count());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(scratch.data()),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

namespace fft {

void forward_c(const PeriodicGrid& g, const cplx* in, cplx* out) {
  run_staged(g, FFTW_FORWARD, in, out);
  double inv = 1.0 / static_cast<double>(g.node_count());
  for (std::size_t m = 0; m < g.node_count(); ++m) out[m] *= inv;
}

void inverse_c(const PeriodicGrid& g, const cplx* in, cplx* out) {
  run_staged(g, FFTW_BACKWARD, in, out);
}

void forward(const PeriodicGrid& g, const double* in, cplx* out) {
  fftw_plan plan = get_plan(g, FFTW_FORWARD);
  scratch.resize(g.node_count());
  for (std::size_t m = 0; m < g.node_count(); ++m) scratch[m] = in[m];
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(scratch.data()),
                   reinterpret_cast<fftw_complex*>(out));
  double inv = 1.0 / static_cast<double>(g.node_count());
  for (std::size_t m = 0; m < g.node_count(); ++m) out[m] *= inv;
}

void inverse(const PeriodicGrid& g, const cplx* in, double* out) {
  fftw_plan plan = get_plan(g, FFTW_BACKWARD);
  thread_local std::vector<cplx> obuf;
  obuf.resize(g.node_count());
  scratch.assign(in, in + g.node_count());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(scratch.data()),
                   reinterpret_cast<fftw_complex*>(obuf.data()));
  for (std::size_t m = 0; m < g.node_count(); ++m) out[m] = obuf[m].real();
}

}  // namespace fft

Spectrum to_spectrum(const Field& f) {
  Spectrum s(f.grid(), f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c)
    fft::forward(f.grid(), f.comp(c), s.comp(c));
  return s;
}

Field from_spectrum(const Spectrum& s) {
  Field f(s.grid(), s.ncomp());
  for (int c = 0; c < s.ncomp(); ++c)
    fft::inverse(s.grid(), s.comp(c), f.comp(c));
  return f;
}

namespace {

template <typename Fn>
void for_each_mode(const PeriodicGrid& g, Fn&& fn) {
  const int n = g.n;
  if (g.dim == 2) {
    std::size_t m = 0;
    for (int t0 = 0; t0 < n; ++t0)
      for (int t1 = 0; t1 < n; ++t1, ++m) {
        int k[3] = {wavenumber(t0, n), wavenumber(t1, n), 0};
        bool nyq = (t0 == n / 2) || (t1 == n / 2);
        fn(m, k, nyq);
      }
  } else {
    std::size_t m = 0;
    for (int t0 = 0; t0 < n; ++t0)
      for (int t1 = 0; t1 < n; ++t1)
        for (int t2 = 0; t2 < n; ++t2, ++m) {
          int k[3] = {wavenumber(t0, n), wavenumber(t1, n),
                      wavenumber(t2, n)};
          bool nyq = (t0 == n / 2) || (t1 == n / 2) || (t2 == n / 2);
          fn(m, k, nyq);
        }
  }
}

}  // namespace

void spectral_derivative(const PeriodicGrid& g, const cplx* in, cplx* out,
                         int axis) {
  for_each_mode(g, [&](std::size_t m, const int* k, bool nyq) {
    if (nyq) {
      out[m] = 0.0;
    } else {
      out[m] = in[m] * cplx(0.0, 2.0 * M_PI * k[axis]);
    }
  });
}

void spectral_inv_neg_laplacian(const PeriodicGrid& g, const cplx* in,
                                cplx* out) {
  for_each_mode(g, [&](std::size_t m, const int* k, bool) {
    double k2 = 0.0;
    for (int d = 0; d < g.dim; ++d) k2 += double(k[d]) * k[d];
    if (k2 == 0.0) {
      out[m] = 0.0;
    } else {
      out[m] = in[m] / (4.0 * M_PI * M_PI * k2);
    }
  });
}

void zero_nyquist(const PeriodicGrid& g, cplx* spec) {
  for_each_mode(g, [&](std::size_t m, const int*, bool nyq) {
    if (nyq) spec[m] = 0.0;
  });
}

void filter_nyquist(Field& f) {
  std::vector<cplx> spec(f.nodes());
  for (int c = 0; c < f.ncomp(); ++c) {
    fft::forward(f.grid(), f.comp(c), spec.data());
    zero_nyquist(f.grid(), spec.data());
    fft::inverse(f.grid(), spec.data(), f.comp(c));
  }
}

void filter_nyquist_z(TwoScaleField& f) {
  std::vector<cplx> spec(f.nz());
  for (int c = 0; c < f.ncomp(); ++c)
    for (std::size_t yn = 0; yn < f.ny(); ++yn) {
      fft::forward(f.gridZ(), f.slice(c, yn), spec.data());
      zero_nyquist(f.gridZ(), spec.data());
      fft::inverse(f.gridZ(), spec.data(), f.slice(c, yn));
    }
}

void leray_project(const PeriodicGrid& g, std::vector<cplx*> comps) {
  const int n = g.dim;
  for_each_mode(g, [&](std::size_t m, const int* k, bool) {
    double k2 = 0.0;
    for (int d = 0; d < n; ++d) k2 += double(k[d]) * k[d];
    if (k2 == 0.0) {
      for (int d = 0; d < n; ++d) comps[d][m] = 0.0;
      return;
    }
    cplx dot = 0.0;
    for (int d = 0; d < n; ++d) dot += double(k[d]) * comps[d][m];
    dot /= k2;
    for (int d = 0; d < n; ++d) comps[d][m] -= double(k[d]) * dot;
  });
}

Field spectral_derivative_field(const Field& f, int axis) {
  Field out(f.grid(), f.ncomp());
  std::vector<cplx> spec(f.nodes());
  for (int c = 0; c < f.ncomp(); ++c) {
    fft::forward(f.grid(), f.comp(c), spec.data());
    spectral_derivative(f.grid(), spec.data(), spec.data(), axis);
    fft::inverse(f.grid(), spec.data(), out.comp(c));
  }
  return out;
}

Field spectral_gradient(const Field& u) {
  const int n = u.grid().dim;
  Field out(u.grid(), n * u.ncomp());
  std::vector<cplx> spec(u.nodes()), dspec(u.nodes());
  for (int b = 0; b < u.ncomp(); ++b) {
    fft::forward(u.grid(), u.comp(b), spec.data());
    for (int j = 0; j < n; ++j) {
      spectral_derivative(u.grid(), spec.data(), dspec.data(), j);
      fft::inverse(u.grid(), dspec.data(), out.comp(c2(j, b, u.ncomp())));
    }
  }
  return out;
}

Field spectral_divergence_flux(const Field& flux) {
  const PeriodicGrid& g = flux.grid();
  const int n = g.dim;
  Field out(g, n);
  std::vector<cplx> spec(g.node_count()), acc(g.node_count());
  for (int a = 0; a < n; ++a) {
    std::fill(acc.begin(), acc.end(), cplx(0.0));
    for (int i = 0; i < n; ++i) {
      fft::forward(g, flux.comp(c2(i, a, n)), spec.data());
      spectral_derivative(g, spec.data(), spec.data(), i);
      for (std::size_t m = 0; m < g.node_count(); ++m) acc[m] += spec[m];
    }
    fft::inverse(g, acc.data(), out.comp(a));
  }
  return out;
}

double eval_trig(const PeriodicGrid& g, const cplx* spec, const double* point) {
  const int n = g.n;
  double acc = 0.0;
  for_each_mode(g, [&](std::size_t m, const int* k, bool) {
    cplx a = spec[m];
    if (std::abs(a) == 0.0) return;
    // Nyquist convention: index n/2 is evaluated as cos(pi n x) on that
    // axis, which matches the stored exponential at every grid node.
    double phase = 0.0;
    int nyq_axes[3];
    int nnyq = 0;
    for (int d = 0; d < g.dim; ++d) {
      if (k[d] == n / 2 && k[d] != 0) {
        nyq_axes[nnyq++] = d;
      } else {
        phase += double(k[d]) * point[d];
      }
    }
    double factor = 1.0;
    for (int q = 0; q < nnyq; ++q)
      factor *= std::cos(M_PI * n * point[nyq_axes[q]]);
    double ang = 2.0 * M_PI * phase;
    acc += factor * (a.real() * std::cos(ang) - a.imag() * std::sin(ang));
  });
  return acc;
}

double spectral_power(const PeriodicGrid& g, const cplx* spec) {
  double s = 0.0;
  for (std::size_t m = 0; m < g.node_count(); ++m) s += std::norm(spec[m]);
  return s;
}

}  // namespace rshom
