#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "rshom/errors.hpp"

namespace rshom {

/// Uniform periodic grid on the unit cube (0,1)^dim. Nodes sit at j/n,
/// j = 0 … n-1; the endpoint 1 is identified with 0. n must be a power of
/// two and at least 4.
struct PeriodicGrid {
  int dim = 2;
  int n = 0;  // points per dimension

  PeriodicGrid() = default;
  PeriodicGrid(int dim_, int n_) : dim(dim_), n(n_) { validate(); }

  void validate() const {
    if (dim < 2 || dim > 3) throw Error("grid dim must be 2 or 3");
    if (n < 4 || (n & (n - 1)) != 0)
      throw Error("points_per_dim must be a power of two >= 4");
  }

  double spacing() const { return 1.0 / n; }

  std::size_t node_count() const {
    std::size_t c = 1;
    for (int d = 0; d < dim; ++d) c *= static_cast<std::size_t>(n);
    return c;
  }

  // Row-major node index; axis 0 is slowest.
  std::size_t index(const std::array<int, 3>& idx) const {
    std::size_t r = 0;
    for (int d = 0; d < dim; ++d) r = r * n + static_cast<std::size_t>(idx[d]);
    return r;
  }

  std::array<int, 3> unindex(std::size_t node) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(node % n);
      node /= n;
    }
    return idx;
  }

  std::array<double, 3> coord(std::size_t node) const {
    auto idx = unindex(node);
    std::array<double, 3> x{0, 0, 0};
    for (int d = 0; d < dim; ++d) x[d] = idx[d] * spacing();
    return x;
  }

  bool operator==(const PeriodicGrid& o) const {
    return dim == o.dim && n == o.n;
  }
  bool operator!=(const PeriodicGrid& o) const { return !(*this == o); }
};

/// Signed wave number for spectral index t on an n-grid: t for t <= n/2,
/// t - n otherwise (so the Nyquist index maps to +n/2).
inline int wavenumber(int t, int n) { return t <= n / 2 ? t : t - n; }

inline void require_same(const PeriodicGrid& a, const PeriodicGrid& b,
                         const char* what) {
  if (a != b) throw GridMismatch(std::string("grid mismatch in ") + what);
}

}  // namespace rshom
