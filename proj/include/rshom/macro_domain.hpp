#pragma once

#include <array>

#include "rshom/field.hpp"
#include "rshom/spectral.hpp"

namespace rshom {

/**
 * Macroscopic sample-point layout shared by the fine solvers, the smoothing
 * operators and the expansion assembly.
 *
 *  - torus: grid nodes j/N on the unit torus; derivatives are spectral.
 *  - square: cell centers (j + 1/2)/N of the unit square; derivatives are
 *    centered differences (one-sided second order at the boundary).
 */
struct MacroDomain {
  enum class Kind { torus, square };
  Kind kind = Kind::torus;
  PeriodicGrid grid;

  MacroDomain() = default;
  MacroDomain(Kind k, const PeriodicGrid& g) : kind(k), grid(g) {}
  static MacroDomain torus(int dim, int n) {
    return MacroDomain(Kind::torus, PeriodicGrid(dim, n));
  }
  static MacroDomain square(int dim, int n) {
    return MacroDomain(Kind::square, PeriodicGrid(dim, n));
  }

  std::size_t nodes() const { return grid.node_count(); }
  double spacing() const { return grid.spacing(); }
  double offset() const { return kind == Kind::square ? 0.5 : 0.0; }

  std::array<double, 3> coord(std::size_t m) const {
    auto idx = grid.unindex(m);
    std::array<double, 3> x{0, 0, 0};
    for (int d = 0; d < grid.dim; ++d)
      x[d] = (idx[d] + offset()) * spacing();
    return x;
  }

  double dist_to_boundary(std::size_t m) const {
    if (kind == Kind::torus) return 1e30;
    auto x = coord(m);
    double d = 1e30;
    for (int dd = 0; dd < grid.dim; ++dd)
      d = std::min({d, x[dd], 1.0 - x[dd]});
    return d;
  }

  Field derivative(const Field& f, int axis) const {
    if (kind == Kind::torus) return spectral_derivative_field(f, axis);
    // centered differences on the center lattice, one-sided at walls
    const int N = grid.n;
    const double h = spacing();
    Field out(grid, f.ncomp());
    const std::size_t stride = [&] {
      std::size_t s = 1;
      for (int d = grid.dim - 1; d > axis; --d) s *= N;
      return s;
    }();
    for (int c = 0; c < f.ncomp(); ++c)
      for (std::size_t m = 0; m < nodes(); ++m) {
        int i = grid.unindex(m)[axis];
        double v;
        if (i == 0)
          v = (-3.0 * f.at(c, m) + 4.0 * f.at(c, m + stride) -
               f.at(c, m + 2 * stride)) /
              (2.0 * h);
        else if (i == N - 1)
          v = (3.0 * f.at(c, m) - 4.0 * f.at(c, m - stride) +
               f.at(c, m - 2 * stride)) /
              (2.0 * h);
        else
          v = (f.at(c, m + stride) - f.at(c, m - stride)) / (2.0 * h);
        out.at(c, m) = v;
      }
    return out;
  }
};

}  // namespace rshom
