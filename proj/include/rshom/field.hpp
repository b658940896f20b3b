#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rshom/grid.hpp"

namespace rshom {

/**
 * Index conventions used throughout.
 *
 * Multi-component fields store one contiguous block per component
 * (component-major), nodes in row-major order inside each block.
 *
 * Component packings for dimension n:
 *   vector          u^a                c = a
 *   gradient        d_j u^b            c = j*n + b
 *   flux            F_i^a              c = i*n + a
 *   rank-4 tensor   a_ij^{ab}          c = ((i*n + j)*n + a)*n + b
 *   corrector       chi_k^{gb}         c = (g*n + k)*n + b      (value comp g)
 *   corrector pressure  pi_k^b         c = k*n + b
 *
 * A coefficient acts on a gradient as (A du)_i^a = a_ij^{ab} d_j u^b with
 * summation over j and b.
 */
class Field {
 public:
  Field() = default;
  Field(const PeriodicGrid& grid, int ncomp)
      : grid_(grid), ncomp_(ncomp),
        data_(grid.node_count() * static_cast<std::size_t>(ncomp), 0.0) {}

  const PeriodicGrid& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }
  std::size_t nodes() const { return grid_.node_count(); }

  double* comp(int c) { return data_.data() + nodes() * c; }
  const double* comp(int c) const { return data_.data() + nodes() * c; }
  std::span<double> comp_span(int c) { return {comp(c), nodes()}; }
  std::span<const double> comp_span(int c) const { return {comp(c), nodes()}; }

  double& at(int c, std::size_t node) { return data_[nodes() * c + node]; }
  double at(int c, std::size_t node) const { return data_[nodes() * c + node]; }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double mean(int c) const {
    double s = 0.0;
    const double* p = comp(c);
    for (std::size_t i = 0; i < nodes(); ++i) s += p[i];
    return s / static_cast<double>(nodes());
  }

  void subtract_mean(int c) {
    double m = mean(c);
    double* p = comp(c);
    for (std::size_t i = 0; i < nodes(); ++i) p[i] -= m;
  }

  void subtract_means() {
    for (int c = 0; c < ncomp_; ++c) subtract_mean(c);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

  /// Discrete L2 norm over the unit cell: sqrt(mean of sum of squares).
  double l2_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s / static_cast<double>(nodes()));
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  PeriodicGrid grid_;
  int ncomp_ = 0;
  std::vector<double> data_;
};

/// Field on the product cell Y x Z. Storage is component-major, then
/// y-node-major, with the z nodes of one (component, y) slice contiguous.
class TwoScaleField {
 public:
  TwoScaleField() = default;
  TwoScaleField(const PeriodicGrid& gy, const PeriodicGrid& gz, int ncomp)
      : gridY_(gy), gridZ_(gz), ncomp_(ncomp),
        data_(gy.node_count() * gz.node_count() *
                  static_cast<std::size_t>(ncomp),
              0.0) {}

  const PeriodicGrid& gridY() const { return gridY_; }
  const PeriodicGrid& gridZ() const { return gridZ_; }
  int ncomp() const { return ncomp_; }
  std::size_t ny() const { return gridY_.node_count(); }
  std::size_t nz() const { return gridZ_.node_count(); }

  double* slice(int c, std::size_t ynode) {
    return data_.data() + (c * ny() + ynode) * nz();
  }
  const double* slice(int c, std::size_t ynode) const {
    return data_.data() + (c * ny() + ynode) * nz();
  }

  double& at(int c, std::size_t ynode, std::size_t znode) {
    return data_[(c * ny() + ynode) * nz() + znode];
  }
  double at(int c, std::size_t ynode, std::size_t znode) const {
    return data_[(c * ny() + ynode) * nz() + znode];
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

  double l2_norm() const {  // mean-square over Y x Z
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s / static_cast<double>(ny() * nz()));
  }

 private:
  PeriodicGrid gridY_, gridZ_;
  int ncomp_ = 0;
  std::vector<double> data_;
};

// Rank-4 component index: a_ij^{ab}.
inline int c4(int i, int j, int a, int b, int n) {
  return ((i * n + j) * n + a) * n + b;
}
// Pair index: gradients d_j u^b, fluxes F_i^a.
inline int c2(int i, int a, int n) { return i * n + a; }
// Corrector chi_k^{gb}: value component g of the (k,b) cell problem.
inline int cchi(int g, int k, int b, int n) { return (g * n + k) * n + b; }
// Corrector gradient d_m chi_k^{gb}.
inline int cdchi(int m, int g, int k, int b, int n) {
  return ((m * n + g) * n + k) * n + b;
}
// Corrector pressure pi_k^b.
inline int cpi(int k, int b, int n) { return k * n + b; }
// Flux-corrector pressure potential q_{ik}^b.
inline int cq(int i, int k, int b, int n) { return (i * n + k) * n + b; }

}  // namespace rshom
