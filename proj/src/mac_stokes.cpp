#include "rshom/mac_stokes.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "rshom/errors.hpp"

namespace rshom {

namespace {

// Small linear-expression algebra over the DOF vector: sum of weighted
// unknowns plus a constant carrying boundary-data contributions.
struct Expr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  void add(int dof, double w) {
    if (dof >= 0) terms.push_back({dof, w});
  }
  void add_const(double v) { constant += v; }
  void add_scaled(const Expr& e, double s) {
    for (auto& [d, w] : e.terms) terms.push_back({d, w * s});
    constant += e.constant * s;
  }
};

struct MacAssembler {
  const MacProblem& prob;
  int N;
  double h;

  // DOF layout: interior u1 faces, interior u2 faces, pressures, multiplier.
  int off_u2, off_p, total;

  explicit MacAssembler(const MacProblem& p) : prob(p), N(p.n), h(1.0 / p.n) {
    off_u2 = (N - 1) * N;
    off_p = off_u2 + N * (N - 1);
    total = off_p + N * N + 1;
  }

  // u1 face (i, j): x = (i h, (j + 1/2) h); boundary faces i = 0, N.
  int dof_u1(int i, int j) const {
    return (i <= 0 || i >= N) ? -1 : (i - 1) * N + j;
  }
  // u2 face (i, j): x = ((i + 1/2) h, j h); boundary faces j = 0, N.
  int dof_u2(int i, int j) const {
    return (j <= 0 || j >= N) ? -1 : off_u2 + i * (N - 1) + (j - 1);
  }
  int dof_p(int i, int j) const { return off_p + i * N + j; }

  double g_at(double x0, double x1, int comp) const {
    double x[3] = {x0, x1, 0.0};
    double g[2];
    prob.boundary(x, g);
    return g[comp];
  }

  double bval_u1(int i, int j) const { return g_at(i * h, (j + 0.5) * h, 0); }
  double bval_u2(int i, int j) const { return g_at((i + 0.5) * h, j * h, 1); }

  Expr u1_value(int i, int j) const {  // face value incl. boundary faces
    Expr e;
    int d = dof_u1(i, j);
    if (d >= 0)
      e.add(d, 1.0);
    else
      e.add_const(bval_u1(i, j));
    return e;
  }
  Expr u2_value(int i, int j) const {
    Expr e;
    int d = dof_u2(i, j);
    if (d >= 0)
      e.add(d, 1.0);
    else
      e.add_const(bval_u2(i, j));
    return e;
  }

  // Natural-location gradients.
  Expr d1u1_center(int ci, int cj) const {
    Expr e;
    e.add_scaled(u1_value(ci + 1, cj), 1.0 / h);
    e.add_scaled(u1_value(ci, cj), -1.0 / h);
    return e;
  }
  Expr d2u2_center(int ci, int cj) const {
    Expr e;
    e.add_scaled(u2_value(ci, cj + 1), 1.0 / h);
    e.add_scaled(u2_value(ci, cj), -1.0 / h);
    return e;
  }
  Expr d2u1_corner(int I, int J) const {
    // (u1(I,J) - u1(I,J-1))/h with ghost reflection through walls J = 0, N
    Expr e;
    if (J == 0) {
      e.add_scaled(u1_value(I, 0), 2.0 / h);
      e.add_const(-2.0 / h * g_at(I * h, 0.0, 0));
    } else if (J == N) {
      e.add_scaled(u1_value(I, N - 1), -2.0 / h);
      e.add_const(2.0 / h * g_at(I * h, 1.0, 0));
    } else {
      e.add_scaled(u1_value(I, J), 1.0 / h);
      e.add_scaled(u1_value(I, J - 1), -1.0 / h);
    }
    return e;
  }
  Expr d1u2_corner(int I, int J) const {
    Expr e;
    if (I == 0) {
      e.add_scaled(u2_value(0, J), 2.0 / h);
      e.add_const(-2.0 / h * g_at(0.0, J * h, 1));
    } else if (I == N) {
      e.add_scaled(u2_value(N - 1, J), -2.0 / h);
      e.add_const(2.0 / h * g_at(1.0, J * h, 1));
    } else {
      e.add_scaled(u2_value(I, J), 1.0 / h);
      e.add_scaled(u2_value(I - 1, J), -1.0 / h);
    }
    return e;
  }

  // Averaged cross derivatives.
  Expr d2u1_center(int ci, int cj) const {
    Expr e;
    for (int I : {ci, ci + 1})
      for (int J : {cj, cj + 1}) e.add_scaled(d2u1_corner(I, J), 0.25);
    return e;
  }
  Expr d1u2_center(int ci, int cj) const {
    Expr e;
    for (int I : {ci, ci + 1})
      for (int J : {cj, cj + 1}) e.add_scaled(d1u2_corner(I, J), 0.25);
    return e;
  }
  Expr d1u1_corner(int I, int J) const {
    Expr e;
    int c0 = std::max(I - 1, 0), c1 = std::min(I, N - 1);
    int d0 = std::max(J - 1, 0), d1 = std::min(J, N - 1);
    double w = 1.0 / ((c1 - c0 + 1) * (d1 - d0 + 1));
    for (int ci = c0; ci <= c1; ++ci)
      for (int cj = d0; cj <= d1; ++cj) e.add_scaled(d1u1_center(ci, cj), w);
    return e;
  }
  Expr d2u2_corner(int I, int J) const {
    Expr e;
    int c0 = std::max(I - 1, 0), c1 = std::min(I, N - 1);
    int d0 = std::max(J - 1, 0), d1 = std::min(J, N - 1);
    double w = 1.0 / ((c1 - c0 + 1) * (d1 - d0 + 1));
    for (int ci = c0; ci <= c1; ++ci)
      for (int cj = d0; cj <= d1; ++cj) e.add_scaled(d2u2_center(ci, cj), w);
    return e;
  }

  // Flux F_i^a at a location with the tensor sampled analytically there.
  Expr flux(int i, int a, const double* x, const Expr* grads) const {
    double tensor[16];
    prob.coeff(x, tensor);
    Expr e;
    for (int j = 0; j < 2; ++j)
      for (int b = 0; b < 2; ++b)
        e.add_scaled(grads[c2(j, b, 2)], tensor[c4(i, j, a, b, 2)]);
    return e;
  }

  void gradients_center(int ci, int cj, Expr* g) const {
    g[c2(0, 0, 2)] = d1u1_center(ci, cj);
    g[c2(0, 1, 2)] = d1u2_center(ci, cj);
    g[c2(1, 0, 2)] = d2u1_center(ci, cj);
    g[c2(1, 1, 2)] = d2u2_center(ci, cj);
  }
  void gradients_corner(int I, int J, Expr* g) const {
    g[c2(0, 0, 2)] = d1u1_corner(I, J);
    g[c2(0, 1, 2)] = d1u2_corner(I, J);
    g[c2(1, 0, 2)] = d2u1_corner(I, J);
    g[c2(1, 1, 2)] = d2u2_corner(I, J);
  }
};

}  // namespace

MacSolution mac_stokes_solve(const MacProblem& prob) {
  MacAssembler A(prob);
  const int N = A.N;
  const double h = A.h;

  // Compatibility: integral of h minus the boundary flux of g.
  {
    double vol = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        double x[3] = {(i + 0.5) * h, (j + 0.5) * h, 0.0};
        vol += prob.divergence(x) * h * h;
      }
    double flux = 0.0;
    for (int j = 0; j < N; ++j) {
      flux -= A.bval_u1(0, j) * h;
      flux += A.bval_u1(N, j) * h;
    }
    for (int i = 0; i < N; ++i) {
      flux -= A.bval_u2(i, 0) * h;
      flux += A.bval_u2(i, N) * h;
    }
    if (std::fabs(vol - flux) > 1e-10)
      throw Error("incompatible square-domain data: int h - bdry flux = " +
                  std::to_string(vol - flux));
  }

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(A.total);
  auto emit = [&](int row, const Expr& e, double data) {
    for (auto& [d, w] : e.terms) trips.emplace_back(row, d, w);
    rhs(row) = data - e.constant;
  };

  Expr gc[4], gl[4], gr[4];

  // Momentum-1 rows at interior u1 faces.
  for (int i = 1; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Expr row;
      double xr[3] = {(i + 0.5) * h, (j + 0.5) * h, 0.0};
      double xl[3] = {(i - 0.5) * h, (j + 0.5) * h, 0.0};
      A.gradients_center(i, j, gr);
      A.gradients_center(i - 1, j, gl);
      row.add_scaled(A.flux(0, 0, xr, gr), -1.0 / h);
      row.add_scaled(A.flux(0, 0, xl, gl), 1.0 / h);
      double xt[3] = {i * h, (j + 1) * h, 0.0};
      double xb[3] = {i * h, j * h, 0.0};
      A.gradients_corner(i, j + 1, gc);
      Expr ft = A.flux(1, 0, xt, gc);
      A.gradients_corner(i, j, gc);
      Expr fb = A.flux(1, 0, xb, gc);
      row.add_scaled(ft, -1.0 / h);
      row.add_scaled(fb, 1.0 / h);
      row.add(A.dof_p(i, j), 1.0 / h);
      row.add(A.dof_p(i - 1, j), -1.0 / h);
      double x[3] = {i * h, (j + 0.5) * h, 0.0};
      double f[2];
      prob.forcing(x, f);
      emit(A.dof_u1(i, j), row, f[0]);
    }

  // Momentum-2 rows at interior u2 faces.
  for (int i = 0; i < N; ++i)
    for (int j = 1; j < N; ++j) {
      Expr row;
      double xr[3] = {(i + 1) * h, j * h, 0.0};
      double xl[3] = {i * h, j * h, 0.0};
      A.gradients_corner(i + 1, j, gc);
      Expr fr = A.flux(0, 1, xr, gc);
      A.gradients_corner(i, j, gc);
      Expr fl = A.flux(0, 1, xl, gc);
      row.add_scaled(fr, -1.0 / h);
      row.add_scaled(fl, 1.0 / h);
      double xt[3] = {(i + 0.5) * h, (j + 0.5) * h, 0.0};
      double xb[3] = {(i + 0.5) * h, (j - 0.5) * h, 0.0};
      A.gradients_center(i, j, gr);
      A.gradients_center(i, j - 1, gl);
      row.add_scaled(A.flux(1, 1, xt, gr), -1.0 / h);
      row.add_scaled(A.flux(1, 1, xb, gl), 1.0 / h);
      row.add(A.dof_p(i, j), 1.0 / h);
      row.add(A.dof_p(i, j - 1), -1.0 / h);
      double x[3] = {(i + 0.5) * h, j * h, 0.0};
      double f[2];
      prob.forcing(x, f);
      emit(A.dof_u2(i, j), row, f[1]);
    }

  // Continuity rows at cells (multiplier column absorbs the mean defect).
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Expr row;
      row.add_scaled(A.u1_value(i + 1, j), 1.0 / h);
      row.add_scaled(A.u1_value(i, j), -1.0 / h);
      row.add_scaled(A.u2_value(i, j + 1), 1.0 / h);
      row.add_scaled(A.u2_value(i, j), -1.0 / h);
      row.add(A.total - 1, 1.0);
      double x[3] = {(i + 0.5) * h, (j + 0.5) * h, 0.0};
      emit(A.dof_p(i, j), row, prob.divergence(x));
    }

  // Pressure-mean row.
  {
    Expr row;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) row.add(A.dof_p(i, j), h * h);
    emit(A.total - 1, row, 0.0);
  }

  Eigen::SparseMatrix<double> K(A.total, A.total);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("sparse LU factorization failed on the MAC system");
  Eigen::VectorXd sol = lu.solve(rhs);

  MacSolution out;
  out.dom = MacroDomain::square(2, N);
  out.u = Field(out.dom.grid, 2);
  out.p = Field(out.dom.grid, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      std::size_t m = out.dom.grid.index({i, j, 0});
      auto face = [&](int dof, double bval) {
        return dof >= 0 ? sol(dof) : bval;
      };
      double u1l = face(A.dof_u1(i, j), A.bval_u1(i, j));
      double u1r = face(A.dof_u1(i + 1, j), A.bval_u1(i + 1, j));
      double u2b = face(A.dof_u2(i, j), A.bval_u2(i, j));
      double u2t = face(A.dof_u2(i, j + 1), A.bval_u2(i, j + 1));
      out.u.at(0, m) = 0.5 * (u1l + u1r);
      out.u.at(1, m) = 0.5 * (u2b + u2t);
      out.p.at(0, m) = sol(A.dof_p(i, j));
    }
  out.p.subtract_mean(0);
  out.compat_residual = std::fabs(sol(A.total - 1));
  out.solve_residual = (K * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
  return out;
}

}  // namespace rshom
