#pragma once

#include <functional>
#include <vector>

namespace fracimp::quad {

/// Nodes/weights on the reference interval [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n points (cached).
const Rule& gauss_legendre(int n);

/// Gauss-Jacobi rule with n points for the weight (1-x)^a (1+x)^b on [-1,1],
/// a, b > -1, computed by Golub-Welsch.  Cached per (n, a, b).
const Rule& gauss_jacobi(int n, double a, double b);

/// Nodes s_i and weights w_i such that
///   integral_lo^hi (hi-s)^a (s-lo)^b g(s) ds ~= sum_i w_i g(s_i),
/// exact for polynomial g up to degree 2n-1.
struct WeightedCellRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
WeightedCellRule jacobi_cell_rule(int n, double a, double b, double lo,
                                  double hi);

/// Graded mesh with N cells on [lo, hi]: x_j = lo + (hi-lo) (j/N)^g,
/// j = 0..N.  g = 1 gives the uniform mesh; g > 1 clusters toward lo.
std::vector<double> graded_mesh(double lo, double hi, int n_cells,
                                double grading);

/// Exact moments of the power kernel over one cell [x0, x1] with x1 <= t:
///   m0 = integral (t-s)^c ds,   m1 = integral (t-s)^c (s-x0) ds
/// for c in (-2, 0), c != -1.  Requires t > x1 when c <= -1.
struct PowerMoments {
  double m0;
  double m1;
};
PowerMoments power_kernel_moments(double c, double t, double x0, double x1);

/// Composite Gauss-Legendre over [lo, hi] on the given breakpoints.
double integrate_cells(const std::function<double(double)>& f,
                       const std::vector<double>& breakpoints, int npts = 12);

/// integral_0^inf f(theta) d(theta) via theta = u/(1-u) on a mesh graded
/// toward both endpoints.  f must decay at infinity.
double integrate_halfline(const std::function<double(double)>& f,
                          int npts = 12);

/// Breakpoints in u-space used by integrate_halfline; exposed so that
/// vector-valued integrands can share the same grid.
const std::vector<double>& halfline_grid();

}  // namespace fracimp::quad
