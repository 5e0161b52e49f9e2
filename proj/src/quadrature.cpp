#include "fracimp/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <algorithm>
#include <map>
#include <tuple>

#include "fracimp/errors.hpp"
#include "fracimp/special.hpp"

namespace fracimp::quad {

namespace {

// Golub-Welsch: eigen-decompose the symmetric tridiagonal recurrence matrix
// of the Jacobi polynomials; nodes are the eigenvalues, weights come from
// the first eigenvector components scaled by the weight-function mass.
Rule build_jacobi(int n, double a, double b) {
  if (n < 1) throw QuadratureFailure("gauss_jacobi: need at least one node");
  if (a <= -1.0 || b <= -1.0)
    throw QuadratureFailure("gauss_jacobi: exponents must exceed -1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double s = 2.0 * k + a + b;
    double diag;
    if (k == 0)
      diag = (b - a) / (a + b + 2.0);
    else
      diag = (b * b - a * a) / (s * (s + 2.0));
    J(k, k) = diag;
    if (k + 1 < n) {
      double off2;
      if (k == 0)
        off2 = 4.0 * (1.0 + a) * (1.0 + b) /
               ((a + b + 2.0) * (a + b + 2.0) * (a + b + 3.0));
      else {
        double kk = k + 1.0;  // recurrence index of beta_{k+1}
        double t = 2.0 * kk + a + b;
        off2 = 4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) /
               (t * t * (t + 1.0) * (t - 1.0));
      }
      double off = std::sqrt(off2);
      J(k, k + 1) = off;
      J(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw QuadratureFailure("gauss_jacobi: eigen decomposition failed");
  double mu0 = std::pow(2.0, a + b + 1.0) * specfun::beta_fn(a + 1.0, b + 1.0);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}

}  // namespace

const Rule& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

const Rule& gauss_jacobi(int n, double a, double b) {
  static std::map<std::tuple<int, double, double>, Rule> cache;
  auto key = std::make_tuple(n, a, b);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_jacobi(n, a, b)).first;
  return it->second;
}

WeightedCellRule jacobi_cell_rule(int n, double a, double b, double lo,
                                  double hi) {
  if (!(hi > lo)) throw EmptyInterval("jacobi_cell_rule: hi must exceed lo");
  const Rule& ref = gauss_jacobi(n, a, b);
  WeightedCellRule out;
  out.nodes.resize(n);
  out.weights.resize(n);
  double h = 0.5 * (hi - lo);
  double scale = std::pow(h, a + b + 1.0);
  for (int i = 0; i < n; ++i) {
    out.nodes[i] = lo + h * (ref.nodes[i] + 1.0);
    out.weights[i] = scale * ref.weights[i];
  }
  return out;
}

std::vector<double> graded_mesh(double lo, double hi, int n_cells,
                                double grading) {
  if (!(hi > lo)) throw EmptyInterval("graded_mesh: hi must exceed lo");
  if (n_cells < 1 || grading < 1.0)
    throw QuadratureFailure("graded_mesh: need n_cells >= 1 and grading >= 1");
  std::vector<double> x(n_cells + 1);
  for (int j = 0; j <= n_cells; ++j)
    x[j] = lo + (hi - lo) * std::pow(double(j) / n_cells, grading);
  x[n_cells] = hi;
  return x;
}

PowerMoments power_kernel_moments(double c, double t, double x0, double x1) {
  if (!(x1 > x0)) throw EmptyInterval("power_kernel_moments: empty cell");
  if (!(c > -2.0) || std::abs(c + 1.0) < 1e-12)
    throw QuadratureFailure("power_kernel_moments: exponent outside (-2,inf)\\{-1}");
  if (c < -1.0 && !(t > x1))
    throw QuadratureFailure(
        "power_kernel_moments: kernel not integrable up to the target");
  if (!(t >= x1))
    throw QuadratureFailure("power_kernel_moments: target inside the cell");
  double d0 = t - x0, d1 = t - x1;
  auto ip = [&](double e) {  // integral of (t-s)^{c+e-1} restated via e=c+1...
    return (std::pow(d0, e) - std::pow(d1, e)) / e;
  };
  double i0 = ip(c + 1.0);          // integral (t-s)^c ds
  double i1 = ip(c + 2.0);          // integral (t-s)^{c+1} ds
  return {i0, d0 * i0 - i1};        // second entry: integral (t-s)^c (s-x0) ds
}

double integrate_cells(const std::function<double(double)>& f,
                       const std::vector<double>& brk, int npts) {
  const Rule& gl = gauss_legendre(npts);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    double h = 0.5 * (brk[i + 1] - brk[i]);
    double mid = 0.5 * (brk[i + 1] + brk[i]);
    double cell = 0.0;
    for (std::size_t g = 0; g < gl.nodes.size(); ++g)
      cell += gl.weights[g] * f(mid + h * gl.nodes[g]);
    total += h * cell;
  }
  if (!std::isfinite(total))
    throw QuadratureFailure("integrate_cells: non-finite result");
  return total;
}

const std::vector<double>& halfline_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> u;
    u.push_back(0.0);
    u.push_back(1.0);
    // geometric clustering into both endpoints handles algebraic behavior
    // at theta = 0 and the mapped decay at infinity
    const double q = 0.72;
    const int K = 40;
    for (int k = K; k >= 0; --k) u.push_back(0.5 * std::pow(q, k));
    for (int k = 1; k <= K; ++k) u.push_back(1.0 - 0.5 * std::pow(q, k));
    // uniform overlay keeps mid-range features (densities peaking near
    // theta = 1) resolved
    for (int j = 1; j < 32; ++j) u.push_back(j / 32.0);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  }();
  return grid;
}

double integrate_halfline(const std::function<double(double)>& f, int npts) {
  auto g = [&](double u) {
    double om = 1.0 - u;
    double theta = u / om;
    return f(theta) / (om * om);
  };
  return integrate_cells(g, halfline_grid(), npts);
}

}  // namespace fracimp::quad
