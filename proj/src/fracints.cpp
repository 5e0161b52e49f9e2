#include "fracimp/fracints.hpp"

#include <algorithm>
#include <cmath>

#include "fracimp/errors.hpp"
#include "fracimp/quadrature.hpp"
#include "fracimp/special.hpp"

namespace fracimp {

namespace {

constexpr double kSpanSlack = 1e-12;

// index i of the cell [nodes[i], nodes[i+1]] containing t; t below the
// first node maps to cell 0, t at or past the last node to the last cell
std::size_t cell_left_of(const std::vector<double>& nodes, double t) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  if (it == nodes.begin()) return 0;
  std::size_t i = static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(i, nodes.size() >= 2 ? nodes.size() - 2 : std::size_t{0});
}

}  // namespace

void SampledFunction::validate() const {
  if (nodes.empty() || nodes.size() != values.size())
    throw DimensionMismatch("SampledFunction: nodes/values length mismatch");
  if (!(weight_exponent >= 0.0 && weight_exponent < 1.0))
    throw OrderOutOfRange("SampledFunction: weight exponent outside [0,1)");
  if (!(nodes.front() > origin))
    throw BadPartition("SampledFunction: first node must lie past origin");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i] < nodes[i + 1]))
      throw BadPartition("SampledFunction: nodes must increase strictly");
  const auto dim0 = values.front().size();
  for (const auto& v : values)
    if (v.size() != dim0)
      throw DimensionMismatch("SampledFunction: ragged value dimensions");
  if (weighted_limit && weighted_limit->size() != dim0)
    throw DimensionMismatch("SampledFunction: origin limit dimension");
}

// piecewise-linear interpolation of the lifted data
//   g~(t) = (t - origin)^w g(t),
// which is finite at the origin for the singularity class this type
// declares; raw values stay untouched
Eigen::VectorXd SampledFunction::weighted_eval(double t) const {
  const double w = weight_exponent;
  auto lift = [&](std::size_t i) -> Eigen::VectorXd {
    if (w == 0.0) return values[i];
    return std::pow(nodes[i] - origin, w) * values[i];
  };
  if (t < origin - kSpanSlack || t > nodes.back() + kSpanSlack)
    throw TimeOutsideWindow("SampledFunction: query outside sampled span");
  t = std::clamp(t, origin, nodes.back());
  if (t <= nodes.front()) {
    if (weighted_limit) {
      // interpolate between the recorded origin limit and the first node
      double lam = (t - origin) / (nodes.front() - origin);
      return (1.0 - lam) * (*weighted_limit) + lam * lift(0);
    }
    if (nodes.size() == 1) return lift(0);
    double lam = (t - nodes[0]) / (nodes[1] - nodes[0]);
    return (1.0 - lam) * lift(0) + lam * lift(1);
  }
  std::size_t i = cell_left_of(nodes, t);
  if (i + 1 == nodes.size()) return lift(i);
  double lam = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return (1.0 - lam) * lift(i) + lam * lift(i + 1);
}

Eigen::VectorXd SampledFunction::eval(double t) const {
  const double w = weight_exponent;
  if (w == 0.0) return weighted_eval(t);
  if (!(t > origin))
    throw TimeOutsideWindow(
        "SampledFunction: value is singular at the origin; use the weighted "
        "view");
  return std::pow(t - origin, -w) * weighted_eval(t);
}

namespace fracops {

namespace {

// shared engine: integral_lower^upper (upper - s)^c g(s) ds for
// c in (-1, 0].  Cell treatment:
//   - cell starting at the origin of a weighted g: Gauss-Jacobi with the
//     full endpoint weight, integrating the lifted data (exact when the
//     lifted data is polynomial on the cell);
//   - remaining cells, weight_exponent = 0: product integration against
//     exact kernel moments of the piecewise-linear data (so polynomial
//     data of degree <= 1 is integrated exactly up to rounding);
//   - remaining cells, weight_exponent > 0: the lifted data is the
//     piecewise-linear object, so integrate (upper-s)^c g(s) with g from
//     the weighted view; the kernel endpoint cell keeps its singular
//     factor inside a Gauss-Jacobi rule, all other cells use
//     Gauss-Legendre (both factors analytic there).
Eigen::VectorXd kernel_integral(double c, const SampledFunction& g,
                                double lower, double upper, int gj_points) {
  g.validate();
  if (!(upper > lower)) throw EmptyInterval("singular integral: upper <= lower");
  if (lower < g.origin - kSpanSlack || upper > g.nodes.back() + kSpanSlack)
    throw TimeOutsideWindow("singular integral: range outside sampled span");

  std::vector<double> brk;
  brk.push_back(lower);
  for (double x : g.nodes)
    if (x > lower + kSpanSlack && x < upper - kSpanSlack) brk.push_back(x);
  brk.push_back(upper);

  const double w = g.weight_exponent;
  const bool singular_origin = w > 0.0 && lower <= g.origin + kSpanSlack;

  Eigen::VectorXd total = Eigen::VectorXd::Zero(g.dim());
  std::size_t first_pl = 0;
  if (singular_origin) {
    first_pl = 1;
    const double hi = brk[1];
    const bool kernel_at_edge = hi >= upper - kSpanSlack && c < 0.0;
    auto rule = quad::jacobi_cell_rule(gj_points, kernel_at_edge ? c : 0.0,
                                       -w, lower, hi);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      double s = rule.nodes[k];
      double smooth = kernel_at_edge ? 1.0 : std::pow(upper - s, c);
      total += rule.weights[k] * smooth * g.weighted_eval(s);
    }
  }

  for (std::size_t i = first_pl; i + 1 < brk.size(); ++i) {
    const double x0 = brk[i];
    const double x1 = brk[i + 1];
    if (w > 0.0) {
      const bool kernel_at_edge = x1 >= upper - kSpanSlack && c < 0.0;
      if (kernel_at_edge) {
        auto rule = quad::jacobi_cell_rule(gj_points, c, 0.0, x0, x1);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
          total += rule.weights[k] * g.eval(rule.nodes[k]);
      } else {
        const auto& gl = quad::gauss_legendre(15);
        const double h = 0.5 * (x1 - x0);
        const double mid = 0.5 * (x1 + x0);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
          double s = mid + h * gl.nodes[k];
          total += h * gl.weights[k] * std::pow(upper - s, c) * g.eval(s);
        }
      }
      continue;
    }
    Eigen::VectorXd g0 = g.weighted_eval(x0);
    Eigen::VectorXd g1 = g.weighted_eval(x1);
    if (c == 0.0) {
      total += 0.5 * (x1 - x0) * (g0 + g1);
      continue;
    }
    auto m = quad::power_kernel_moments(c, upper, x0, x1);
    Eigen::VectorXd slope = (g1 - g0) / (x1 - x0);
    total += m.m0 * g0 + m.m1 * slope;
  }
  if (!total.allFinite())
    throw QuadratureFailure("singular integral: non-finite result");
  return total;
}

}  // namespace

Eigen::VectorXd singular_quad(double kernel_exponent, const SampledFunction& g,
                              double lower, double upper,
                              int origin_rule_points) {
  if (!(kernel_exponent > -1.0 && kernel_exponent < 0.0))
    throw OrderOutOfRange("singular_quad: kernel exponent outside (-1, 0)");
  return kernel_integral(kernel_exponent, g, lower, upper, origin_rule_points);
}

Eigen::VectorXd rl_integral(double eta_int, const SampledFunction& f,
                            double t) {
  if (!(eta_int > 0.0 && eta_int <= 1.0))
    throw OrderOutOfRange("rl_integral: order outside (0, 1]");
  if (!(t > f.origin))
    throw TimeOutsideWindow("rl_integral: time not past the origin");
  return kernel_integral(eta_int - 1.0, f, f.origin, t, 12) /
         specfun::gamma_fn(eta_int);
}

Eigen::VectorXd rl_derivative(double eta, const SampledFunction& f, double t) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("rl_derivative: order outside (0, 1)");
  f.validate();
  if (!(t > f.origin))
    throw TimeOutsideWindow("rl_derivative: time not past the origin");

  // outer d/dt of the (1-eta)-integral: central difference with step tied
  // to the local mesh width, Richardson-extrapolated once
  std::size_t i = cell_left_of(f.nodes, t);
  double width;
  if (f.nodes.size() == 1) {
    width = f.nodes[0] - f.origin;
  } else if (t <= f.nodes.front()) {
    width = f.nodes.front() - f.origin;
  } else {
    width = f.nodes[i + 1 < f.nodes.size() ? i + 1 : i] -
            f.nodes[i + 1 < f.nodes.size() ? i : i - 1];
  }
  const double h = 1e-4 * width;
  if (!(t - h > f.origin))
    throw StencilUnderflow("rl_derivative: time too close to the origin");
  if (t + h > f.nodes.back() + kSpanSlack)
    throw StencilUnderflow("rl_derivative: stencil leaves the sampled span");

  auto G = [&](double x) { return rl_integral(1.0 - eta, f, x); };
  Eigen::VectorXd d_h = (G(t + h) - G(t - h)) / (2.0 * h);
  Eigen::VectorXd d_h2 = (G(t + 0.5 * h) - G(t - 0.5 * h)) / h;
  Eigen::VectorXd out = (4.0 * d_h2 - d_h) / 3.0;
  if (!out.allFinite())
    throw QuadratureFailure("rl_derivative: non-finite stencil value");
  return out;
}

}  // namespace fracops
}  // namespace fracimp
