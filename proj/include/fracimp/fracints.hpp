#pragma once

#include <Eigen/Core>

#include "fracimp/sampled.hpp"

namespace fracimp::fracops {

/// integral_lower^upper (upper - s)^c g(s) ds for kernel exponent
/// c in (-1, 0).  For weight_exponent = 0 each cell of g uses
/// piecewise-linear product integration against exact kernel moments, so the
/// result is exact to rounding for piecewise-linear g.  For w > 0 the
/// piecewise-linear object is the weighted view instead: the origin cell
/// carries both endpoint singularities inside one Gauss-Jacobi rule, the
/// kernel endpoint cell keeps its singular factor inside a Gauss-Jacobi
/// rule, and interior cells use Gauss-Legendre (all factors analytic there);
/// this route is exact up to rule error for pure power data.
Eigen::VectorXd singular_quad(double kernel_exponent,
                              const SampledFunction& g, double lower,
                              double upper, int origin_rule_points = 12);

/// Order-eta_int fractional integral of f from its origin, evaluated at t:
///   (1/Gamma(eta_int)) integral_origin^t (t-r)^{eta_int-1} f(r) dr,
/// eta_int in (0, 1].
Eigen::VectorXd rl_integral(double eta_int, const SampledFunction& f,
                            double t);

/// Order-eta fractional derivative of f from its origin at t, computed as
/// d/dt of the (1-eta)-integral with a Richardson-extrapolated central
/// difference (step 1e-4 times the local mesh width).  Requires room for the
/// stencil on both sides of t.
Eigen::VectorXd rl_derivative(double eta, const SampledFunction& f, double t);

}  // namespace fracimp::fracops
