#pragma once

#include <complex>

namespace fracimp::specfun {

/// Gamma(x) for x not a non-positive integer.
double gamma_fn(double x);

/// 1/Gamma(x); returns 0 at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

/// Euler Beta B(a, b), a > 0, b > 0.
double beta_fn(double a, double b);

// =========================================================================
// Mittag-Leffler family, one and two parameters, real line.
//
// Evaluation strategy: power series with compensated summation and a
// running cancellation estimate; if the estimate exceeds the accuracy
// target the value is recomputed from the real-line Laplace-inversion
// integral (plus the exponential residue for positive arguments), after
// lowering the second parameter into (0,1] with the stable downward
// recursion E_{a,b}(w) = (E_{a,b-a}(w) - 1/Gamma(b-a)) / w.
// =========================================================================

/// E_eta(w), eta in (0,1].
double mittag_leffler(double eta, double w);

/// E_{eta,beta}(w), eta in (0,1], beta > 0.
double mittag_leffler2(double eta, double beta, double w);

/// Series evaluation for complex arguments (dense non-symmetric generators).
/// Throws AccuracyLoss outside the cancellation-safe envelope.
std::complex<double> mittag_leffler2_complex(double eta, double beta,
                                             std::complex<double> w);

/// d/dw E_{eta,beta}(w) by term-wise series with the same cancellation
/// guard; used only to seed least-squares inits.
double mittag_leffler2_derivative(double eta, double beta, double w);

// =========================================================================
// Wright-type subordination density.
//
//   xi_eta(theta) = (1/eta) theta^{-1-1/eta} varpi_eta(theta^{-1/eta})
//
// varpi_eta is summed from its alternating series (log-space terms); when
// the cancellation estimate fails, a saddle-point branch valid for large
// theta takes over.  Non-negative by construction in both branches.
// =========================================================================

/// One-sided stable series varpi_eta(y); throws AccuracyLoss when neither
/// branch applies.  Exposed for tests.
double stable_density(double eta, double y);

/// xi_eta(theta) for theta >= 0, eta in (0,1); xi_eta(0) = 1/Gamma(1-eta).
double wright_density(double eta, double theta);

}  // namespace fracimp::specfun
