#include "fracimp/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fracimp/errors.hpp"
#include "fracimp/quadrature.hpp"

namespace fracimp::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = 3.14159265358979323846;

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

// Kahan-compensated accumulator.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    double y = v - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

struct SeriesResult {
  double value = 0.0;
  bool converged = false;  // terms decayed below threshold within the cap
  bool trusted = false;    // cancellation estimate within target
};

// Power series for E_{eta,beta}(w) with running |term| tally.  The result
// is trusted only if rounding of the largest terms cannot contaminate the
// sum beyond ~1e-12 relative.
SeriesResult ml_series(double eta, double beta, double w) {
  SeriesResult out;
  Kahan sum;
  double asum = 0.0;
  const int kmax = 260;
  const double lw = std::log(std::abs(w));
  int small_terms = 0;
  for (int k = 0; k <= kmax; ++k) {
    double term;
    if (k == 0) {
      term = reciprocal_gamma(beta);
    } else {
      double lt = k * lw - std::lgamma(eta * k + beta);
      if (lt > 700.0) return out;  // would overflow; not usable
      term = std::exp(lt);
      if (w < 0.0 && (k & 1)) term = -term;
    }
    sum.add(term);
    asum += std::abs(term);
    if (k > 2 && std::abs(term) <= kEps * std::abs(sum.sum)) {
      if (++small_terms >= 3) {
        out.converged = true;
        break;
      }
    } else {
      small_terms = 0;
    }
  }
  out.value = sum.sum;
  if (out.converged) {
    double err = 8.0 * kEps * asum;
    out.trusted = err <= 1e-12 * std::abs(out.value) + 1e-306;
  }
  return out;
}

// Real-line integrand of the Laplace-inversion representation, valid for
// 0 < eta < 1 and 0 < beta <= 1:
//   E_{eta,beta}(z) = [residue for z > 0] + integral_0^inf K(r) dr
double ml_integrand(double eta, double beta, double z, double r) {
  double num = r * std::sin(kPi * (1.0 - beta)) -
               z * std::sin(kPi * (1.0 - beta + eta));
  double den = r * r - 2.0 * r * z * std::cos(kPi * eta) + z * z;
  double pw = (beta == 1.0) ? 1.0 : std::pow(r, (1.0 - beta) / eta);
  return pw * std::exp(-std::pow(r, 1.0 / eta)) * num / (kPi * eta * den);
}

double ml_global_base(double eta, double beta, double z) {
  // beta in (0,1], z != 0, 0 < eta < 1.
  const double R = std::pow(46.0, eta);
  std::vector<double> brk;
  brk.push_back(0.0);
  // geometric grading toward 0 resolves the algebraic endpoint behavior
  for (int k = 36; k >= 1; --k) brk.push_back(R * std::pow(0.62, k));
  brk.push_back(R);
  // refine around the minimum of the denominator when it is sharp
  double c = std::cos(kPi * eta);
  double rstar = (z < 0.0) ? -z * (-c) : z * c;  // location of the dip
  if (rstar > 0.0 && std::abs(c) > 0.5 && rstar < R) {
    for (double f : {0.5, 0.7, 0.85, 1.0, 1.15, 1.4, 1.9})
      if (rstar * f < R) brk.push_back(rstar * f);
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
  }
  const auto& gl = quad::gauss_legendre(15);
  Kahan total;
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    double lo = brk[i], hi = brk[i + 1];
    double h = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
      double r = mid + h * gl.nodes[g];
      total.add(h * gl.weights[g] * ml_integrand(eta, beta, z, r));
    }
  }
  double val = total.sum;
  if (z > 0.0) {
    double ex = std::pow(z, 1.0 / eta);
    if (ex > 700.0)
      throw AccuracyLoss("mittag_leffler: argument " + std::to_string(z) +
                         " overflows the exponential branch");
    val += (1.0 / eta) * std::pow(z, (1.0 - beta) / eta) * std::exp(ex);
  }
  return val;
}

double ml_global(double eta, double beta, double w) {
  if (eta >= 1.0 || eta <= 0.0)
    throw AccuracyLoss(
        "mittag_leffler: series not convergent to target accuracy and the "
        "integral branch requires eta in (0,1); eta=" +
        std::to_string(eta));
  // lower beta into (0,1] with E_{a,b}(w) = (E_{a,b-a}(w) - 1/Gamma(b-a))/w,
  // applied top-down; stable because |w| is large on this branch.
  int j = (beta > 1.0) ? static_cast<int>(std::ceil((beta - 1.0) / eta - 1e-12))
                       : 0;
  double b0 = beta - j * eta;
  double val = ml_global_base(eta, b0, w);
  for (int i = 1; i <= j; ++i) {
    double bi = b0 + i * eta;
    val = (val - reciprocal_gamma(bi - eta)) / w;
  }
  return val;
}

}  // namespace

double gamma_fn(double x) {
  if (is_nonpositive_integer(x))
    throw OrderOutOfRange("gamma_fn: pole at x=" + std::to_string(x));
  return std::tgamma(x);
}

double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  if (x > 170.0) return 0.0;  // underflow of 1/Gamma
  return 1.0 / std::tgamma(x);
}

double beta_fn(double a, double b) {
  if (a <= 0.0 || b <= 0.0)
    throw OrderOutOfRange("beta_fn: requires a, b > 0");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double mittag_leffler(double eta, double w) {
  return mittag_leffler2(eta, 1.0, w);
}

double mittag_leffler2(double eta, double beta, double w) {
  if (!(eta > 0.0) || eta > 1.0)
    throw OrderOutOfRange("mittag_leffler2: eta must lie in (0,1], got " +
                          std::to_string(eta));
  if (!(beta > 0.0))
    throw OrderOutOfRange("mittag_leffler2: beta must be positive, got " +
                          std::to_string(beta));
  if (w == 0.0) return reciprocal_gamma(beta);
  if (eta == 1.0) {
    if (beta == 1.0) return std::exp(w);
    if (beta == 2.0) return std::expm1(w) / w;
    SeriesResult s = ml_series(1.0, beta, w);
    if (s.trusted) return s.value;
    throw AccuracyLoss("mittag_leffler2: eta=1 series unreliable at w=" +
                       std::to_string(w));
  }
  SeriesResult s = ml_series(eta, beta, w);
  if (s.trusted) return s.value;
  return ml_global(eta, beta, w);
}

std::complex<double> mittag_leffler2_complex(double eta, double beta,
                                             std::complex<double> w) {
  if (!(eta > 0.0) || eta > 1.0)
    throw OrderOutOfRange("mittag_leffler2_complex: eta must lie in (0,1]");
  if (!(beta > 0.0))
    throw OrderOutOfRange("mittag_leffler2_complex: beta must be positive");
  if (w == std::complex<double>(0.0, 0.0)) return {reciprocal_gamma(beta), 0.0};
  if (std::abs(w.imag()) < 1e-14 * std::max(1.0, std::abs(w.real())))
    return {mittag_leffler2(eta, beta, w.real()), 0.0};
  std::complex<double> sum(reciprocal_gamma(beta), 0.0);
  double asum = std::abs(sum);
  const double lw = std::log(std::abs(w));
  const double arg = std::arg(w);
  int small_terms = 0;
  for (int k = 1; k <= 300; ++k) {
    double lt = k * lw - std::lgamma(eta * k + beta);
    if (lt > 690.0)
      throw AccuracyLoss("mittag_leffler2_complex: series overflow");
    std::complex<double> term = std::polar(std::exp(lt), k * arg);
    sum += term;
    asum += std::abs(term);
    if (std::abs(term) <= kEps * std::abs(sum)) {
      if (++small_terms >= 3) {
        if (8.0 * kEps * asum <= 1e-10 * std::abs(sum) + 1e-306) return sum;
        throw AccuracyLoss(
            "mittag_leffler2_complex: cancellation beyond target at |w|=" +
            std::to_string(std::abs(w)) +
            "; use a spectral or symmetric generator");
      }
    } else {
      small_terms = 0;
    }
  }
  throw AccuracyLoss("mittag_leffler2_complex: series did not converge");
}

double mittag_leffler2_derivative(double eta, double beta, double w) {
  if (!(eta > 0.0) || eta > 1.0 || !(beta > 0.0))
    throw OrderOutOfRange("mittag_leffler2_derivative: bad parameters");
  Kahan sum;
  double asum = 0.0;
  const double lw = (w == 0.0) ? 0.0 : std::log(std::abs(w));
  int small_terms = 0;
  for (int k = 1; k <= 260; ++k) {
    double lt = (k - 1) * lw - std::lgamma(eta * k + beta) + std::log((double)k);
    if (lt > 700.0)
      throw AccuracyLoss("mittag_leffler2_derivative: overflow in series");
    double term = std::exp(lt);
    if (w < 0.0 && !(k & 1)) term = -term;
    sum.add(term);
    asum += std::abs(term);
    if (w == 0.0) break;
    if (k > 2 && std::abs(term) <= kEps * std::abs(sum.sum)) {
      if (++small_terms >= 3) break;
    } else {
      small_terms = 0;
    }
  }
  if (8.0 * kEps * asum > 1e-8 * std::abs(sum.sum) + 1e-306)
    throw AccuracyLoss("mittag_leffler2_derivative: cancellation at w=" +
                       std::to_string(w));
  return sum.sum;
}

double stable_density(double eta, double y) {
  if (!(eta > 0.0) || eta >= 1.0)
    throw OrderOutOfRange("stable_density: eta must lie in (0,1)");
  if (!(y > 0.0)) throw OrderOutOfRange("stable_density: y must be positive");
  Kahan sum;
  double asum = 0.0;
  const double ly = std::log(y);
  int small_terms = 0;
  bool converged = false;
  for (int n = 1; n <= 500; ++n) {
    double lt = -(n * eta + 1.0) * ly + std::lgamma(n * eta + 1.0) -
                std::lgamma(n + 1.0);
    if (lt > 700.0) break;  // hopeless cancellation; bail to caller
    double term = std::exp(lt) * std::sin(n * kPi * eta) / kPi;
    if (!(n & 1)) term = -term;  // (-1)^{n-1}
    sum.add(term);
    asum += std::abs(term);
    if (n > 3 && std::abs(term) <= 1e-16 * std::abs(sum.sum)) {
      if (++small_terms >= 3) {
        converged = true;
        break;
      }
    } else {
      small_terms = 0;
    }
  }
  if (!converged || 8.0 * kEps * asum > 1e-9 * std::abs(sum.sum) + 1e-306)
    throw AccuracyLoss("stable_density: series cancellation at y=" +
                       std::to_string(y));
  return sum.sum;
}

// Bromwich-type evaluation on the vertical line through the real saddle
// sstar of phi(sigma) = sigma - theta sigma^eta.  The phase is stationary
// at the saddle, so the quadrature sees a smooth, non-cancelling profile;
// the line is reached from the Hankel contour by a valid deformation for
// every eta in (0,1).
static double wright_contour(double eta, double theta) {
  const double sstar = std::pow(theta * eta, 1.0 / (1.0 - eta));
  const double X = sstar * (1.0 - eta) / eta;  // = -phi(sstar) > 0
  if (X > 700.0) return 0.0;                   // value underflows to zero
  // Gaussian core width from phi''(sstar) = (1-eta)/sstar
  const double w = std::sqrt(sstar / (1.0 - eta));
  const auto& gl = quad::gauss_legendre(15);
  Kahan total;
  double lo = 0.0;
  double step = std::min(w, 4.0) / 6.0;
  double re_phi = 0.0;
  for (int cell = 0; cell < 4000; ++cell) {
    double hi = lo + step;
    double h = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
      double v = mid + h * gl.nodes[g];
      std::complex<double> sigma(sstar, v);
      std::complex<double> phi = sigma - theta * std::pow(sigma, eta);
      // scale by e^{X} so the core is O(1); reattached below
      std::complex<double> val =
          std::pow(sigma, eta - 1.0) * std::exp(phi + X);
      total.add(h * gl.weights[g] * val.real());
      if (g + 1 == gl.nodes.size()) re_phi = phi.real() + X;
    }
    lo = hi;
    step = std::min(step * 1.3, 4.0);
    if (re_phi < -45.0 && lo > 3.0 * w) {
      double out = std::exp(-X) * total.sum / kPi;
      return std::max(out, 0.0);
    }
  }
  throw AccuracyLoss("wright_density: contour tail did not decay at theta=" +
                     std::to_string(theta));
}

double wright_density(double eta, double theta) {
  if (!(eta > 0.0) || eta >= 1.0)
    throw OrderOutOfRange("wright_density: eta must lie in (0,1), got " +
                          std::to_string(eta));
  if (theta < 0.0)
    throw OrderOutOfRange("wright_density: theta must be non-negative");
  if (theta == 0.0) return reciprocal_gamma(1.0 - eta);
  const double y = std::pow(theta, -1.0 / eta);
  const double pref = (1.0 / eta) * std::pow(theta, -1.0 - 1.0 / eta);
  try {
    double v = pref * stable_density(eta, y);
    return std::max(v, 0.0);
  } catch (const AccuracyLoss&) {
    return wright_contour(eta, theta);
  }
}

}  // namespace fracimp::specfun
