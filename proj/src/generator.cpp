#include "fracimp/generator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "fracimp/errors.hpp"
#include "fracimp/quadrature.hpp"
#include "fracimp/special.hpp"

namespace fracimp {

namespace {

constexpr double kSlack = 1e-12;
using cplx = std::complex<double>;

// the declared growth constant must dominate the sampled flow norm on the
// whole window; a violation here invalidates every bound downstream
void verify_bound(const Generator& A) {
  if (!(A.bound >= 1.0))
    throw HypothesisViolated(
        "generator: growth bound below 1 is impossible, the flow starts at "
        "the identity");
  if (!(A.horizon > 0.0))
    throw EmptyInterval("generator: horizon must be positive");
  const int K = 64;
  double worst = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double t = A.horizon * k / K;
    double nrm;
    if (A.kind == Generator::Kind::Spectral) {
      nrm = std::exp(A.eigenvalues.maxCoeff() * t);
    } else {
      Eigen::MatrixXd E = (t * A.matrix).exp();
      nrm = E.jacobiSvd().singularValues()(0);
    }
    worst = std::max(worst, nrm);
  }
  if (worst > A.bound * (1.0 + 1e-9))
    throw HypothesisViolated("generator: sampled flow norm " +
                             std::to_string(worst) +
                             " exceeds the declared bound " +
                             std::to_string(A.bound));
}

}  // namespace

Generator Generator::spectral(const Eigen::VectorXd& lambdas, double M,
                              double horizon) {
  if (lambdas.size() == 0)
    throw DimensionMismatch("generator: empty eigenvalue sequence");
  Generator A;
  A.kind = Kind::Spectral;
  A.eigenvalues = lambdas;
  A.bound = M;
  A.horizon = horizon;
  A.modal_real = true;
  A.values = lambdas.cast<cplx>();
  verify_bound(A);
  return A;
}

Generator Generator::dense(const Eigen::MatrixXd& M_, double M,
                           double horizon) {
  if (M_.rows() == 0 || M_.rows() != M_.cols())
    throw DimensionMismatch("generator: matrix must be square and nonempty");
  Generator A;
  A.kind = Kind::Dense;
  A.matrix = M_;
  A.bound = M;
  A.horizon = horizon;
  const double scale = 1.0 + M_.norm();
  if ((M_ - M_.transpose()).norm() <= 1e-13 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M_);
    if (es.info() != Eigen::Success)
      throw NotDiagonalizable("generator: symmetric eigensolver failed");
    A.modal_real = true;
    A.basis = es.eigenvectors().cast<cplx>();
    A.basis_inv = es.eigenvectors().transpose().cast<cplx>();
    A.values = es.eigenvalues().cast<cplx>();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M_);
    if (es.info() != Eigen::Success)
      throw NotDiagonalizable("generator: eigensolver failed");
    A.modal_real = false;
    A.basis = es.eigenvectors();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A.basis);
    if (!lu.isInvertible())
      throw NotDiagonalizable("generator: defective eigenbasis");
    A.basis_inv = lu.inverse();
    A.values = es.eigenvalues();
    double recon = (A.basis * A.values.asDiagonal() * A.basis_inv -
                    M_.cast<cplx>())
                       .norm();
    if (recon > 1e-8 * scale)
      throw NotDiagonalizable("generator: eigenbasis too ill-conditioned");
  }
  verify_bound(A);
  return A;
}

ControlMap ControlMap::identity(Eigen::Index n) {
  if (n <= 0) throw DimensionMismatch("control map: empty state space");
  ControlMap B;
  B.kind = Kind::Identity;
  B.n = n;
  B.bound = 1.0;
  return B;
}

ControlMap ControlMap::dense(const Eigen::MatrixXd& M_) {
  if (M_.rows() == 0 || M_.cols() == 0)
    throw DimensionMismatch("control map: empty matrix");
  ControlMap B;
  B.kind = Kind::Dense;
  B.matrix = M_;
  B.bound = M_.jacobiSvd().singularValues()(0);
  return B;
}

Eigen::VectorXd ControlMap::apply(const Eigen::VectorXd& u) const {
  if (u.size() != control_dim())
    throw DimensionMismatch("control map: control vector dimension");
  return kind == Kind::Identity ? u : matrix * u;
}

Eigen::VectorXd ControlMap::pinv_apply(const Eigen::VectorXd& v) const {
  if (v.size() != state_dim())
    throw DimensionMismatch("control map: state vector dimension");
  if (kind == Kind::Identity) return v;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(matrix);
  return cod.solve(v);
}

bool ControlMap::full_row_rank(double tol) const {
  if (kind == Kind::Identity) return true;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(matrix);
  cod.setThreshold(tol);
  return cod.rank() == matrix.rows();
}

Eigen::VectorXd semigroup_apply(const Generator& A, double t,
                                const Eigen::VectorXd& z) {
  if (z.size() != A.dim())
    throw DimensionMismatch("flow: state vector dimension");
  if (t < 0.0) throw TimeOutsideWindow("flow: negative time");
  if (A.kind == Generator::Kind::Spectral)
    return ((A.eigenvalues.array() * t).exp() * z.array()).matrix();
  return (t * A.matrix).exp() * z;
}

Eigen::VectorXd frac_operator_apply(const Generator& A, double eta, double t,
                                    const Eigen::VectorXd& z,
                                    FracRoute route) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("fractional flow: order outside (0, 1)");
  if (!(t > 0.0)) throw TimeOutsideWindow("fractional flow: time must be > 0");
  if (z.size() != A.dim())
    throw DimensionMismatch("fractional flow: state vector dimension");

  const double te = std::pow(t, eta);
  if (route == FracRoute::SpectralMl) {
    if (A.kind != Generator::Kind::Spectral)
      throw RouteUnavailable(
          "fractional flow: the modal closed form needs a spectral "
          "generator; use the density-integral route");
    Eigen::VectorXd out(z.size());
    for (Eigen::Index l = 0; l < z.size(); ++l)
      out(l) =
          specfun::mittag_leffler2(eta, eta, A.eigenvalues(l) * te) * z(l);
    return out;
  }

  // density-integral route:
  //   eta * integral_0^inf theta xi_eta(theta) T(t^eta theta) z dtheta
  // mapped onto (0,1) by theta = u/(1-u)
  const auto& grid = quad::halfline_grid();
  const auto& gl = quad::gauss_legendre(12);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(z.size());
  for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
    const double h = 0.5 * (grid[c + 1] - grid[c]);
    const double mid = 0.5 * (grid[c + 1] + grid[c]);
    for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
      const double u = mid + h * gl.nodes[g];
      const double theta = u / (1.0 - u);
      if (!(theta > 0.0)) continue;
      const double dens = specfun::wright_density(eta, theta);
      if (dens <= 0.0) continue;
      const double scale =
          h * gl.weights[g] * eta * theta * dens / ((1.0 - u) * (1.0 - u));
      if (A.kind == Generator::Kind::Spectral) {
        acc.array() +=
            scale * (A.eigenvalues.array() * (te * theta)).exp() * z.array();
      } else {
        acc += scale * ((te * theta) * A.matrix).exp() * z;
      }
    }
  }
  if (!acc.allFinite())
    throw QuadratureFailure(
        "fractional flow: density integral overflowed; the generator grows "
        "too fast for this route");
  return acc;
}

Eigen::VectorXd frac_operator_apply(const Generator& A, double eta, double t,
                                    const Eigen::VectorXd& z) {
  return frac_operator_apply(A, eta, t, z,
                             A.kind == Generator::Kind::Spectral
                                 ? FracRoute::SpectralMl
                                 : FracRoute::WrightIntegral);
}

std::complex<double> flow_kernel_P(double eta, cplx lambda, double X) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("flow kernel: order outside (0, 1)");
  if (X == 0.0) return 0.0;
  const double Xe = std::pow(X, eta);
  const cplx w = lambda * Xe;
  if (w.imag() == 0.0)
    return Xe * specfun::mittag_leffler2(eta, eta + 1.0, w.real());
  return Xe * specfun::mittag_leffler2_complex(eta, eta + 1.0, w);
}

std::complex<double> flow_kernel_Q(double eta, cplx lambda, double X) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("flow kernel: order outside (0, 1)");
  if (X == 0.0) return 0.0;
  const double Xe = std::pow(X, eta);
  const cplx w = lambda * Xe;
  if (w.imag() == 0.0)
    return X * Xe * specfun::mittag_leffler2(eta, eta + 2.0, w.real());
  return X * Xe * specfun::mittag_leffler2_complex(eta, eta + 2.0, w);
}

namespace {

// E_{eta,eta}(lambda X^eta), the smooth factor of the flow kernel
cplx flow_kernel_E(double eta, cplx lambda, double X) {
  const cplx w = lambda * std::pow(X, eta);
  if (w.imag() == 0.0)
    return specfun::mittag_leffler2(eta, eta, w.real());
  return specfun::mittag_leffler2_complex(eta, eta, w);
}

}  // namespace

Eigen::VectorXd flow_convolution(const Generator& A, double eta,
                                 const SampledFunction& f, double upper) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("flow convolution: order outside (0, 1)");
  f.validate();
  const Eigen::Index n = A.dim();
  if (f.dim() != n)
    throw DimensionMismatch("flow convolution: state dimension");
  const double lower = f.origin;
  if (!(upper > lower))
    throw EmptyInterval("flow convolution: empty time window");
  if (upper > f.nodes.back() + kSlack)
    throw TimeOutsideWindow("flow convolution: window exceeds sampled span");

  const bool spectral = A.kind == Generator::Kind::Spectral;

  // modal coordinates of the data, complex parts stacked as a 2n-vector so
  // the sampled-function interpolation machinery is reused verbatim
  SampledFunction modal;
  modal.origin = f.origin;
  modal.nodes = f.nodes;
  modal.weight_exponent = f.weight_exponent;
  auto to_modal = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXcd m = spectral ? v.cast<cplx>().eval()
                                  : (A.basis_inv * v.cast<cplx>()).eval();
    Eigen::VectorXd stacked(2 * n);
    stacked.head(n) = m.real();
    stacked.tail(n) = m.imag();
    return stacked;
  };
  modal.values.reserve(f.values.size());
  for (const auto& v : f.values) modal.values.push_back(to_modal(v));
  if (f.weighted_limit) modal.weighted_limit = to_modal(*f.weighted_limit);
  auto unstack = [&](const Eigen::VectorXd& s) -> Eigen::VectorXcd {
    return s.head(n) + cplx(0.0, 1.0) * s.tail(n);
  };

  std::vector<double> brk;
  brk.push_back(lower);
  for (double x : f.nodes)
    if (x > lower + kSlack && x < upper - kSlack) brk.push_back(x);
  brk.push_back(upper);

  const double w = f.weight_exponent;
  const bool singular_origin = w > 0.0;
  Eigen::VectorXcd totals = Eigen::VectorXcd::Zero(n);

  std::size_t first = 0;
  if (singular_origin) {
    first = 1;
    const double hi = brk[1];
    const bool kernel_at_edge = hi >= upper - kSlack;
    auto rule = quad::jacobi_cell_rule(12, kernel_at_edge ? eta - 1.0 : 0.0,
                                       -w, lower, hi);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double s = rule.nodes[k];
      const double delta = upper - s;
      const double kfac =
          kernel_at_edge ? 1.0 : std::pow(delta, eta - 1.0);
      Eigen::VectorXcd g = unstack(modal.weighted_eval(s));
      for (Eigen::Index l = 0; l < n; ++l)
        totals(l) += rule.weights[k] * kfac *
                     flow_kernel_E(eta, A.values(l), delta) * g(l);
    }
  }

  if (w > 0.0) {
    for (std::size_t i = first; i + 1 < brk.size(); ++i) {
      const double x0 = brk[i];
      const double x1 = brk[i + 1];
      const bool kernel_at_edge = x1 >= upper - kSlack;
      if (kernel_at_edge) {
        auto rule = quad::jacobi_cell_rule(12, eta - 1.0, 0.0, x0, x1);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          const double s = rule.nodes[k];
          Eigen::VectorXcd g = unstack(modal.eval(s));
          for (Eigen::Index l = 0; l < n; ++l)
            totals(l) +=
                rule.weights[k] * flow_kernel_E(eta, A.values(l), upper - s) *
                g(l);
        }
      } else {
        const auto& gl = quad::gauss_legendre(15);
        const double h = 0.5 * (x1 - x0);
        const double mid = 0.5 * (x1 + x0);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
          const double s = mid + h * gl.nodes[k];
          const double delta = upper - s;
          const double kfac = std::pow(delta, eta - 1.0);
          Eigen::VectorXcd g = unstack(modal.eval(s));
          for (Eigen::Index l = 0; l < n; ++l)
            totals(l) += h * gl.weights[k] * kfac *
                         flow_kernel_E(eta, A.values(l), delta) * g(l);
        }
      }
    }
  } else {
    // piecewise-linear modal data against exact kernel moments; kernel
    // antiderivatives tabulated once per breakpoint
    const std::size_t nb = brk.size();
    Eigen::MatrixXcd Pb(n, nb), Qb(n, nb);
    for (std::size_t i = 0; i < nb; ++i) {
      const double delta = upper - brk[i];
      for (Eigen::Index l = 0; l < n; ++l) {
        Pb(l, i) = flow_kernel_P(eta, A.values(l), delta);
        Qb(l, i) = flow_kernel_Q(eta, A.values(l), delta);
      }
    }
    for (std::size_t i = 0; i + 1 < nb; ++i) {
      const double x0 = brk[i];
      const double x1 = brk[i + 1];
      Eigen::VectorXcd g0 = unstack(modal.weighted_eval(x0));
      Eigen::VectorXcd g1 = unstack(modal.weighted_eval(x1));
      Eigen::VectorXcd slope = (g1 - g0) / (x1 - x0);
      for (Eigen::Index l = 0; l < n; ++l) {
        const cplx m0 = Pb(l, i) - Pb(l, i + 1);
        const cplx m1 =
            -(x1 - x0) * Pb(l, i + 1) + Qb(l, i) - Qb(l, i + 1);
        totals(l) += m0 * g0(l) + m1 * slope(l);
      }
    }
  }

  Eigen::VectorXd out =
      spectral ? totals.real().eval() : (A.basis * totals).real().eval();
  if (!out.allFinite())
    throw QuadratureFailure("flow convolution: non-finite result");
  return out;
}

Eigen::VectorXd terminal_operator(const Generator& A, double eta,
                                  const SampledFunction& f,
                                  double terminal_time) {
  return flow_convolution(A, eta, f, terminal_time);
}

}  // namespace fracimp
