#pragma once

#include <Eigen/Core>
#include <complex>

#include "fracimp/sampled.hpp"

namespace fracimp {

/// Infinitesimal generator of the evolution family, either a dense real
/// matrix or a diagonal (spectral) operator given by its eigenvalue sequence
/// lambda_1..lambda_L in an orthonormal basis.  `bound` is the growth
/// constant M with sup_{0<=t<=horizon} |exp(tA)| <= M, checked numerically
/// at construction on a sampled grid.
///
/// Dense generators are eigendecomposed at construction (self-adjoint ones
/// in real arithmetic, general ones in complex arithmetic) so that
/// convolution kernels can be evaluated mode by mode.
struct Generator {
  enum class Kind { Dense, Spectral };

  Kind kind = Kind::Spectral;
  Eigen::MatrixXd matrix;       // Dense
  Eigen::VectorXd eigenvalues;  // Spectral: lambda_l, l = 1..L
  double bound = 1.0;           // M >= 1
  double horizon = 1.0;         // upper end of the time window
  double tau = 0.0;             // max flow-subinterval length (set later)

  // modal form: matrix = basis * diag(values) * basis_inv
  // (identity basis for the spectral kind)
  bool modal_real = true;
  Eigen::MatrixXcd basis;
  Eigen::MatrixXcd basis_inv;
  Eigen::VectorXcd values;

  Eigen::Index dim() const {
    return kind == Kind::Spectral ? eigenvalues.size() : matrix.rows();
  }

  static Generator spectral(const Eigen::VectorXd& lambdas, double M,
                            double horizon);
  static Generator dense(const Eigen::MatrixXd& A, double M, double horizon);
};

/// Input map B taking control vectors (dimension k) into state space
/// (dimension n); identity or a dense matrix.  `bound` is the spectral norm.
struct ControlMap {
  enum class Kind { Identity, Dense };

  Kind kind = Kind::Identity;
  Eigen::Index n = 0;      // state dimension
  Eigen::MatrixXd matrix;  // Dense, n x k
  double bound = 1.0;

  Eigen::Index state_dim() const {
    return kind == Kind::Identity ? n : matrix.rows();
  }
  Eigen::Index control_dim() const {
    return kind == Kind::Identity ? n : matrix.cols();
  }

  static ControlMap identity(Eigen::Index n);
  static ControlMap dense(const Eigen::MatrixXd& B);

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// Minimum-norm least-squares preimage of v under the map.
  Eigen::VectorXd pinv_apply(const Eigen::VectorXd& v) const;
  bool full_row_rank(double tol = 1e-10) const;
};

/// T(t) z, the evolution family applied to a state vector.
Eigen::VectorXd semigroup_apply(const Generator& A, double t,
                                const Eigen::VectorXd& z);

enum class FracRoute { WrightIntegral, SpectralMl };

/// Fractional flow operator applied to a state vector,
///   eta * integral_0^inf theta xi_eta(theta) T(t^eta theta) z dtheta,
/// either through that probability-density integral (any generator) or
/// through the modal closed form E_{eta,eta}(lambda_l t^eta) (spectral kind
/// only; RouteUnavailable otherwise).  The two routes agree to 1e-5 relative
/// accuracy on the validated ranges.
Eigen::VectorXd frac_operator_apply(const Generator& A, double eta, double t,
                                    const Eigen::VectorXd& z, FracRoute route);

/// Route-defaulted variant: modal closed form when available, density
/// integral otherwise.
Eigen::VectorXd frac_operator_apply(const Generator& A, double eta, double t,
                                    const Eigen::VectorXd& z);

/// Antiderivative values for the modal flow kernel
///   K(X) = X^{eta-1} E_{eta,eta}(lambda X^eta):
/// flow_kernel_P(X) = X^eta E_{eta,eta+1}(lambda X^eta) has P' = K, and
/// flow_kernel_Q(X) = X^{eta+1} E_{eta,eta+2}(lambda X^eta) has
/// Q'(X) = X^eta E_{eta,eta+1}(lambda X^eta), so first-order kernel moments
/// over a cell come out exactly.
std::complex<double> flow_kernel_P(double eta, std::complex<double> lambda,
                                   double X);
std::complex<double> flow_kernel_Q(double eta, std::complex<double> lambda,
                                   double X);

/// integral_{f.origin}^{upper} (upper-s)^{eta-1} T_eta(upper-s) f(s) ds,
/// evaluated mode by mode: exact kernel moments against piecewise-linear
/// modal data away from the origin, Gauss-Jacobi cells where the data
/// carries its origin weight or the kernel its endpoint singularity.
Eigen::VectorXd flow_convolution(const Generator& A, double eta,
                                 const SampledFunction& f, double upper);

/// The terminal-time value of flow_convolution over one flow interval;
/// the map is linear and bounded in f.
Eigen::VectorXd terminal_operator(const Generator& A, double eta,
                                  const SampledFunction& f,
                                  double terminal_time);

}  // namespace fracimp
