#pragma once

#include <Eigen/Core>
#include <vector>

#include "fracimp/generator.hpp"
#include "fracimp/sampled.hpp"

namespace fracimp {

/// Time grid of an impulsive evolution problem: flow windows (p_r, t_{r+1}]
/// for r = 0..m interleaved with impulse windows (t_r, p_r] for r = 1..m,
/// under the strict chain 0 = p_0 < t_1 < p_1 < ... < p_m < t_{m+1} = a
/// (the final flow window closes the horizon, so t_{m+1} = p_{m+1} = a).
///
/// Both sequences are padded to a common index range: p[r] holds p_r for
/// r = 0..m+1 and t[r] holds t_r for r = 1..m+1; t[0] is a zero sentinel.
struct Partition {
  std::vector<double> p;
  std::vector<double> t;

  int m() const { return static_cast<int>(p.size()) - 2; }
  double a() const { return p.back(); }

  double flow_lo(int r) const { return p[static_cast<size_t>(r)]; }
  double flow_hi(int r) const { return t[static_cast<size_t>(r) + 1]; }
  double impulse_lo(int r) const { return t[static_cast<size_t>(r)]; }
  double impulse_hi(int r) const { return p[static_cast<size_t>(r)]; }

  /// Longest flow window, max_r (t_{r+1} - p_r).
  double max_flow_length() const;

  /// Builds from the interleaved time list (p_0, t_1, p_1, ..., p_m, t_{m+1});
  /// the list length must be even and at least 2 (m = length/2 - 1).
  static Partition from_sequence(const std::vector<double>& seq);

  /// Throws BadPartition unless the strict ordering chain holds.
  void validate() const;

  struct Location {
    int index;     // window index r
    bool impulse;  // true: time in (t_r, p_r]; false: time in (p_r, t_{r+1}]
  };

  /// Locates time within (0, a]; throws TimeOutsideWindow beyond it.
  Location locate(double time) const;

  /// Left endpoint p_r of the enclosing block (p_r, p_{r+1}]: the reference
  /// point of the weighted norm and of the time-modulated nonlinearities.
  double weight_origin(double time) const;
};

/// One reset map acting on an impulse window, drawn from a serializable
/// catalog.  `b` certifies the Lipschitz bound |f(t,z)-f(t,y)| <= b|z-y|
/// and `c` the growth bound |f(t,z)| <= c|z|; both must lie in [0,1].
struct ImpulseMap {
  enum class Kind { Zero, Linear, Sine };

  Kind kind = Kind::Zero;
  double coeff = 0.0;
  double b = 0.0;
  double c = 0.0;

  Eigen::VectorXd apply(double time, const Eigen::VectorXd& z) const;

  static ImpulseMap zero();
  static ImpulseMap linear(double coeff);  // z -> coeff * z
  static ImpulseMap sine(double coeff);    // z -> coeff * sin(z), componentwise
};

/// The impulse maps of a problem; maps[r-1] acts on window (t_r, p_r].
struct ImpulseSpec {
  std::vector<ImpulseMap> maps;

  static ImpulseSpec none(int m);
};

/// Applies the r-th reset map (r = 1..m) at a time inside its window.
/// Throws IndexOutOfRange for a bad r and TimeOutsideWindow for a time
/// outside (t_r, p_r].
Eigen::VectorXd impulse_apply(const ImpulseSpec& spec, const Partition& part,
                              int r, double time,
                              const Eigen::VectorXd& z_at_tr);

/// State nonlinearity from a serializable catalog, together with certified
/// constants: `kappa` for |h(t,z)-h(t,y)| <= kappa |z-y|, `kappa_tilde` for
/// the time-weighted variant with factor (t-p_r)^{1-eta}, and the growth
/// pair |h(t,z)| <= varsigma(t) + d (t-p_r)^{1-eta} |z|.  A constant with no
/// finite certificate (e.g. the weighted ones for a plain linear map) is
/// stored as +infinity.
struct Nonlinearity {
  enum class Kind { Zero, Linear, Sine, ModulatedSine, HeatPointwise };

  Kind kind = Kind::Zero;
  Eigen::Index n = 1;    // state dimension
  double coeff = 0.0;    // gain (c or delta)
  double beta = 0.0;     // time-modulation exponent
  double cert_eta = -1;  // order the weighted certificates assume; -1 = any

  double kappa = 0.0;
  double kappa_tilde = 0.0;
  double d = 0.0;

  // HeatPointwise plumbing: a pointwise map conjugated through the
  // orthonormal sine basis on [0,pi].  `synth` evaluates mode coefficients
  // on the collocation grid, `analysis` projects a grid function back
  // (quadrature-weighted transpose), and `one_coeffs` holds the projection
  // of the constant function 1.
  Eigen::MatrixXd synth;
  Eigen::MatrixXd analysis;
  Eigen::VectorXd one_coeffs;

  Eigen::VectorXd eval(double time, const Eigen::VectorXd& z,
                       const Partition& part) const;

  /// State-free part of the growth certificate at this time.
  double varsigma(double time, const Partition& part) const;

  /// L^q(0,a) norm of varsigma, by per-window Gauss quadrature.
  double varsigma_lq(const Partition& part, double q) const;

  static Nonlinearity zero(Eigen::Index n);
  static Nonlinearity linear(double coeff, Eigen::Index n);
  static Nonlinearity sine(double delta, Eigen::Index n);
  static Nonlinearity modulated_sine(double delta, double beta_exp,
                                     Eigen::Index n, double eta,
                                     const Partition& part);
  static Nonlinearity heat_pointwise(double delta, double beta_exp,
                                     Eigen::Index modes, double eta,
                                     const Partition& part);
};

/// Spot check: 1000 seeded random probes must not find a Lipschitz or
/// growth ratio above the stored certificates (throws HypothesisViolated).
void verify_nonlinearity(const Nonlinearity& h, const Partition& part,
                         double eta);
void verify_impulses(const ImpulseSpec& spec, const Partition& part,
                     Eigen::Index n);

/// Full problem statement: order, integrability exponent, time grid,
/// generator, input map, nonlinearity, reset maps, and initial datum.
struct SystemSpec {
  double eta = 0.5;
  double q = 2.0;
  Partition partition;
  Generator A;
  ControlMap B;
  Nonlinearity h;
  ImpulseSpec impulses;
  Eigen::VectorXd z0;

  Eigen::Index dim() const { return A.dim(); }

  /// Longest flow window.
  double tau() const { return partition.max_flow_length(); }

  /// Integrability bracket 1/eta < q < 1/(1-eta).  Recorded here but only
  /// reported (not enforced): a spec violating it still constructs, so the
  /// constant checker can flag it.
  bool h0_ok() const { return q > 1.0 / eta && q < 1.0 / (1.0 - eta); }

  /// Structural validation: order range, q > 1, partition chain, matching
  /// dimensions, generator bound horizon covering the problem horizon, and
  /// the random spot checks of the certified constants.
  void validate() const;
};

/// Piecewise trajectory: one sampled segment per flow window (stored in the
/// weighted view, origin p_r) and one per impulse window (raw view).
struct Trajectory {
  double eta = 0.5;
  Partition partition;
  std::vector<SampledFunction> flow;     // flow[r] on (p_r, t_{r+1}]
  std::vector<SampledFunction> impulse;  // impulse[r-1] on (t_r, p_r]

  Eigen::Index dim() const;
  void validate() const;

  /// z(time) for time in (0, a], dispatching to the owning segment.
  Eigen::VectorXd eval(double time) const;

  /// Left limit at t_r (r = 1..m+1): the final sample of flow window r-1.
  Eigen::VectorXd left_limit_flow(int r) const;

  /// Left limit at p_r (r = 1..m): the final sample of impulse window r.
  Eigen::VectorXd left_limit_impulse(int r) const;
};

/// Weighted supremum norm: max over blocks (p_r, p_{r+1}] of
/// sup (t-p_r)^{1-eta} |z(t)|, evaluated at the sample nodes, at 3 interior
/// probe points per cell (a 4x refinement), and at the stored weighted
/// limits.  Throws EmptyInterval if a window has no samples.
double pc_norm(const Trajectory& z);

/// Sample nodes for a window (lo, hi]: the graded mesh points excluding lo
/// itself (the open end carries the weighted limit instead of a sample).
std::vector<double> window_nodes(double lo, double hi, int n_cells,
                                 double grading);

}  // namespace fracimp
