#pragma once

#include <map>
#include <string>

#include "fracimp/model.hpp"

namespace fracimp {

/// One certificate line: the computed quantity, the bound it must satisfy,
/// and whether it does.
struct CheckResult {
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

/// Every constant the contraction and steering certificates need, plus the
/// individual pass/fail lines keyed "H0".."H8".
struct HypothesisReport {
  double nu = 0.0;             // window-map contraction modulus
  double mu = 0.0;             // control-to-state difference modulus
  double lambda_cap = 0.0;     // a-priori weighted-norm growth factor
  double varrho = 0.0;         // Hoelder factor of the flow convolution
  double mainass_value = 0.0;  // steering-iteration decay certificate
  double aleph = 0.0;          // preimage-map norm estimate
  std::map<std::string, CheckResult> checks;

  /// Deterministic key-value document (fixed key order, %.17g numbers).
  std::string to_json() const;
};

/// Contraction modulus of the window map, maximized over reset windows.
/// With no resets only the nonlinearity term survives:
///   nu = M kappa Gamma(eta) t_1^eta / Gamma(2 eta).
double compute_nu(const SystemSpec& spec);

struct Lemma3Constants {
  double lambda_cap = 0.0;
  double varrho = 0.0;
  double mu = 0.0;
};

/// A-priori growth bound factor (recursive across windows), the Hoelder
/// convolution factor, and the difference modulus.  Requires q > 1/eta,
/// otherwise the Hoelder exponent degenerates and HypothesisViolated is
/// thrown.
Lemma3Constants compute_lemma3_constants(const SystemSpec& spec,
                                         const SampledFunction& u);

/// Norm estimate of the least-squares preimage map used to realize steering
/// controls.  Identity gives exactly 1; a map whose range is a proper
/// subspace cannot realize arbitrary targets and reports +infinity.
double compute_aleph(const ControlMap& B);

/// Decay-rate certificate of the per-window steering iteration, maximized
/// over windows; the opening window contributes its own row.  Returns
/// +infinity when any prerequisite degenerates (q <= 1/eta, uncertified
/// weighted Lipschitz constant, mu-factor >= 1, or a defective input map).
double compute_mainass(const SystemSpec& spec);

/// L^q((t - anchor)^{-eta q}; [lo, hi])^{1/q} with anchor < lo: the exact
/// reset-history kernel mass entering the steering certificate.
double tail_kernel_lq(double eta, double q, double anchor, double lo,
                      double hi);

/// ||B u||_{L^q} over [0, a] by composite Gauss on the control's nodes
/// joined with the partition breakpoints.
double control_lq_norm(const SystemSpec& spec, const SampledFunction& u);

/// Full certificate sweep; never throws, failures are carried in the report.
HypothesisReport check_all(const SystemSpec& spec, const SampledFunction& u);

/// Control that is identically zero on [0, a] (raw view, two nodes).
SampledFunction zero_control(double a, Eigen::Index control_dim);

}  // namespace fracimp
