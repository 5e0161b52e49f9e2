#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fracimp/model.hpp"
#include "fracimp/solver.hpp"

namespace fracimp {

/// Steering task: drive the terminal state z(a) into an epsilon-ball
/// around `target` by synthesizing a control window by window.
struct SteeringProblem {
  SystemSpec spec;
  Eigen::VectorXd target;
  double epsilon = 1e-3;
  int max_outer_iters = 30;

  SolverConfig solver;
  /// Optional per-window terminal targets for the non-final flow windows;
  /// by default those windows coast (the uncontrolled continuation's
  /// terminal value is accepted as-is) and only the final window aims at
  /// `target`.
  std::optional<std::vector<Eigen::VectorXd>> waypoints;
  /// Iterate even when the steering certificates (weighted Lipschitz
  /// constant, reset growth, decay bracket, preimage norm) fail.
  bool allow_hypothesis_failures = false;
  /// Relative residual accepted when inverting the terminal map for the
  /// initializing density.
  double zeta_tol_rel = 1e-6;
  /// Number of polynomial modes in the control ansatz per window.
  int basis_size = 6;

  void validate() const;
};

/// Record of one window's steering iteration: accepted control iterates,
/// corrections, terminal errors e_n (index 0 is the zero-control preflight),
/// pairwise error ratios, and the L^q step sizes of the B-images.
struct IntervalRun {
  int interval = 0;
  double budget = 0.0;
  std::vector<SampledFunction> iterates;
  std::vector<SampledFunction> corrections;
  std::vector<double> errors;
  std::vector<double> ratios;    // ratios[k] = errors[k] / errors[k-1]
  std::vector<double> bu_steps;  // ||B omega_n||_{L^q} on the window
  bool converged = false;
};

/// Whole-run record across windows.
struct ControlRun {
  std::vector<IntervalRun> intervals;
  bool converged = false;
};

/// Control on [0, a], its iteration record, and the steered trajectory.
struct SteerResult {
  SampledFunction control;
  ControlRun run;
  Trajectory trajectory;
};

/// Pointwise image of the solved window r under the nonlinearity, on the
/// window's own mesh.
SampledFunction nemytskii_h(const SystemSpec& spec, const Trajectory& z,
                            int r);

/// Pointwise image of the solver's history load on window r's mesh
/// (r >= 1; throws HistoryIncomplete when earlier windows are unsolved).
SampledFunction nemytskii_phi(const SystemSpec& spec, const Trajectory& z,
                              int r);

/// Density zeta on flow window r whose terminal convolution matches
/// `target_star` (the target with the homogeneous term already removed)
/// to a relative residual of tol_rel: a closed-form modal guess where the
/// flow operator is differentiable, corrected by a least-squares solve
/// against the discretized terminal map.  Throws SingularTerminalOperator
/// when that map cannot reach the target direction.
SampledFunction zeta_init(const SystemSpec& spec, int r,
                          const Eigen::VectorXd& target_star,
                          const SolverConfig& cfg = SolverConfig{},
                          int basis_size = 6, double tol_rel = 1e-6);

/// Steer one flow window: preflight with the incoming control-free
/// continuation, then iterate corrections from the terminal-map least
/// squares until the window budget is met.  Returns the accepted control on
/// the window and the iteration record.  Throws HypothesisViolated when the
/// steering certificates fail (unless overridden) and NonConvergence when
/// the budget runs out or the errors stagnate.
std::pair<SampledFunction, IntervalRun> steer_interval(
    const SteeringProblem& problem, int r, const Trajectory& z_incoming);

/// Chain steer_interval over every flow window (reset windows carry no
/// control), concatenating the accepted window controls into one function
/// on [0, a].
SteerResult steer(const SteeringProblem& problem);

}  // namespace fracimp
