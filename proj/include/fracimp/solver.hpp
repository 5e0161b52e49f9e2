#pragma once

#include <vector>

#include "fracimp/model.hpp"

namespace fracimp {

/// Order of the local Gauss rules the solver assembles itself (history
/// integrals, endpoint cells).  The flow-convolution engine keeps its own
/// fixed rules.
struct QuadratureRule {
  int points = 12;
};

/// Discretization and iteration budget of the Picard solver.
struct SolverConfig {
  int mesh_per_interval = 64;    // cells per window, >= 8
  double grading = 0.0;          // <= 0 picks 1/eta; explicit values need >= 1
  int max_picard_iters = 200;
  double fp_tolerance = 1e-10;   // in the weighted sup norm over [0, a]
  QuadratureRule quad;
  bool allow_divergent = false;  // iterate even when the modulus is >= 1

  double effective_grading(double eta) const;
  void validate() const;
};

/// Iteration log of one solve.
struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // sup-norm step sizes, one per sweep
  double contraction_estimate = 0.0;     // worst observed step ratio
  bool converged = false;
};

struct SolveResult {
  Trajectory trajectory;
  SolveReport report;
};

/// Memory load carried into window r from everything before it:
///   eta/Gamma(1-eta) * sum_{k<r} ( int_{p_k}^{t_{k+1}} z(s) (t-s)^{-1-eta} ds
///                                + int_{t_{k+1}}^{p_{k+1}} z(s) (t-s)^{-1-eta} ds ),
/// reading both flow and reset segments uniformly from the trajectory.
/// r = 0 has no history and returns zero.  Throws HistoryIncomplete when a
/// window with index < r has no samples, TimeOutsideWindow when t is not in
/// (p_r, t_{r+1}].
Eigen::VectorXd history_term(const SystemSpec& spec, const Trajectory& z,
                             int r, double t);

/// One sweep of the solution operator: on each flow window the weighted
/// initial datum plus the flow convolution of (input + nonlinearity +
/// history), on each reset window the reset map applied to the freshly
/// updated left limit.  The result lives on the solver mesh of cfg.
Trajectory g_apply(const SystemSpec& spec, const SampledFunction& u,
                   const Trajectory& z, const SolverConfig& cfg);

/// Picard iteration of g_apply from the cascaded homogeneous bootstrap,
/// stopping when consecutive sweeps differ by at most fp_tolerance in the
/// weighted sup norm.  Throws HypothesisViolated when the contraction
/// modulus is >= 1 (unless allow_divergent), NonConvergence when the budget
/// runs out.
SolveResult solve(const SystemSpec& spec, const SampledFunction& u,
                  const SolverConfig& cfg);

/// Continuation variant: windows with index < start_window are copied
/// verbatim from `history` (which must be solved there) and only the
/// remaining windows are iterated.  start_window = 0 ignores `history` and
/// is a plain solve.
SolveResult solve_tail(const SystemSpec& spec, const SampledFunction& u,
                       const SolverConfig& cfg, int start_window,
                       const Trajectory& history);

/// Cascaded homogeneous bootstrap: pure weighted flow from the datum on each
/// flow window, reset images on reset windows, no convolution terms.
Trajectory bootstrap_trajectory(const SystemSpec& spec,
                                const SolverConfig& cfg);

/// Defect of the weighted initial condition: the fractional integral of
/// order 1-eta of the trajectory, extrapolated to 0+, minus z0 (norm).
double verify_initial_condition(const SystemSpec& spec, const Trajectory& z);

/// Weighted sup norm of a - b for two trajectories sampled on the same
/// meshes (DimensionMismatch otherwise).
double trajectory_gap(const Trajectory& a, const Trajectory& b);

/// Origin weight exponent assigned to flow data assembled from the
/// nonlinearity (and, for r >= 1, the history load) on a flow window; the
/// same table the solver uses for its convolution data.
double data_weight(const Nonlinearity& h, double eta, bool with_history);

}  // namespace fracimp
