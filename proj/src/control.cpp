#include "fracimp/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "fracimp/errors.hpp"
#include "fracimp/generator.hpp"
#include "fracimp/hypotheses.hpp"
#include "fracimp/quadrature.hpp"
#include "fracimp/special.hpp"

namespace fracimp {

using specfun::gamma_fn;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Legendre values P_k(2 (t - lo)/(hi - lo) - 1) for k = 0..K-1 at the given
// times, by the three-term recurrence.
Eigen::MatrixXd legendre_table(const std::vector<double>& nodes, double lo,
                               double hi, int K) {
  Eigen::MatrixXd tab(nodes.size(), K);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double x = 2.0 * (nodes[j] - lo) / (hi - lo) - 1.0;
    double pkm1 = 1.0, pk = x;
    for (int k = 0; k < K; ++k) {
      if (k == 0) {
        tab(j, k) = 1.0;
      } else if (k == 1) {
        tab(j, k) = x;
      } else {
        const double pkp1 = ((2 * k - 1) * x * pk - (k - 1) * pkm1) / k;
        pkm1 = pk;
        pk = pkp1;
        tab(j, k) = pk;
      }
    }
  }
  return tab;
}

SampledFunction window_function(double lo, const std::vector<double>& mesh,
                                const Eigen::MatrixXd& nodal,
                                double weight = 0.0) {
  SampledFunction f;
  f.origin = lo;
  f.nodes = mesh;
  f.weight_exponent = weight;
  f.values.reserve(mesh.size());
  for (Eigen::Index j = 0; j < nodal.rows(); ++j)
    f.values.push_back(nodal.row(j).transpose());
  return f;
}

// Discretized terminal convolution of flow window r restricted to the
// polynomial control ansatz, plus the least-squares inverses for the
// density and the correction solves.  The basis data objects carry the
// same mesh and origin weight the solver assigns to its assembled window
// data, so the columns are exactly the solver's terminal response to the
// corresponding nodal input values.
struct WindowOperator {
  int r = 0;
  double lo = 0.0, hi = 0.0, len = 0.0;
  double weight = 0.0;  // data weight of the solver's window assembly
  std::vector<double> mesh;
  Eigen::MatrixXd basis;  // mesh.size() x K
  Eigen::MatrixXd m_zeta;   // d x K*d: terminal images of basis x state axes
  Eigen::MatrixXd m_omega;  // d x K*c: same through the input map
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> zeta_ls;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> omega_ls;

  // Terminal convolution of the given nodal data through the same
  // discretization the columns were built from.
  Eigen::VectorXd terminal_image(const SystemSpec& spec,
                                 const SampledFunction& seg) const {
    SampledFunction data = seg;
    data.weight_exponent = weight;
    data.weighted_limit.reset();
    return flow_convolution(spec.A, spec.eta, data, hi);
  }
};

WindowOperator build_window_operator(const SystemSpec& spec, int r,
                                     const SolverConfig& cfg, int K) {
  WindowOperator W;
  W.r = r;
  W.lo = spec.partition.flow_lo(r);
  W.hi = spec.partition.flow_hi(r);
  W.len = W.hi - W.lo;
  W.weight = data_weight(spec.h, spec.eta, r >= 1);
  W.mesh = window_nodes(W.lo, W.hi, cfg.mesh_per_interval,
                        cfg.effective_grading(spec.eta));
  W.basis = legendre_table(W.mesh, W.lo, W.hi, K);

  const Eigen::Index d = spec.dim();
  const Eigen::Index c = spec.B.control_dim();
  W.m_zeta.resize(d, K * d);
  W.m_omega.resize(d, K * c);
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd phi_k(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::MatrixXd nodal = Eigen::MatrixXd::Zero(W.mesh.size(), d);
      nodal.col(i) = W.basis.col(k);
      const SampledFunction data =
          window_function(W.lo, W.mesh, nodal, W.weight);
      phi_k.col(i) = flow_convolution(spec.A, spec.eta, data, W.hi);
    }
    W.m_zeta.middleCols(k * d, d) = phi_k;
    for (Eigen::Index j = 0; j < c; ++j)
      W.m_omega.col(k * c + j) =
          phi_k * spec.B.apply(Eigen::VectorXd::Unit(c, j));
  }
  W.zeta_ls.compute(W.m_zeta);
  W.omega_ls.compute(W.m_omega);
  return W;
}

// Modal closed-form density guess; only the diagonal route has the explicit
// eigenvalue sequence the formula needs, every other generator starts the
// correction from zero.  A guess is never required for correctness, so any
// evaluation failure (overflow far out in the left half-plane) also falls
// back to zero.
Eigen::MatrixXd zeta_guess_nodal(const SystemSpec& spec,
                                 const WindowOperator& W,
                                 const Eigen::VectorXd& target_star) {
  const Eigen::Index d = spec.dim();
  Eigen::MatrixXd nodal = Eigen::MatrixXd::Zero(W.mesh.size(), d);
  if (spec.A.kind != Generator::Kind::Spectral) return nodal;
  const double eta = spec.eta;
  const double g2 = gamma_fn(eta) * gamma_fn(eta);
  try {
    for (std::size_t j = 0; j < W.mesh.size(); ++j) {
      const double x = W.mesh[j] - W.lo;
      const double tau = W.hi - W.mesh[j];
      for (Eigen::Index l = 0; l < d; ++l) {
        const double lam = spec.A.eigenvalues[l];
        const double w = lam * std::pow(tau, eta);
        const double val =
            g2 / W.len *
            (std::pow(tau, 1.0 - eta) * specfun::mittag_leffler2(eta, eta, w) +
             2.0 * x * lam * eta *
                 specfun::mittag_leffler2_derivative(eta, eta, w)) *
            target_star[l];
        if (!std::isfinite(val))
          return Eigen::MatrixXd::Zero(W.mesh.size(), d);
        nodal(j, l) = val;
      }
    }
  } catch (const Error&) {
    return Eigen::MatrixXd::Zero(W.mesh.size(), d);
  }
  return nodal;
}

// Density on the window whose terminal convolution reproduces target_star.
Eigen::MatrixXd zeta_nodal(const SystemSpec& spec, const WindowOperator& W,
                           const Eigen::VectorXd& target_star,
                           double tol_rel) {
  const Eigen::Index d = spec.dim();
  const double scale = target_star.norm();
  if (scale == 0.0) return Eigen::MatrixXd::Zero(W.mesh.size(), d);

  Eigen::MatrixXd nodal = zeta_guess_nodal(spec, W, target_star);
  Eigen::VectorXd rhs = target_star;
  if (nodal.cwiseAbs().maxCoeff() > 0.0)
    rhs -= flow_convolution(spec.A, spec.eta,
                            window_function(W.lo, W.mesh, nodal, W.weight),
                            W.hi);
  const Eigen::VectorXd coef = W.zeta_ls.solve(rhs);
  const double residual = (W.m_zeta * coef - rhs).norm();
  if (!(residual <= tol_rel * scale))
    throw SingularTerminalOperator(
        "terminal map cannot reach the requested direction (residual " +
        fmt(residual) + " vs tolerance " + fmt(tol_rel * scale) + ")");
  for (int k = 0; k < W.basis.cols(); ++k)
    nodal += W.basis.col(k) * coef.segment(k * d, d).transpose();
  if (!nodal.allFinite())
    throw SingularTerminalOperator(
        "terminal map inversion left non-finite density values");
  return nodal;
}

// ||B w||_{L^q} over one flow window for a nodal window control.
double window_bu_lq(const SystemSpec& spec, const WindowOperator& W,
                    const Eigen::MatrixXd& nodal) {
  Eigen::MatrixXd bu(nodal.rows(), spec.dim());
  for (Eigen::Index j = 0; j < nodal.rows(); ++j)
    bu.row(j) = spec.B.apply(nodal.row(j).transpose()).transpose();
  const SampledFunction f = window_function(W.lo, W.mesh, bu);
  std::vector<double> breaks{W.lo};
  breaks.insert(breaks.end(), W.mesh.begin(), W.mesh.end());
  const double q = spec.q;
  const double mass = quad::integrate_cells(
      [&](double s) { return std::pow(f.eval(s).norm(), q); }, breaks, 12);
  return std::pow(mass, 1.0 / q);
}

double interval_budget(double epsilon, int r, int m) {
  return r == m ? epsilon / 2.0 : epsilon / std::pow(2.0, r + 2);
}

// Carrier for the control over every flow window: zero ahead of the window
// being steered, accepted values behind it.
struct ControlCarrier {
  SampledFunction fn;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // node ranges

  ControlCarrier(const SystemSpec& spec, const SolverConfig& cfg) {
    fn.origin = spec.partition.flow_lo(0);
    const Eigen::Index c = spec.B.control_dim();
    for (int r = 0; r <= spec.partition.m(); ++r) {
      const auto mesh =
          window_nodes(spec.partition.flow_lo(r), spec.partition.flow_hi(r),
                       cfg.mesh_per_interval, cfg.effective_grading(spec.eta));
      spans.emplace_back(fn.nodes.size(), mesh.size());
      fn.nodes.insert(fn.nodes.end(), mesh.begin(), mesh.end());
    }
    fn.values.assign(fn.nodes.size(), Eigen::VectorXd::Zero(c));
  }

  void set_window(int r, const Eigen::MatrixXd& nodal) {
    const auto [off, len] = spans[r];
    for (std::size_t j = 0; j < len; ++j)
      fn.values[off + j] = nodal.row(j).transpose();
  }
};

void check_certificates(const SteeringProblem& problem) {
  const auto report = check_all(
      problem.spec,
      zero_control(problem.spec.partition.a(), problem.spec.B.control_dim()));
  for (const char* key : {"H5", "H6", "H7", "H8"}) {
    const auto it = report.checks.find(key);
    if (it != report.checks.end() && !it->second.pass &&
        !problem.allow_hypothesis_failures)
      throw HypothesisViolated(
          std::string("steering certificate ") + key + " fails (value " +
          fmt(it->second.value) + " vs bound " + fmt(it->second.threshold) +
          "); set allow_hypothesis_failures to iterate anyway");
  }
}

}  // namespace

void SteeringProblem::validate() const {
  spec.validate();
  solver.validate();
  if (!(epsilon > 0.0))
    throw ConfigError("steering tolerance must be positive, got " +
                      fmt(epsilon));
  if (target.size() != spec.dim())
    throw DimensionMismatch("target has dimension " +
                            std::to_string(target.size()) + ", state has " +
                            std::to_string(spec.dim()));
  if (max_outer_iters < 1)
    throw ConfigError("at least one outer iteration is required");
  if (basis_size < 1)
    throw ConfigError("control ansatz needs at least one mode");
  if (!(zeta_tol_rel > 0.0))
    throw ConfigError("density residual tolerance must be positive");
  if (waypoints && static_cast<int>(waypoints->size()) != spec.partition.m())
    throw ConfigError("expected one waypoint per non-final flow window");
}

SampledFunction nemytskii_h(const SystemSpec& spec, const Trajectory& z,
                            int r) {
  if (r < 0 || r > spec.partition.m())
    throw IndexOutOfRange("flow window " + std::to_string(r) +
                          " out of range");
  if (static_cast<int>(z.flow.size()) <= r || z.flow[r].nodes.empty())
    throw HistoryIncomplete("window " + std::to_string(r) + " is not solved");
  const SampledFunction& seg = z.flow[r];
  SampledFunction out;
  out.origin = seg.origin;
  out.nodes = seg.nodes;
  out.weight_exponent = data_weight(spec.h, spec.eta, false);
  out.values.reserve(seg.nodes.size());
  for (std::size_t j = 0; j < seg.nodes.size(); ++j)
    out.values.push_back(spec.h.eval(seg.nodes[j], seg.values[j],
                                     spec.partition));
  return out;
}

SampledFunction nemytskii_phi(const SystemSpec& spec, const Trajectory& z,
                              int r) {
  if (r < 0 || r > spec.partition.m())
    throw IndexOutOfRange("flow window " + std::to_string(r) +
                          " out of range");
  if (static_cast<int>(z.flow.size()) <= r || z.flow[r].nodes.empty())
    throw HistoryIncomplete("window " + std::to_string(r) + " is not solved");
  const SampledFunction& seg = z.flow[r];
  SampledFunction out;
  out.origin = seg.origin;
  out.nodes = seg.nodes;
  out.weight_exponent = r >= 1 ? spec.eta : 0.0;
  out.values.reserve(seg.nodes.size());
  for (std::size_t j = 0; j < seg.nodes.size(); ++j)
    out.values.push_back(history_term(spec, z, r, seg.nodes[j]));
  return out;
}

SampledFunction zeta_init(const SystemSpec& spec, int r,
                          const Eigen::VectorXd& target_star,
                          const SolverConfig& cfg, int basis_size,
                          double tol_rel) {
  if (r < 0 || r > spec.partition.m())
    throw IndexOutOfRange("flow window " + std::to_string(r) +
                          " out of range");
  if (target_star.size() != spec.dim())
    throw DimensionMismatch("target has dimension " +
                            std::to_string(target_star.size()) +
                            ", state has " + std::to_string(spec.dim()));
  const WindowOperator W = build_window_operator(spec, r, cfg, basis_size);
  return window_function(W.lo, W.mesh,
                         zeta_nodal(spec, W, target_star, tol_rel));
}

std::pair<SampledFunction, IntervalRun> steer_interval(
    const SteeringProblem& problem, int r, const Trajectory& z_incoming) {
  problem.validate();
  const SystemSpec& spec = problem.spec;
  const int m = spec.partition.m();
  if (r < 0 || r > m)
    throw IndexOutOfRange("flow window " + std::to_string(r) +
                          " out of range");
  check_certificates(problem);

  const SolverConfig& cfg = problem.solver;
  const Eigen::Index c = spec.B.control_dim();
  IntervalRun run;
  run.interval = r;
  run.budget = interval_budget(problem.epsilon, r, m);

  ControlCarrier carrier(spec, cfg);
  const std::size_t nmesh = carrier.spans[r].second;
  const std::vector<double> mesh_r =
      window_nodes(spec.partition.flow_lo(r), spec.partition.flow_hi(r),
                   cfg.mesh_per_interval, cfg.effective_grading(spec.eta));
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nmesh, c);
  const auto resolve = [&](const Eigen::MatrixXd& nodal) {
    carrier.set_window(r, nodal);
    return solve_tail(spec, carrier.fn, cfg, r, z_incoming);
  };
  const auto record = [&](const Eigen::MatrixXd& nodal, double err) {
    run.iterates.push_back(
        window_function(spec.partition.flow_lo(r), mesh_r, nodal));
    run.errors.push_back(err);
    run.ratios.push_back(run.errors.size() < 2
                             ? std::numeric_limits<double>::quiet_NaN()
                             : err / run.errors[run.errors.size() - 2]);
  };

  // Zero-control preflight; a window whose natural terminal value already
  // meets the budget is accepted untouched (this covers the coasting
  // defaults of the non-final windows).
  const Trajectory z0 = resolve(u).trajectory;
  const Eigen::VectorXd natural = z0.flow[r].values.back();
  const Eigen::VectorXd goal =
      r == m ? problem.target
             : (problem.waypoints ? (*problem.waypoints)[r] : natural);
  const double e0 = (goal - natural).norm();
  record(u, e0);
  if (e0 <= run.budget) {
    run.converged = true;
    return {run.iterates.back(), run};
  }

  // Remove the homogeneous term: the window datum is frozen (it only reads
  // the already-accepted part of the trajectory), so this happens once.
  const double lo = spec.partition.flow_lo(r);
  const double hi = spec.partition.flow_hi(r);
  const Eigen::VectorXd datum =
      r == 0 ? spec.z0
             : impulse_apply(spec.impulses, spec.partition, r, lo,
                             z_incoming.left_limit_flow(r));
  const Eigen::VectorXd homog =
      std::pow(hi - lo, spec.eta - 1.0) *
      frac_operator_apply(spec.A, spec.eta, hi - lo, datum);
  const Eigen::VectorXd target_star = goal - homog;

  const WindowOperator W = build_window_operator(spec, r, cfg,
                                                 problem.basis_size);
  const Eigen::MatrixXd zeta =
      zeta_nodal(spec, W, target_star, problem.zeta_tol_rel);
  for (std::size_t j = 0; j < nmesh; ++j)
    u.row(j) = spec.B.pinv_apply(zeta.row(j).transpose()).transpose();

  const Eigen::Index d = spec.dim();
  Eigen::VectorXd prev_h = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd prev_phi = Eigen::VectorXd::Zero(d);
  int stagnant = 0;
  for (int n = 1; n <= problem.max_outer_iters; ++n) {
    const Trajectory zn = resolve(u).trajectory;
    const double en = (goal - zn.flow[r].values.back()).norm();
    record(u, en);
    if (en <= run.budget) {
      run.converged = true;
      return {run.iterates.back(), run};
    }
    const double eprev = run.errors[run.errors.size() - 2];
    if (std::abs(en - eprev) < 1e-12 * std::max(1.0, eprev)) {
      if (++stagnant >= 3)
        throw NonConvergence(
            "window " + std::to_string(r) + " steering stagnated at error " +
                fmt(en) + " (budget " + fmt(run.budget) + ")",
            std::max(1.0, run.ratios.back()));
    } else {
      stagnant = 0;
    }
    if (n == problem.max_outer_iters) break;

    const Eigen::VectorXd img_h =
        W.terminal_image(spec, nemytskii_h(spec, zn, r));
    const Eigen::VectorXd img_phi =
        r >= 1 ? W.terminal_image(spec, nemytskii_phi(spec, zn, r)).eval()
               : Eigen::VectorXd::Zero(d).eval();
    const Eigen::VectorXd rhs = (img_h - prev_h) + (img_phi - prev_phi);
    const Eigen::VectorXd coef = W.omega_ls.solve(rhs);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(nmesh, c);
    for (int k = 0; k < problem.basis_size; ++k)
      omega += W.basis.col(k) * coef.segment(k * c, c).transpose();
    u -= omega;
    run.corrections.push_back(window_function(lo, W.mesh, omega));
    run.bu_steps.push_back(window_bu_lq(spec, W, omega));
    prev_h = img_h;
    prev_phi = img_phi;
  }
  throw NonConvergence(
      "window " + std::to_string(r) + " missed its budget " +
          fmt(run.budget) + " after " + std::to_string(problem.max_outer_iters) +
          " iterations (last error " + fmt(run.errors.back()) + ")",
      run.ratios.back());
}

SteerResult steer(const SteeringProblem& problem) {
  problem.validate();
  const SystemSpec& spec = problem.spec;
  const int m = spec.partition.m();

  SteerResult out;
  ControlCarrier carrier(spec, problem.solver);
  Trajectory accepted;
  for (int r = 0; r <= m; ++r) {
    auto [u_r, slice] = steer_interval(problem, r, accepted);
    Eigen::MatrixXd nodal(u_r.nodes.size(), spec.B.control_dim());
    for (std::size_t j = 0; j < u_r.nodes.size(); ++j)
      nodal.row(j) = u_r.values[j].transpose();
    carrier.set_window(r, nodal);
    accepted = solve_tail(spec, carrier.fn, problem.solver, r, accepted)
                   .trajectory;
    out.run.intervals.push_back(std::move(slice));
  }
  out.run.converged = true;
  for (const auto& slice : out.run.intervals)
    out.run.converged = out.run.converged && slice.converged;
  out.control = std::move(carrier.fn);
  out.trajectory = std::move(accepted);
  return out;
}

}  // namespace fracimp
