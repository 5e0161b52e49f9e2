#include "fracimp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Dense>

#include "fracimp/errors.hpp"
#include "fracimp/fracints.hpp"
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

double time_slack(const Partition& part) {
  return 1e-12 * std::max(1.0, part.a());
}

std::vector<double> flow_mesh(const Partition& part, int r,
                              const SolverConfig& cfg, double eta) {
  return window_nodes(part.flow_lo(r), part.flow_hi(r),
                      cfg.mesh_per_interval, cfg.effective_grading(eta));
}

std::vector<double> impulse_mesh(const Partition& part, int r,
                                 const SolverConfig& cfg) {
  return window_nodes(part.impulse_lo(r), part.impulse_hi(r),
                      cfg.mesh_per_interval, 1.0);
}

// integral_{seg.origin}^{seg.nodes.back()} seg(s) (t-s)^{-1-eta} ds for
// t strictly above the segment's span.  Piecewise-linear data against exact
// kernel moments cell by cell; a segment that blows up at its origin gets a
// Gauss-Jacobi opening cell in the weighted view instead.
Eigen::VectorXd kernel_load(const SampledFunction& seg, double t, double eta,
                            int npts) {
  const double c = -1.0 - eta;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(seg.dim());
  if (seg.weight_exponent > 0.0) {
    const auto rule = quad::jacobi_cell_rule(
        npts, 0.0, -seg.weight_exponent, seg.origin, seg.nodes.front());
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
      acc += rule.weights[j] * std::pow(t - rule.nodes[j], c) *
             seg.weighted_eval(rule.nodes[j]);
  } else if (seg.nodes.front() > seg.origin + 1e-300) {
    const double x0 = seg.origin;
    const double x1 = seg.nodes.front();
    const auto mom = quad::power_kernel_moments(c, t, x0, x1);
    const Eigen::VectorXd v0 = seg.eval(x0);
    acc += mom.m0 * v0 + mom.m1 / (x1 - x0) * (seg.values.front() - v0);
  }
  for (std::size_t i = 0; i + 1 < seg.nodes.size(); ++i) {
    const double x0 = seg.nodes[i];
    const double x1 = seg.nodes[i + 1];
    const auto mom = quad::power_kernel_moments(c, t, x0, x1);
    acc += mom.m0 * seg.values[i] +
           mom.m1 / (x1 - x0) * (seg.values[i + 1] - seg.values[i]);
  }
  return acc;
}

}  // namespace

// Origin weight of the convolution data Bu + h + history on window r: the
// sharpest blow-up any summand can have at p_r.  The history load carries
// (s-p_r)^{-eta} for r >= 1; an unmodulated linear nonlinearity inherits the
// state's own (s-p_r)^{eta-1}; modulation flattens that by beta.
double data_weight(const Nonlinearity& h, double eta, bool with_history) {
  double w = 0.0;
  switch (h.kind) {
    case Nonlinearity::Kind::Zero:
    case Nonlinearity::Kind::Sine:
      break;
    case Nonlinearity::Kind::Linear:
      w = 1.0 - eta;
      break;
    case Nonlinearity::Kind::ModulatedSine:
    case Nonlinearity::Kind::HeatPointwise:
      w = std::max(0.0, (1.0 - eta) - h.beta);
      // rounding dust from the exponent arithmetic must not select the
      // weighted-view quadrature branch
      if (w < 1e-12) w = 0.0;
      break;
  }
  if (with_history) w = std::max(w, eta);
  return w;
}

namespace {

void require_history(const SystemSpec& spec, const Trajectory& z, int r) {
  if (static_cast<int>(z.flow.size()) < r ||
      static_cast<int>(z.impulse.size()) < r - 1)
    throw HistoryIncomplete("trajectory carries no windows before index " +
                            std::to_string(r));
  for (int k = 0; k < r; ++k) {
    if (z.flow[static_cast<size_t>(k)].nodes.empty())
      throw HistoryIncomplete("flow window " + std::to_string(k) +
                              " is unsolved");
    if (z.flow[static_cast<size_t>(k)].dim() != spec.dim())
      throw DimensionMismatch("history window dimension differs from spec");
    if (k >= 1 && z.impulse[static_cast<size_t>(k) - 1].nodes.empty())
      throw HistoryIncomplete("reset window " + std::to_string(k) +
                              " is unsolved");
  }
}

}  // namespace

double SolverConfig::effective_grading(double eta) const {
  if (grading > 0.0) return grading;
  return std::max(1.0, 1.0 / eta);
}

void SolverConfig::validate() const {
  if (mesh_per_interval < 8)
    throw ConfigError("mesh_per_interval must be at least 8, got " +
                      std::to_string(mesh_per_interval));
  if (!(fp_tolerance > 0.0) || !std::isfinite(fp_tolerance))
    throw ConfigError("fp_tolerance must be a positive real, got " +
                      fmt(fp_tolerance));
  if (max_picard_iters < 1)
    throw ConfigError("max_picard_iters must be positive, got " +
                      std::to_string(max_picard_iters));
  if (grading > 0.0 && grading < 1.0)
    throw ConfigError("grading must be >= 1 (or <= 0 for automatic), got " +
                      fmt(grading));
  if (quad.points < 2)
    throw ConfigError("quadrature order must be at least 2, got " +
                      std::to_string(quad.points));
}

Eigen::VectorXd history_term(const SystemSpec& spec, const Trajectory& z,
                             int r, double t) {
  const Partition& part = spec.partition;
  if (r < 0 || r > part.m())
    throw IndexOutOfRange("window index " + std::to_string(r) +
                          " outside 0.." + std::to_string(part.m()));
  if (r == 0) return Eigen::VectorXd::Zero(spec.dim());
  const double slack = time_slack(part);
  if (t <= part.flow_lo(r) + slack || t > part.flow_hi(r) + slack)
    throw TimeOutsideWindow("history load of window " + std::to_string(r) +
                            " is defined on (" + fmt(part.flow_lo(r)) + ", " +
                            fmt(part.flow_hi(r)) + "], got t = " + fmt(t));
  require_history(spec, z, r);

  const double eta = spec.eta;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(spec.dim());
  for (int k = 0; k < r; ++k) {
    acc += kernel_load(z.flow[static_cast<size_t>(k)], t, eta, 12);
    acc += kernel_load(z.impulse[static_cast<size_t>(k)], t, eta, 12);
  }
  return (eta / gamma_fn(1.0 - eta)) * acc;
}

namespace {

// Reset-window segment: the reset map applied pointwise to the given left
// limit, sampled on a uniform mesh.
SampledFunction impulse_segment(const SystemSpec& spec, int r,
                                const Eigen::VectorXd& left,
                                const SolverConfig& cfg) {
  SampledFunction seg;
  seg.origin = spec.partition.impulse_lo(r);
  seg.nodes = impulse_mesh(spec.partition, r, cfg);
  seg.values.reserve(seg.nodes.size());
  for (double s : seg.nodes)
    seg.values.push_back(impulse_apply(spec.impulses, spec.partition, r, s,
                                       left));
  return seg;
}

// Flow-window segment of one sweep: weighted datum flow plus the convolution
// of input + nonlinearity + history, all read from the incoming trajectory.
SampledFunction flow_segment(const SystemSpec& spec, const SampledFunction& u,
                             const Trajectory& z, int r,
                             const Eigen::VectorXd& datum,
                             const SolverConfig& cfg) {
  const Partition& part = spec.partition;
  const double eta = spec.eta;
  const double p = part.flow_lo(r);

  SampledFunction data;
  data.origin = p;
  data.nodes = flow_mesh(part, r, cfg, eta);
  data.weight_exponent = data_weight(spec.h, eta, r >= 1);
  data.values.reserve(data.nodes.size());
  for (double s : data.nodes) {
    Eigen::VectorXd f = spec.B.apply(u.eval(s)) +
                        spec.h.eval(s, z.eval(s), part);
    if (r >= 1) f += history_term(spec, z, r, s);
    data.values.push_back(std::move(f));
  }

  SampledFunction seg;
  seg.origin = p;
  seg.nodes = data.nodes;
  seg.weight_exponent = 1.0 - eta;
  seg.weighted_limit = datum / gamma_fn(eta);
  seg.values.reserve(seg.nodes.size());
  for (double tj : seg.nodes) {
    Eigen::VectorXd val =
        std::pow(tj - p, eta - 1.0) * frac_operator_apply(spec.A, eta, tj - p,
                                                           datum) +
        flow_convolution(spec.A, eta, data, tj);
    if (!val.allFinite())
      throw QuadratureFailure("flow window " + std::to_string(r) +
                              " produced a non-finite value");
    seg.values.push_back(std::move(val));
  }
  return seg;
}

// One application of the solution operator, recomputing windows with index
// >= start and copying the earlier ones from the input unchanged.
Trajectory sweep(const SystemSpec& spec, const SampledFunction& u,
                 const Trajectory& z, const SolverConfig& cfg, int start) {
  const Partition& part = spec.partition;
  const int m = part.m();
  Trajectory out;
  out.eta = spec.eta;
  out.partition = part;
  out.flow.resize(static_cast<size_t>(m) + 1);
  out.impulse.resize(static_cast<size_t>(m));
  for (int k = 0; k < start; ++k) {
    out.flow[static_cast<size_t>(k)] = z.flow[static_cast<size_t>(k)];
    if (k >= 1)
      out.impulse[static_cast<size_t>(k) - 1] =
          z.impulse[static_cast<size_t>(k) - 1];
  }
  for (int r = std::max(start, 0); r <= m; ++r) {
    if (r >= 1)
      out.impulse[static_cast<size_t>(r) - 1] = impulse_segment(
          spec, r, out.flow[static_cast<size_t>(r) - 1].values.back(), cfg);
    const Eigen::VectorXd datum =
        r == 0 ? spec.z0
               : impulse_apply(spec.impulses, part, r, part.impulse_hi(r),
                               z.left_limit_flow(r));
    out.flow[static_cast<size_t>(r)] =
        flow_segment(spec, u, z, r, datum, cfg);
  }
  return out;
}

}  // namespace

double trajectory_gap(const Trajectory& a, const Trajectory& b) {
  if (a.flow.size() != b.flow.size() || a.impulse.size() != b.impulse.size())
    throw DimensionMismatch("trajectories cover different window counts");
  Trajectory d = a;
  for (size_t i = 0; i < d.flow.size(); ++i) {
    if (d.flow[i].values.size() != b.flow[i].values.size())
      throw DimensionMismatch("trajectories live on different meshes");
    for (size_t j = 0; j < d.flow[i].values.size(); ++j)
      d.flow[i].values[j] -= b.flow[i].values[j];
    if (d.flow[i].weighted_limit && b.flow[i].weighted_limit)
      *d.flow[i].weighted_limit -= *b.flow[i].weighted_limit;
  }
  for (size_t i = 0; i < d.impulse.size(); ++i) {
    if (d.impulse[i].values.size() != b.impulse[i].values.size())
      throw DimensionMismatch("trajectories live on different meshes");
    for (size_t j = 0; j < d.impulse[i].values.size(); ++j)
      d.impulse[i].values[j] -= b.impulse[i].values[j];
  }
  return pc_norm(d);
}

Trajectory bootstrap_trajectory(const SystemSpec& spec,
                                const SolverConfig& cfg) {
  const Partition& part = spec.partition;
  const double eta = spec.eta;
  const int m = part.m();
  Trajectory out;
  out.eta = eta;
  out.partition = part;
  Eigen::VectorXd datum = spec.z0;
  for (int r = 0; r <= m; ++r) {
    if (r >= 1) {
      out.impulse.push_back(
          impulse_segment(spec, r, out.flow.back().values.back(), cfg));
      datum = out.impulse.back().values.back();
    }
    const double p = part.flow_lo(r);
    SampledFunction seg;
    seg.origin = p;
    seg.nodes = flow_mesh(part, r, cfg, eta);
    seg.weight_exponent = 1.0 - eta;
    seg.weighted_limit = datum / gamma_fn(eta);
    for (double tj : seg.nodes)
      seg.values.push_back(std::pow(tj - p, eta - 1.0) *
                           frac_operator_apply(spec.A, eta, tj - p, datum));
    out.flow.push_back(std::move(seg));
  }
  return out;
}

Trajectory g_apply(const SystemSpec& spec, const SampledFunction& u,
                   const Trajectory& z, const SolverConfig& cfg) {
  cfg.validate();
  return sweep(spec, u, z, cfg, 0);
}

SolveResult solve_tail(const SystemSpec& spec, const SampledFunction& u,
                       const SolverConfig& cfg, int start_window,
                       const Trajectory& history) {
  cfg.validate();
  const int m = spec.partition.m();
  if (start_window < 0 || start_window > m)
    throw IndexOutOfRange("start window " + std::to_string(start_window) +
                          " outside 0.." + std::to_string(m));

  const double nu = compute_nu(spec);
  if (!(nu < 1.0) && !cfg.allow_divergent)
    throw HypothesisViolated(
        "contraction modulus is " + fmt(nu) +
        " >= 1; the iteration has no convergence certificate "
        "(set the divergence override to explore anyway)");

  Trajectory cur;
  if (start_window == 0) {
    cur = bootstrap_trajectory(spec, cfg);
  } else {
    require_history(spec, history, start_window);
    cur.eta = spec.eta;
    cur.partition = spec.partition;
    cur.flow.resize(static_cast<size_t>(m) + 1);
    cur.impulse.resize(static_cast<size_t>(m));
    for (int k = 0; k < start_window; ++k) {
      cur.flow[static_cast<size_t>(k)] = history.flow[static_cast<size_t>(k)];
      if (k >= 1)
        cur.impulse[static_cast<size_t>(k) - 1] =
            history.impulse[static_cast<size_t>(k) - 1];
    }
    Eigen::VectorXd datum;
    for (int r = start_window; r <= m; ++r) {
      cur.impulse[static_cast<size_t>(r) - 1] = impulse_segment(
          spec, r, cur.flow[static_cast<size_t>(r) - 1].values.back(), cfg);
      datum = cur.impulse[static_cast<size_t>(r) - 1].values.back();
      const double p = spec.partition.flow_lo(r);
      SampledFunction seg;
      seg.origin = p;
      seg.nodes = flow_mesh(spec.partition, r, cfg, spec.eta);
      seg.weight_exponent = 1.0 - spec.eta;
      seg.weighted_limit = datum / gamma_fn(spec.eta);
      for (double tj : seg.nodes)
        seg.values.push_back(
            std::pow(tj - p, spec.eta - 1.0) *
            frac_operator_apply(spec.A, spec.eta, tj - p, datum));
      cur.flow[static_cast<size_t>(r)] = std::move(seg);
    }
  }

  SolveReport report;
  for (int it = 1; it <= cfg.max_picard_iters; ++it) {
    Trajectory next = sweep(spec, u, cur, cfg, start_window);
    const double res = trajectory_gap(next, cur);
    report.residual_history.push_back(res);
    report.iterations = it;
    cur = std::move(next);
    if (res <= cfg.fp_tolerance) {
      report.converged = true;
      break;
    }
  }
  for (size_t k = 1; k < report.residual_history.size(); ++k) {
    const double prev = report.residual_history[k - 1];
    if (prev > cfg.fp_tolerance)
      report.contraction_estimate = std::max(
          report.contraction_estimate, report.residual_history[k] / prev);
  }
  if (!report.converged)
    throw NonConvergence(
        "fixed-point iteration still moving by " +
            fmt(report.residual_history.back()) + " after " +
            std::to_string(report.iterations) + " sweeps (tolerance " +
            fmt(cfg.fp_tolerance) + ")",
        report.contraction_estimate);
  return {std::move(cur), std::move(report)};
}

SolveResult solve(const SystemSpec& spec, const SampledFunction& u,
                  const SolverConfig& cfg) {
  return solve_tail(spec, u, cfg, 0, Trajectory{});
}

double verify_initial_condition(const SystemSpec& spec, const Trajectory& z) {
  if (z.flow.empty() || z.flow.front().nodes.empty())
    throw EmptyInterval("trajectory has no samples on the first window");
  const SampledFunction& seg = z.flow.front();
  const double eta = z.eta;

  // Every-other-node copy of the first segment.  The defect integral is
  // evaluated on both views and Richardson-extrapolated in the mesh width,
  // which cancels the leading interpolation error of the stored samples
  // (quadratic in the cell width) before the limit is taken.
  SampledFunction half;
  half.origin = seg.origin;
  half.weight_exponent = seg.weight_exponent;
  half.weighted_limit = seg.weighted_limit;
  for (std::size_t j = 1; j < seg.nodes.size(); j += 2) {
    half.nodes.push_back(seg.nodes[j]);
    half.values.push_back(seg.values[j]);
  }
  if (half.nodes.empty() || half.nodes.back() < seg.nodes.back()) {
    half.nodes.push_back(seg.nodes.back());
    half.values.push_back(seg.values.back());
  }

  // Near 0+ the integral follows z0 + sum_k c_k t^{k eta}, so samples at
  // f = (t - origin)^eta extrapolate to the limit through a polynomial in f.
  // Sampling stays on a band away from both the contaminated first cells and
  // the far end of the window.
  const double fmax = std::pow(seg.nodes.back() - seg.origin, eta);
  const double cap = std::min(0.5, fmax);
  std::vector<double> fs;
  std::vector<Eigen::VectorXd> ws;
  const bool rich = half.nodes.size() + 2 < seg.nodes.size();
  for (const double lo : {0.2 * cap, 0.0, -1.0}) {
    fs.clear();
    ws.clear();
    for (std::size_t j = 1; j < seg.nodes.size(); j += 2) {
      const double t = seg.nodes[j];
      const double f = std::pow(t - seg.origin, eta);
      if (f < lo || (f > cap && lo >= 0.0)) continue;
      fs.push_back(f);
      Eigen::VectorXd w = fracops::rl_integral(1.0 - eta, seg, t);
      if (rich)
        w = (4.0 * w - fracops::rl_integral(1.0 - eta, half, t)) / 3.0;
      ws.push_back(std::move(w));
    }
    if (fs.size() >= 5) break;
  }
  if (fs.empty()) {
    const double t = seg.nodes.back();
    return (fracops::rl_integral(1.0 - eta, seg, t) - spec.z0).norm();
  }

  const int deg = std::max(1, std::min<int>(4, static_cast<int>(fs.size()) - 1));
  Eigen::MatrixXd vand(fs.size(), deg + 1);
  Eigen::MatrixXd rhs(fs.size(), seg.dim());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= deg; ++k) {
      vand(i, k) = p;
      p *= fs[i];
    }
    rhs.row(i) = ws[i].transpose();
  }
  const Eigen::MatrixXd coef = vand.colPivHouseholderQr().solve(rhs);
  return (coef.row(0).transpose() - spec.z0).norm();
}

}  // namespace fracimp
