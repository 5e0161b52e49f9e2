#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "fracimp/errors.hpp"
#include "fracimp/hypotheses.hpp"
#include "fracimp/quadrature.hpp"
#include "fracimp/solver.hpp"
#include "fracimp/special.hpp"

using namespace fracimp;

namespace {

SystemSpec scalar_spec(double eta, std::vector<double> seq, double lambda,
                       Nonlinearity h, std::vector<ImpulseMap> maps,
                       double z0val = 1.0) {
  SystemSpec s;
  s.eta = eta;
  s.q = 2.0;
  s.partition = Partition::from_sequence(seq);
  s.A = Generator::spectral(Eigen::VectorXd::Constant(1, lambda), 1.0,
                            s.partition.a());
  s.B = ControlMap::identity(1);
  s.h = std::move(h);
  s.impulses.maps = std::move(maps);
  s.z0 = Eigen::VectorXd::Constant(1, z0val);
  s.validate();
  return s;
}

SolverConfig quick_config(int cells = 16, double tol = 1e-9) {
  SolverConfig cfg;
  cfg.mesh_per_interval = cells;
  cfg.fp_tolerance = tol;
  return cfg;
}

// Trajectory that is identically `value` on every window, sampled raw on the
// solver meshes.
Trajectory constant_trajectory(const SystemSpec& spec, const SolverConfig& cfg,
                               double value) {
  Trajectory z = bootstrap_trajectory(spec, cfg);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(spec.dim(), value);
  for (auto& seg : z.flow) {
    seg.weight_exponent = 0.0;
    seg.weighted_limit.reset();
    for (auto& x : seg.values) x = v;
  }
  for (auto& seg : z.impulse)
    for (auto& x : seg.values) x = v;
  return z;
}

double max_node_gap(const Trajectory& a, const Trajectory& b) {
  double gap = 0.0;
  for (size_t i = 0; i < a.flow.size(); ++i)
    for (size_t j = 0; j < a.flow[i].values.size(); ++j)
      gap = std::max(gap,
                     (a.flow[i].values[j] - b.flow[i].values[j]).norm());
  for (size_t i = 0; i < a.impulse.size(); ++i)
    for (size_t j = 0; j < a.impulse[i].values.size(); ++j)
      gap = std::max(
          gap, (a.impulse[i].values[j] - b.impulse[i].values[j]).norm());
  return gap;
}

}  // namespace

TEST_CASE("history load vanishes without history") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.4, 0.5, 1.0}, -1.0,
                          Nonlinearity::zero(1), {ImpulseMap::linear(0.2)});
  auto cfg = quick_config();
  auto z = bootstrap_trajectory(spec, cfg);
  CHECK(history_term(spec, z, 0, 0.2).norm() == 0.0);

  auto zero = constant_trajectory(spec, cfg, 0.0);
  CHECK(history_term(spec, zero, 1, 0.75).norm() == 0.0);
}

TEST_CASE("history load of constant data") {
  // z identically 1 across both windows: the two sub-integrals merge into
  // one exact power integral.
  const double eta = 0.6;
  auto spec = scalar_spec(eta, {0.0, 0.3, 0.5, 1.0}, -1.0,
                          Nonlinearity::zero(1), {ImpulseMap::linear(0.2)});
  auto cfg = quick_config();
  auto ones = constant_trajectory(spec, cfg, 1.0);
  const double t = 0.75;
  const double closed = (std::pow(t - 0.5, -eta) - std::pow(t, -eta)) /
                        std::tgamma(1.0 - eta);
  const double got = history_term(spec, ones, 1, t)[0];
  CHECK(got == doctest::Approx(closed).epsilon(1e-12));

  // Independent oracle: refined composite quadrature of the raw kernel.
  std::vector<double> breaks;
  for (int i = 0; i <= 400; ++i) breaks.push_back(0.5 * i / 400.0);
  const double direct =
      eta / std::tgamma(1.0 - eta) *
      quad::integrate_cells(
          [&](double s) { return std::pow(t - s, -1.0 - eta); }, breaks, 12);
  CHECK(got == doctest::Approx(direct).epsilon(1e-5));
}

TEST_CASE("history load rejects bad calls") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.4, 0.5, 1.0}, -1.0,
                          Nonlinearity::zero(1), {ImpulseMap::linear(0.2)});
  auto cfg = quick_config();
  auto z = bootstrap_trajectory(spec, cfg);
  CHECK_THROWS_AS(history_term(spec, z, 1, 0.2), TimeOutsideWindow);
  CHECK_THROWS_AS(history_term(spec, z, 5, 0.75), IndexOutOfRange);

  z.flow[0].nodes.clear();
  z.flow[0].values.clear();
  CHECK_THROWS_AS(history_term(spec, z, 1, 0.75), HistoryIncomplete);
}

TEST_CASE("solution operator fixes the homogeneous flow") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 1.0}, -1.0, Nonlinearity::zero(1),
                          {});
  auto cfg = quick_config();
  auto z = bootstrap_trajectory(spec, cfg);
  auto gz = g_apply(spec, zero_control(1.0, 1), z, cfg);
  CHECK(max_node_gap(gz, z) <= 1e-14);
  CHECK((*gz.flow[0].weighted_limit - *z.flow[0].weighted_limit).norm() ==
        0.0);
}

TEST_CASE("zero data stays at zero") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.4, 0.5, 1.0}, -1.0,
                          Nonlinearity::sine(0.3, 1),
                          {ImpulseMap::linear(0.2)}, 0.0);
  auto cfg = quick_config();
  auto zero = constant_trajectory(spec, cfg, 0.0);
  auto gz = g_apply(spec, zero_control(1.0, 1), zero, cfg);
  CHECK(max_node_gap(gz, zero) == 0.0);
  CHECK(gz.flow[0].weighted_limit->norm() == 0.0);
}

TEST_CASE("weighted opening value") {
  auto spec = scalar_spec(0.55, {0.0, 1.0}, -1.0, Nonlinearity::zero(1), {},
                          2.0);
  auto cfg = quick_config();
  auto out = g_apply(spec, zero_control(1.0, 1), bootstrap_trajectory(spec, cfg),
                     cfg);
  const double ge = std::tgamma(0.55);
  CHECK((*out.flow[0].weighted_limit)[0] ==
        doctest::Approx(2.0 / ge).epsilon(1e-14));
  CHECK(out.flow[0].weighted_limit->norm() <=
        spec.A.bound * spec.z0.norm() / ge + 1e-12);
}

TEST_CASE("scalar benchmark") {
  const double eta = 2.0 / 3.0;
  auto spec = scalar_spec(eta, {0.0, 1.0}, -1.0, Nonlinearity::zero(1), {});
  auto cfg = quick_config(32, 1e-10);
  auto res = solve(spec, zero_control(1.0, 1), cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 3);

  const double expected = specfun::mittag_leffler2(eta, eta, -1.0);
  const double got = res.trajectory.eval(1.0)[0];
  CHECK(got == doctest::Approx(expected).epsilon(1e-4));
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));

  CHECK(verify_initial_condition(spec, res.trajectory) <= 1e-3);
}

TEST_CASE("volterra benchmark") {
  // Generator split: flow part zero, feedback through the nonlinearity, so
  // the convolution engine carries the whole solution.
  const double eta = 2.0 / 3.0;
  const double lam = -0.5;
  auto spec = scalar_spec(eta, {0.0, 1.0}, 0.0,
                          Nonlinearity::linear(lam, 1), {});
  const double nu = compute_nu(spec);
  CHECK(nu < 1.0);

  auto cfg = quick_config(32, 1e-11);
  auto res = solve(spec, zero_control(1.0, 1), cfg);
  CHECK(res.report.converged);
  CHECK(res.report.contraction_estimate <= nu + 0.1);

  const double expected = specfun::mittag_leffler2(eta, eta, lam);
  const double got = res.trajectory.eval(1.0)[0];
  CAPTURE(std::abs(got - expected) / expected);
  CHECK(got == doctest::Approx(expected).epsilon(1e-4));

  CHECK(verify_initial_condition(spec, res.trajectory) <= 1e-3);
}

TEST_CASE("mesh convergence of the volterra benchmark") {
  const double eta = 2.0 / 3.0;
  const double lam = -0.5;
  auto spec = scalar_spec(eta, {0.0, 1.0}, 0.0,
                          Nonlinearity::linear(lam, 1), {});
  const double expected = specfun::mittag_leffler2(eta, eta, lam);

  // Terminal values at successive mesh halvings; the change under one
  // halving is bounded by C * mesh^p with p = min(eta, 1-eta).
  const int cells[4] = {16, 32, 64, 128};
  double zend[4];
  for (int i = 0; i < 4; ++i) {
    auto res = solve(spec, zero_control(1.0, 1), quick_config(cells[i], 1e-12));
    zend[i] = res.trajectory.eval(1.0)[0];
  }
  const double p = std::min(eta, 1.0 - eta);
  double cbound = 0.0;
  for (int i = 0; i + 1 < 4; ++i) {
    const double d = std::abs(zend[i + 1] - zend[i]);
    cbound = std::max(cbound, d * std::pow(cells[i + 1], p));
  }
  const double d_mid = std::abs(zend[2] - zend[1]);
  const double d_fine = std::abs(zend[3] - zend[2]);
  MESSAGE("halving deltas ", std::abs(zend[1] - zend[0]), " ", d_mid, " ",
          d_fine, " C ", cbound);
  CHECK(d_fine < d_mid);
  CHECK(std::log2(d_mid / d_fine) >= p - 0.1);

  // The finest run should also sit close to the closed form.
  CHECK(std::abs(zend[3] - expected) <= 1e-5);
}

TEST_CASE("modulus guard") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 1.0}, 0.0,
                          Nonlinearity::linear(-2.0, 1), {});
  CHECK(compute_nu(spec) >= 1.0);
  auto cfg = quick_config();
  CHECK_THROWS_AS(solve(spec, zero_control(1.0, 1), cfg),
                  HypothesisViolated);
}

TEST_CASE("restart from the reset datum") {
  const double eta = 2.0 / 3.0;
  auto spec = scalar_spec(eta, {0.0, 0.4, 0.5, 1.0}, -1.0,
                          Nonlinearity::zero(1), {ImpulseMap::linear(0.5)});
  auto cfg = quick_config(24, 1e-11);
  cfg.allow_divergent = true;  // certificate is conservative; flow is affine
  auto res = solve(spec, zero_control(1.0, 1), cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 4);

  const auto& z = res.trajectory;
  const double left = z.left_limit_flow(1)[0];
  // Reset window holds the mapped left limit pointwise.
  for (const auto& v : z.impulse[0].values)
    CHECK(v[0] == doctest::Approx(0.5 * left).epsilon(1e-12));
  // The next flow window restarts from the mapped datum in the weighted view.
  const double datum = z.left_limit_impulse(1)[0];
  CHECK((*z.flow[1].weighted_limit)[0] ==
        doctest::Approx(datum / std::tgamma(eta)).epsilon(1e-12));
  const double t0 = z.flow[1].nodes.front();
  const double w0 = std::pow(t0 - 0.5, 1.0 - eta) * z.flow[1].values[0][0];
  CHECK(w0 == doctest::Approx(datum / std::tgamma(eta)).epsilon(5e-2));
}

TEST_CASE("sweeps contract random pairs") {
  const double eta = 2.0 / 3.0;
  auto spec = scalar_spec(eta, {0.0, 0.15, 0.7, 1.0}, -1.0,
                          Nonlinearity::sine(0.1, 1),
                          {ImpulseMap::linear(0.2)});
  const double nu = compute_nu(spec);
  REQUIRE(nu < 1.0);
  auto cfg = quick_config(16);
  auto u = zero_control(1.0, 1);

  std::mt19937 gen(0x5eedu);
  std::uniform_real_distribution<double> pick(-1.0, 1.0);
  auto random_traj = [&]() {
    Trajectory z = bootstrap_trajectory(spec, cfg);
    for (auto& seg : z.flow) {
      for (size_t i = 0; i < seg.nodes.size(); ++i)
        seg.values[i][0] = pick(gen) * std::pow(seg.nodes[i] - seg.origin,
                                                eta - 1.0);
      (*seg.weighted_limit)[0] = pick(gen);
    }
    for (auto& seg : z.impulse)
      for (auto& v : seg.values) v[0] = pick(gen);
    return z;
  };

  for (int trial = 0; trial < 5; ++trial) {
    auto z = random_traj();
    auto y = random_traj();
    const double num = trajectory_gap(
        g_apply(spec, u, z, cfg), g_apply(spec, u, y, cfg));
    const double den = trajectory_gap(z, y);
    CAPTURE(trial);
    CHECK(num <= (nu + 0.05) * den);
  }
}

TEST_CASE("uniqueness of the fixed point") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.15, 0.7, 1.0}, -1.0,
                          Nonlinearity::sine(0.1, 1),
                          {ImpulseMap::linear(0.2)});
  auto cfg = quick_config(16, 1e-8);
  auto u = zero_control(1.0, 1);
  auto res = solve(spec, u, cfg);

  Trajectory alt = constant_trajectory(spec, cfg, 0.0);
  double moved = 1.0;
  for (int it = 0; it < cfg.max_picard_iters && moved > cfg.fp_tolerance;
       ++it) {
    Trajectory next = g_apply(spec, u, alt, cfg);
    moved = trajectory_gap(next, alt);
    alt = std::move(next);
  }
  REQUIRE(moved <= cfg.fp_tolerance);
  CHECK(trajectory_gap(res.trajectory, alt) <= 2.0 * cfg.fp_tolerance);
}

TEST_CASE("a-priori bound on solved trajectories") {
  const double eta = 2.0 / 3.0;
  SystemSpec spec;
  spec.eta = eta;
  spec.q = 2.0;
  spec.partition = Partition::from_sequence({0.0, 0.15, 0.7, 1.0});
  spec.A = Generator::spectral(Eigen::VectorXd::Constant(1, -1.0), 1.0, 1.0);
  spec.B = ControlMap::identity(1);
  spec.h = Nonlinearity::modulated_sine(0.025, 1.0 / 3.0, 1, eta,
                                        spec.partition);
  spec.impulses.maps = {ImpulseMap::linear(0.05)};
  spec.z0 = Eigen::VectorXd::Constant(1, 1.0);
  spec.validate();

  auto u = zero_control(1.0, 1);
  auto res = solve(spec, u, quick_config(24, 1e-10));
  auto l3 = compute_lemma3_constants(spec, u);
  const double grow =
      specfun::mittag_leffler(eta, spec.A.bound * spec.h.d * spec.tau());
  CHECK(pc_norm(res.trajectory) <= 1.05 * l3.lambda_cap * grow);

  SUBCASE("perturbation bound between two inputs") {
    SampledFunction v;
    v.origin = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double t = i / 20.0;
      v.nodes.push_back(t);
      v.values.push_back(
          Eigen::VectorXd::Constant(1, 0.3 * std::sin(4.0 * t)));
    }
    auto resv = solve(spec, v, quick_config(24, 1e-10));
    const double gap = trajectory_gap(resv.trajectory, res.trajectory);
    const double E = specfun::mittag_leffler(
        eta, spec.A.bound * spec.h.kappa_tilde * spec.tau());
    const double bound =
        l3.varrho * E / (1.0 - l3.mu * E) * control_lq_norm(spec, v);
    CHECK(gap <= 1.05 * bound);
  }
}

TEST_CASE("budget exhaustion reports the step ratio") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.15, 0.7, 1.0}, -1.0,
                          Nonlinearity::sine(0.1, 1),
                          {ImpulseMap::linear(0.2)});
  auto cfg = quick_config(16, 1e-14);
  cfg.max_picard_iters = 3;
  try {
    solve(spec, zero_control(1.0, 1), cfg);
    FAIL("expected the iteration budget to run out");
  } catch (const NonConvergence& e) {
    CHECK(e.ratio > 0.0);
    CHECK(e.ratio < 1.0);
  }
}

TEST_CASE("continuation freezes solved windows") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.15, 0.7, 1.0}, -1.0,
                          Nonlinearity::sine(0.1, 1),
                          {ImpulseMap::linear(0.2)});
  auto cfg = quick_config(16, 1e-9);
  auto u = zero_control(1.0, 1);
  auto full = solve(spec, u, cfg);
  auto tail = solve_tail(spec, u, cfg, 1, full.trajectory);
  CHECK(max_node_gap(tail.trajectory, full.trajectory) <=
        2.0 * cfg.fp_tolerance);
  for (size_t j = 0; j < full.trajectory.flow[0].values.size(); ++j)
    CHECK(tail.trajectory.flow[0].values[j] ==
          full.trajectory.flow[0].values[j]);

  Trajectory empty;
  CHECK_THROWS_AS(solve_tail(spec, u, cfg, 1, empty), HistoryIncomplete);
}

TEST_CASE("repeated solves are identical") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 0.15, 0.7, 1.0}, -1.0,
                          Nonlinearity::sine(0.1, 1),
                          {ImpulseMap::linear(0.2)});
  auto cfg = quick_config(16, 1e-9);
  auto u = zero_control(1.0, 1);
  auto first = solve(spec, u, cfg);
  auto second = solve(spec, u, cfg);
  CHECK(max_node_gap(first.trajectory, second.trajectory) == 0.0);
  CHECK(first.report.residual_history == second.report.residual_history);
}

TEST_CASE("initial-condition defect") {
  auto spec = scalar_spec(2.0 / 3.0, {0.0, 1.0}, -1.0, Nonlinearity::zero(1),
                          {});
  auto cfg = quick_config(32, 1e-10);
  auto res = solve(spec, zero_control(1.0, 1), cfg);
  const double defect = verify_initial_condition(spec, res.trajectory);
  MESSAGE("homogeneous defect ", defect);
  CHECK(defect <= 1e-3);

  // Zero trajectory with a zero datum has no defect at all.
  auto zspec = scalar_spec(2.0 / 3.0, {0.0, 1.0}, -1.0, Nonlinearity::zero(1),
                           {}, 0.0);
  auto zero = constant_trajectory(zspec, cfg, 0.0);
  CHECK(verify_initial_condition(zspec, zero) == 0.0);

  // Doubling the trajectory shifts the recovered datum to 2 z0.
  Trajectory scaled = res.trajectory;
  for (auto& seg : scaled.flow) {
    for (auto& v : seg.values) v *= 2.0;
    if (seg.weighted_limit) *seg.weighted_limit *= 2.0;
  }
  const double shifted = verify_initial_condition(spec, scaled);
  CHECK(shifted == doctest::Approx(spec.z0.norm()).epsilon(2e-2));
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.mesh_per_interval = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.fp_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.grading = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  CHECK(cfg.effective_grading(0.5) == doctest::Approx(2.0));
  cfg.grading = 1.25;
  CHECK(cfg.effective_grading(0.5) == doctest::Approx(1.25));
}
