#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fracimp/errors.hpp"
#include "fracimp/fracints.hpp"
#include "fracimp/generator.hpp"
#include "fracimp/quadrature.hpp"
#include "fracimp/special.hpp"

using namespace fracimp;

namespace {

Eigen::VectorXd heat_lambdas(int L) {
  Eigen::VectorXd lam(L);
  for (int l = 1; l <= L; ++l) lam(l - 1) = -double(l) * double(l);
  return lam;
}

Eigen::VectorXd scal(double v) {
  Eigen::VectorXd out(1);
  out << v;
  return out;
}

}  // namespace

TEST_CASE("flow map basics") {
  Generator H = Generator::spectral(heat_lambdas(8), 1.0, 2.0);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(8);
  z(0) = 1.0;
  // identity at t = 0
  CHECK((semigroup_apply(H, 0.0, z) - z).norm() == 0.0);
  // first mode decays at rate 1
  CHECK(semigroup_apply(H, 1.0, z)(0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // bounded by the declared constant on sampled times
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  Eigen::VectorXd y = Eigen::VectorXd::Random(8);
  for (int k = 0; k < 20; ++k)
    CHECK(semigroup_apply(H, U(rng), y).norm() <= 1.0 * y.norm() + 1e-12);
  CHECK_THROWS_AS(semigroup_apply(H, -0.1, z), TimeOutsideWindow);
  CHECK_THROWS_AS(semigroup_apply(H, 1.0, Eigen::VectorXd::Zero(3)),
                  DimensionMismatch);
}

TEST_CASE("flow map composition law") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.0, 0.8);
  // spectral
  Generator H = Generator::spectral(heat_lambdas(6), 1.0, 2.0);
  Eigen::VectorXd z = Eigen::VectorXd::Random(6);
  for (int k = 0; k < 5; ++k) {
    double s = U(rng), t = U(rng);
    Eigen::VectorXd two = semigroup_apply(H, s, semigroup_apply(H, t, z));
    Eigen::VectorXd one = semigroup_apply(H, s + t, z);
    CHECK((two - one).norm() <= 1e-10 * (1.0 + one.norm()));
  }
  // dense, non-symmetric but dissipative
  Eigen::MatrixXd A(3, 3);
  A << -1.0, 0.4, 0.0,  //
      0.0, -2.0, 0.3,   //
      0.1, 0.0, -1.5;
  Generator D = Generator::dense(A, 1.2, 2.0);
  Eigen::VectorXd y = Eigen::VectorXd::Random(3);
  for (int k = 0; k < 5; ++k) {
    double s = U(rng), t = U(rng);
    Eigen::VectorXd two = semigroup_apply(D, s, semigroup_apply(D, t, y));
    Eigen::VectorXd one = semigroup_apply(D, s + t, y);
    CHECK((two - one).norm() <= 1e-8 * (1.0 + one.norm()));
  }
}

TEST_CASE("generator construction guards") {
  // declared bound below the sampled flow norm is rejected
  Eigen::MatrixXd Aup(1, 1);
  Aup << 0.5;
  CHECK_THROWS_AS(Generator::dense(Aup, 1.0, 2.0), HypothesisViolated);
  CHECK_NOTHROW(Generator::dense(Aup, std::exp(1.0) + 0.01, 2.0));
  CHECK_THROWS_AS(Generator::spectral(scal(0.5), 1.2, 2.0),
                  HypothesisViolated);
  // bound below 1 is impossible
  CHECK_THROWS_AS(Generator::spectral(scal(-1.0), 0.5, 1.0),
                  HypothesisViolated);
  // defective matrix has no eigenbasis
  Eigen::MatrixXd J(2, 2);
  J << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(Generator::dense(J, 2.0, 1.0), NotDiagonalizable);
}

TEST_CASE("fractional flow routes agree") {
  // zero generator: both routes give z / Gamma(eta)
  Generator Z = Generator::spectral(scal(0.0), 1.0, 2.0);
  Eigen::VectorXd z = scal(3.0);
  for (double eta : {0.3, 0.5, 0.9}) {
    double want = 3.0 / specfun::gamma_fn(eta);
    CHECK(frac_operator_apply(Z, eta, 0.7, z, FracRoute::SpectralMl)(0) ==
          doctest::Approx(want).epsilon(1e-12));
    CHECK(frac_operator_apply(Z, eta, 0.7, z, FracRoute::WrightIntegral)(0) ==
          doctest::Approx(want).epsilon(1e-6));
  }
  // cross-validation across orders, rates, times
  for (double eta : {0.3, 0.5, 2.0 / 3.0}) {
    for (double lam : {-0.5, -2.0, -10.0}) {
      Generator G = Generator::spectral(scal(lam), 1.0, 2.0);
      for (double t : {0.05, 0.3, 1.0, 2.0}) {
        double ml = frac_operator_apply(G, eta, t, scal(1.0),
                                        FracRoute::SpectralMl)(0);
        double wr = frac_operator_apply(G, eta, t, scal(1.0),
                                        FracRoute::WrightIntegral)(0);
        CAPTURE(eta);
        CAPTURE(lam);
        CAPTURE(t);
        CHECK(std::abs(wr - ml) <= 1e-5 * std::abs(ml));
      }
    }
  }
  // norm bound M/Gamma(eta)
  Generator H = Generator::spectral(heat_lambdas(6), 1.0, 2.0);
  Eigen::VectorXd y = Eigen::VectorXd::Random(6);
  for (double t : {0.01, 0.4, 1.7}) {
    CHECK(frac_operator_apply(H, 0.6, t, y).norm() <=
          y.norm() / specfun::gamma_fn(0.6) + 1e-12);
  }
  // the modal route needs a spectral generator
  Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(2, 2);
  Generator D = Generator::dense(A, 1.0, 2.0);
  CHECK_THROWS_AS(
      frac_operator_apply(D, 0.5, 1.0, Eigen::VectorXd::Ones(2),
                          FracRoute::SpectralMl),
      RouteUnavailable);
  // dense density-integral route against the scalar modal value
  double wr = frac_operator_apply(D, 0.5, 1.0, Eigen::VectorXd::Ones(2),
                                  FracRoute::WrightIntegral)(0);
  Generator S = Generator::spectral(scal(-1.0), 1.0, 2.0);
  double ml =
      frac_operator_apply(S, 0.5, 1.0, scal(1.0), FracRoute::SpectralMl)(0);
  CHECK(std::abs(wr - ml) <= 1e-5 * std::abs(ml));
}

TEST_CASE("fractional flow is continuous in time") {
  Generator H = Generator::spectral(heat_lambdas(5), 1.0, 2.0);
  Eigen::VectorXd z = Eigen::VectorXd::Random(5);
  Eigen::VectorXd base = frac_operator_apply(H, 0.45, 0.25, z);
  double prev = -1.0;
  for (double delta : {0.1, 0.02, 0.004, 8e-4}) {
    double diff =
        (frac_operator_apply(H, 0.45, 0.25 + delta, z) - base).norm();
    if (prev >= 0.0) CHECK(diff < 0.5 * prev);
    prev = diff;
  }
  CHECK(prev < 1e-2 * z.norm());
}

TEST_CASE("terminal flow integral") {
  // zero data maps to zero
  Generator S = Generator::spectral(scal(-1.0), 1.0, 2.0);
  SampledFunction zf = sample_function([](double) { return scal(0.0); }, 0.2,
                                       quad::graded_mesh(0.3, 1.1, 6, 1.0));
  CHECK(terminal_operator(S, 0.6, zf, 1.1).norm() == 0.0);

  // zero generator, constant data: c (T-p)^eta / Gamma(eta+1)
  Generator Z = Generator::spectral(scal(0.0), 1.0, 2.0);
  for (double eta : {0.4, 0.7}) {
    SampledFunction cf = sample_function([](double) { return scal(2.5); },
                                         0.2, quad::graded_mesh(0.25, 1.1, 8, 1.0));
    double want =
        2.5 * std::pow(0.9, eta) / specfun::gamma_fn(eta + 1.0);
    CHECK(terminal_operator(Z, eta, cf, 1.1)(0) ==
          doctest::Approx(want).epsilon(1e-12));
  }

  // decaying scalar mode vs an independent singularity-flattened oracle:
  // substituting v = (T-s)^eta turns the integral into
  // (1/eta) int_0^{(T-lo)^eta} E_{eta,eta}(lam v) f(T - v^{1/eta}) dv with a
  // smooth integrand
  {
    double eta = 0.55, lo = 0.1, T = 1.3, lam = -1.0;
    auto ffun = [](double s) { return std::cos(2.0 * s); };
    SampledFunction f = sample_function(
        [&](double s) { return scal(ffun(s)); }, lo,
        quad::graded_mesh(0.1 + 1e-3, T, 400, 1.0));
    double got = terminal_operator(S, eta, f, T)(0);
    double want = quad::integrate_cells(
        [&](double v) {
          return specfun::mittag_leffler2(eta, eta, lam * v) *
                 ffun(T - std::pow(v, 1.0 / eta)) / eta;
        },
        quad::graded_mesh(0.0, std::pow(T - lo, eta), 300, 3.0), 12);
    CHECK(got == doctest::Approx(want).epsilon(1e-4));
    CHECK(std::abs(got - want) < 5e-6);  // engine measured at 7.2e-7 here
  }

  // linearity
  {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Generator H = Generator::spectral(heat_lambdas(4), 1.0, 2.0);
    auto nodes = quad::graded_mesh(0.05, 1.0, 12, 1.0);
    auto rnd = [&](double) {
      Eigen::VectorXd v(4);
      for (int i = 0; i < 4; ++i) v(i) = U(rng);
      return v;
    };
    SampledFunction f = sample_function(rnd, 0.0, nodes);
    SampledFunction g = sample_function(rnd, 0.0, nodes);
    SampledFunction mix = f;
    for (std::size_t j = 0; j < mix.values.size(); ++j)
      mix.values[j] = 0.7 * f.values[j] - 1.9 * g.values[j];
    Eigen::VectorXd lhs = terminal_operator(H, 0.5, mix, 1.0);
    Eigen::VectorXd rhs = 0.7 * terminal_operator(H, 0.5, f, 1.0) -
                          1.9 * terminal_operator(H, 0.5, g, 1.0);
    CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
  }

  // weighted data with a zero generator: exact beta-function closed form
  //   (1/Gamma(eta)) * integral (T-s)^{eta-1} (s-lo)^{-w} ds ... times
  //   Gamma(eta) from E_{eta,eta}(0) = 1/Gamma(eta)
  {
    double eta = 0.6, w = 0.3, lo = 0.5, T = 1.25;
    SampledFunction f = sample_function(
        [&](double s) { return scal(std::pow(s - lo, -w)); }, lo,
        quad::graded_mesh(lo + 1e-4, T, 127, 2.0), w);
    f.weighted_limit = scal(1.0);
    double got = terminal_operator(Z, eta, f, T)(0);
    double want = std::pow(T - lo, eta - w) *
                  specfun::beta_fn(eta, 1.0 - w) / specfun::gamma_fn(eta);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }

  // dense non-symmetric generator vs a hand-diagonalized modal oracle using
  // the same singularity-flattening substitution (the matrix is triangular,
  // so its eigenbasis is written down directly)
  {
    Eigen::MatrixXd A(2, 2);
    A << -1.0, 0.3, 0.0, -2.0;
    Generator D = Generator::dense(A, 1.1, 2.0);
    double eta = 0.5, lo = 0.0, T = 0.9;
    auto vfun = [](double s) {
      Eigen::VectorXd v(2);
      v << std::sin(s) + 0.2, std::cos(s);
      return v;
    };
    SampledFunction f =
        sample_function(vfun, lo, quad::graded_mesh(1e-3, T, 400, 1.0));
    Eigen::VectorXd got = flow_convolution(D, eta, f, T);
    Eigen::MatrixXd V(2, 2), Vinv(2, 2);
    V << 1.0, -0.3, 0.0, 1.0;
    Vinv << 1.0, 0.3, 0.0, 1.0;
    Eigen::Vector2d lam(-1.0, -2.0);
    Eigen::VectorXd want = Eigen::VectorXd::Zero(2);
    auto vmesh = quad::graded_mesh(0.0, std::pow(T - lo, eta), 300, 3.0);
    for (int l = 0; l < 2; ++l) {
      Eigen::Vector2d m = Eigen::Vector2d::Zero();
      m(l) = quad::integrate_cells(
          [&](double v) {
            double s = T - std::pow(v, 1.0 / eta);
            return specfun::mittag_leffler2(eta, eta, lam(l) * v) *
                   (Vinv * vfun(s))(l) / eta;
          },
          vmesh, 12);
      want += V * m;
    }
    CHECK((got - want).norm() <= 1e-5 * (1.0 + want.norm()));
  }
}

TEST_CASE("control map") {
  ControlMap I = ControlMap::identity(3);
  Eigen::VectorXd u(3);
  u << 1.0, -2.0, 0.5;
  CHECK((I.apply(u) - u).norm() == 0.0);
  CHECK((I.pinv_apply(u) - u).norm() == 0.0);
  CHECK(I.full_row_rank());
  CHECK(I.bound == 1.0);

  Eigen::MatrixXd B(2, 2);
  B << 1.0, 0.0, 0.0, 0.0;
  ControlMap Bm = ControlMap::dense(B);
  CHECK(Bm.bound == doctest::Approx(1.0));
  CHECK_FALSE(Bm.full_row_rank());
  Eigen::VectorXd v(2);
  v << 1.0, 1.0;
  Eigen::VectorXd p = Bm.pinv_apply(v);
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::MatrixXd R(2, 3);
  R << 1.0, 0.0, 1.0, 0.0, 2.0, 0.0;
  ControlMap Rm = ControlMap::dense(R);
  CHECK(Rm.full_row_rank());
  // least-norm preimage reproduces the target through the map
  Eigen::VectorXd t2(2);
  t2 << 0.3, -1.1;
  CHECK((Rm.apply(Rm.pinv_apply(t2)) - t2).norm() <= 1e-12);
  CHECK_THROWS_AS(Rm.apply(t2), DimensionMismatch);
}
