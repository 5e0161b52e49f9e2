#include "fracimp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fracimp/errors.hpp"
#include "fracimp/quadrature.hpp"

namespace fracimp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeSlack = 1e-12;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

double Partition::max_flow_length() const {
  double longest = 0.0;
  for (int r = 0; r <= m(); ++r) longest = std::max(longest, flow_hi(r) - flow_lo(r));
  return longest;
}

Partition Partition::from_sequence(const std::vector<double>& seq) {
  if (seq.size() < 2 || seq.size() % 2 != 0)
    throw BadPartition("time list must interleave rest and impulse times: "
                       "p0, t1, p1, ..., tm, pm, t_{m+1} (even count >= 2), got " +
                       std::to_string(seq.size()) + " entries");
  Partition out;
  const int m = static_cast<int>(seq.size()) / 2 - 1;
  out.p.resize(static_cast<size_t>(m) + 2);
  out.t.resize(static_cast<size_t>(m) + 2);
  out.t[0] = 0.0;
  for (int r = 0; r <= m; ++r) {
    out.p[static_cast<size_t>(r)] = seq[static_cast<size_t>(2 * r)];
    out.t[static_cast<size_t>(r) + 1] = seq[static_cast<size_t>(2 * r) + 1];
  }
  out.p.back() = out.t.back();  // the final flow window closes the horizon
  out.validate();
  return out;
}

void Partition::validate() const {
  if (p.size() < 2 || t.size() != p.size())
    throw BadPartition("partition needs padded sequences of equal length >= 2");
  for (double v : p)
    if (!std::isfinite(v)) throw BadPartition("non-finite rest time");
  for (double v : t)
    if (!std::isfinite(v)) throw BadPartition("non-finite impulse time");
  if (p.front() != 0.0) throw BadPartition("time grid must start at 0, got " + fmt(p.front()));
  const int mm = m();
  for (int r = 0; r <= mm; ++r) {
    if (!(flow_lo(r) < flow_hi(r)))
      throw BadPartition("flow window " + std::to_string(r) + " collapsed: (" +
                         fmt(flow_lo(r)) + ", " + fmt(flow_hi(r)) + "]");
    if (r >= 1 && !(impulse_lo(r) < impulse_hi(r)))
      throw BadPartition("impulse window " + std::to_string(r) + " collapsed: (" +
                         fmt(impulse_lo(r)) + ", " + fmt(impulse_hi(r)) + "]");
  }
  if (t.back() != p.back())
    throw BadPartition("final impulse time must equal the horizon");
}

Partition::Location Partition::locate(double time) const {
  if (!std::isfinite(time) || time <= 0.0 || time > a() * (1.0 + kTimeSlack) + kTimeSlack)
    throw TimeOutsideWindow("time " + fmt(time) + " outside (0, " + fmt(a()) + "]");
  const int mm = m();
  for (int r = 0; r <= mm; ++r) {
    if (time <= flow_hi(r)) return {r, false};
    if (r < mm && time <= impulse_hi(r + 1)) return {r + 1, true};
  }
  return {mm, false};  // time within rounding slack of the horizon
}

double Partition::weight_origin(double time) const {
  const Location loc = locate(time);
  return loc.impulse ? p[static_cast<size_t>(loc.index) - 1]
                     : p[static_cast<size_t>(loc.index)];
}

ImpulseMap ImpulseMap::zero() { return {}; }

ImpulseMap ImpulseMap::linear(double coeff) {
  if (std::abs(coeff) > 1.0)
    throw HypothesisViolated("reset gain |" + fmt(coeff) +
                             "| exceeds 1; Lipschitz certificates are capped at 1");
  ImpulseMap out;
  out.kind = Kind::Linear;
  out.coeff = coeff;
  out.b = out.c = std::abs(coeff);
  return out;
}

ImpulseMap ImpulseMap::sine(double coeff) {
  ImpulseMap out = linear(coeff);
  out.kind = Kind::Sine;
  return out;
}

Eigen::VectorXd ImpulseMap::apply(double, const Eigen::VectorXd& z) const {
  switch (kind) {
    case Kind::Zero:
      return Eigen::VectorXd::Zero(z.size());
    case Kind::Linear:
      return coeff * z;
    case Kind::Sine:
      return coeff * z.array().sin().matrix();
  }
  throw Error("unreachable impulse kind");
}

ImpulseSpec ImpulseSpec::none(int m) {
  ImpulseSpec out;
  out.maps.assign(static_cast<size_t>(m), ImpulseMap::zero());
  return out;
}

Eigen::VectorXd impulse_apply(const ImpulseSpec& spec, const Partition& part,
                              int r, double time,
                              const Eigen::VectorXd& z_at_tr) {
  if (r < 1 || r > part.m() || r > static_cast<int>(spec.maps.size()))
    throw IndexOutOfRange("no reset map with index " + std::to_string(r) +
                          " (have " + std::to_string(part.m()) + ")");
  if (!(time > part.impulse_lo(r)) || time > part.impulse_hi(r) * (1.0 + kTimeSlack))
    throw TimeOutsideWindow("time " + fmt(time) + " outside window (" +
                            fmt(part.impulse_lo(r)) + ", " + fmt(part.impulse_hi(r)) + "]");
  return spec.maps[static_cast<size_t>(r) - 1].apply(time, z_at_tr);
}

Nonlinearity Nonlinearity::zero(Eigen::Index n) {
  Nonlinearity out;
  out.n = n;
  return out;
}

Nonlinearity Nonlinearity::linear(double coeff, Eigen::Index n) {
  Nonlinearity out;
  out.kind = Kind::Linear;
  out.n = n;
  out.coeff = coeff;
  out.kappa = std::abs(coeff);
  // no finite time-weighted certificate: the gain does not vanish at p_r
  out.kappa_tilde = out.d = (coeff == 0.0 ? 0.0 : kInf);
  return out;
}

Nonlinearity Nonlinearity::sine(double delta, Eigen::Index n) {
  Nonlinearity out;
  out.kind = Kind::Sine;
  out.n = n;
  out.coeff = delta;
  out.kappa = std::abs(delta);
  out.kappa_tilde = (delta == 0.0 ? 0.0 : kInf);
  out.d = 0.0;  // bounded map: the whole image sits in varsigma
  return out;
}

namespace {

// Shared certificate arithmetic of the two modulated forms, whose pointwise
// gain is 2|delta|(t - p_r)^beta:
//   kappa       = 2|delta| max(1, Lmax)^beta,
//   kappa_tilde = d = 2|delta| max(1, Lmax)^{beta-(1-eta)}  for beta >= 1-eta
// with Lmax the longest block p_{r+1} - p_r (the bound caps the modulation
// factor at 1 on sub-unit blocks, matching the flat published constants).
void modulated_certificates(Nonlinearity& h, double eta, const Partition& part) {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("order must lie in (0,1), got " + fmt(eta));
  if (h.beta < 0.0)
    throw OrderOutOfRange("modulation exponent must be nonnegative, got " + fmt(h.beta));
  double lmax = 0.0;
  for (size_t r = 0; r + 1 < part.p.size(); ++r)
    lmax = std::max(lmax, part.p[r + 1] - part.p[r]);
  const double gain = 2.0 * std::abs(h.coeff);
  h.cert_eta = eta;
  h.kappa = gain * std::pow(std::max(1.0, lmax), h.beta);
  if (h.beta >= 1.0 - eta - 1e-14) {
    h.kappa_tilde = h.d = gain * std::pow(std::max(1.0, lmax), h.beta - (1.0 - eta));
  } else {
    // modulation too weak to absorb the (t-p_r)^{1-eta} weight
    h.kappa_tilde = h.d = (h.coeff == 0.0 ? 0.0 : kInf);
  }
}

}  // namespace

Nonlinearity Nonlinearity::modulated_sine(double delta, double beta_exp,
                                          Eigen::Index n, double eta,
                                          const Partition& part) {
  Nonlinearity out;
  out.kind = Kind::ModulatedSine;
  out.n = n;
  out.coeff = delta;
  out.beta = beta_exp;
  modulated_certificates(out, eta, part);
  return out;
}

Nonlinearity Nonlinearity::heat_pointwise(double delta, double beta_exp,
                                          Eigen::Index modes, double eta,
                                          const Partition& part) {
  Nonlinearity out;
  out.kind = Kind::HeatPointwise;
  out.n = modes;
  out.coeff = delta;
  out.beta = beta_exp;
  modulated_certificates(out, eta, part);

  // Collocation on [0,pi]: 256 Simpson cells, orthonormal sine modes.  The
  // uniform grid makes the discrete mass matrix analysis*synth the exact
  // identity for modes below the grid's Nyquist index, so the certified
  // constants transfer to the discretized map verbatim.
  const int n_grid = 257;
  const double pi = std::acos(-1.0);
  const double hx = pi / (n_grid - 1);
  out.synth.resize(n_grid, modes);
  Eigen::VectorXd w(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    const double x = i * hx;
    for (Eigen::Index l = 0; l < modes; ++l)
      out.synth(i, l) = std::sqrt(2.0 / pi) * std::sin(static_cast<double>(l + 1) * x);
    const bool edge = (i == 0 || i == n_grid - 1);
    w(i) = hx / 3.0 * (edge ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
  }
  out.analysis = out.synth.transpose() * w.asDiagonal();
  out.one_coeffs = out.analysis * Eigen::VectorXd::Ones(n_grid);
  const double defect = (out.analysis * out.synth -
                         Eigen::MatrixXd::Identity(modes, modes))
                            .norm();
  if (defect > 1e-10)
    throw QuadratureFailure("collocation grid cannot resolve " +
                            std::to_string(modes) + " modes (mass defect " + fmt(defect) + ")");
  return out;
}

Eigen::VectorXd Nonlinearity::eval(double time, const Eigen::VectorXd& z,
                                   const Partition& part) const {
  if (z.size() != n)
    throw DimensionMismatch("state has dimension " + std::to_string(z.size()) +
                            ", nonlinearity expects " + std::to_string(n));
  switch (kind) {
    case Kind::Zero:
      return Eigen::VectorXd::Zero(n);
    case Kind::Linear:
      return coeff * z;
    case Kind::Sine:
      return coeff * z.array().sin().matrix();
    case Kind::ModulatedSine: {
      const double dt = time - part.weight_origin(time);
      return coeff * std::pow(dt, beta) * (z.array() + z.array().sin()).matrix();
    }
    case Kind::HeatPointwise: {
      const double dt = time - part.weight_origin(time);
      const Eigen::ArrayXd grid = (synth * z).array();
      const Eigen::ArrayXd pointwise =
          (1.0 + dt * dt) + coeff * std::pow(dt, beta) * (grid + grid.sin());
      return analysis * pointwise.matrix();
    }
  }
  throw Error("unreachable nonlinearity kind");
}

double Nonlinearity::varsigma(double time, const Partition& part) const {
  switch (kind) {
    case Kind::Zero:
    case Kind::Linear:
    case Kind::ModulatedSine:
      return 0.0;
    case Kind::Sine:
      return std::abs(coeff) * std::sqrt(static_cast<double>(n));
    case Kind::HeatPointwise: {
      const double dt = time - part.weight_origin(time);
      return (1.0 + dt * dt) * std::sqrt(std::acos(-1.0));
    }
  }
  throw Error("unreachable nonlinearity kind");
}

double Nonlinearity::varsigma_lq(const Partition& part, double q) const {
  if (!(q >= 1.0) || !std::isfinite(q))
    throw OrderOutOfRange("integrability exponent must be finite and >= 1, got " + fmt(q));
  std::vector<double> breaks;
  breaks.push_back(0.0);
  for (int r = 1; r <= part.m(); ++r) {
    breaks.push_back(part.impulse_lo(r));
    breaks.push_back(part.impulse_hi(r));
  }
  breaks.push_back(part.a());
  const double integral = quad::integrate_cells(
      [&](double s) { return std::pow(varsigma(s, part), q); }, breaks, 12);
  return std::pow(integral, 1.0 / q);
}

namespace {

// Probe draw shared by the certificate checks: time inside a random block,
// states with a log-uniform scale so both small- and large-amplitude
// regimes are exercised.
struct ProbeDraw {
  double time;
  double origin;
  Eigen::VectorXd z;
  Eigen::VectorXd y;
};

ProbeDraw draw_probe(std::mt19937& gen, const Partition& part, Eigen::Index n,
                     bool impulse_window) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-1.0, 2.0);
  ProbeDraw out;
  if (impulse_window) {
    std::uniform_int_distribution<int> pick(1, part.m());
    const int r = pick(gen);
    const double lo = part.impulse_lo(r), hi = part.impulse_hi(r);
    out.time = lo + (hi - lo) * std::max(unit(gen), 1e-6);
    out.origin = part.p[static_cast<size_t>(r) - 1];
  } else {
    std::uniform_int_distribution<int> pick(0, part.m());
    const int r = pick(gen);
    const double lo = part.p[static_cast<size_t>(r)];
    const double hi = part.p[static_cast<size_t>(r) + 1];
    out.time = lo + (hi - lo) * std::max(unit(gen), 1e-6);
    out.origin = lo;
  }
  const double rz = std::pow(10.0, expo(gen));
  const double ry = std::pow(10.0, expo(gen));
  out.z.resize(n);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.z(i) = rz * (2.0 * unit(gen) - 1.0);
    out.y(i) = ry * (2.0 * unit(gen) - 1.0);
  }
  return out;
}

void certify(double lhs, double rhs, double scale, const char* label) {
  if (lhs > rhs * (1.0 + 1e-9) + 1e-12 * (1.0 + scale))
    throw HypothesisViolated(std::string(label) + " certificate violated: ratio " +
                             fmt(lhs) + " > bound " + fmt(rhs));
}

}  // namespace

void verify_nonlinearity(const Nonlinearity& h, const Partition& part,
                         double eta) {
  std::mt19937 gen(0x5eed1u);
  for (int probe = 0; probe < 1000; ++probe) {
    const ProbeDraw pd = draw_probe(gen, part, h.n, false);
    const Eigen::VectorXd hz = h.eval(pd.time, pd.z, part);
    const Eigen::VectorXd hy = h.eval(pd.time, pd.y, part);
    const double dz = (pd.z - pd.y).norm();
    const double weight = std::pow(pd.time - pd.origin, 1.0 - eta);
    const double scale = pd.z.norm() + pd.y.norm();
    if (std::isfinite(h.kappa))
      certify((hz - hy).norm(), h.kappa * dz, scale, "Lipschitz");
    if (std::isfinite(h.kappa_tilde))
      certify((hz - hy).norm(), h.kappa_tilde * weight * dz, scale,
              "weighted Lipschitz");
    if (std::isfinite(h.d))
      certify(hz.norm(), h.varsigma(pd.time, part) + h.d * weight * pd.z.norm(),
              scale, "growth");
  }
}

void verify_impulses(const ImpulseSpec& spec, const Partition& part,
                     Eigen::Index n) {
  if (part.m() == 0) return;
  std::mt19937 gen(0x5eed2u);
  for (int probe = 0; probe < 1000; ++probe) {
    const ProbeDraw pd = draw_probe(gen, part, n, true);
    const int r = part.locate(pd.time).index;
    const ImpulseMap& map = spec.maps[static_cast<size_t>(r) - 1];
    const Eigen::VectorXd fz = map.apply(pd.time, pd.z);
    const Eigen::VectorXd fy = map.apply(pd.time, pd.y);
    const double scale = pd.z.norm() + pd.y.norm();
    certify((fz - fy).norm(), map.b * (pd.z - pd.y).norm(), scale, "reset Lipschitz");
    certify(fz.norm(), map.c * pd.z.norm(), scale, "reset growth");
  }
}

void SystemSpec::validate() const {
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("order must lie in (0,1), got " + fmt(eta));
  if (!(q > 1.0) || !std::isfinite(q))
    throw HypothesisViolated("integrability exponent must be finite and exceed 1, got " + fmt(q));
  partition.validate();
  const Eigen::Index nn = A.dim();
  if (B.state_dim() != nn)
    throw DimensionMismatch("input map lands in dimension " +
                            std::to_string(B.state_dim()) + ", state has " +
                            std::to_string(nn));
  if (z0.size() != nn)
    throw DimensionMismatch("initial datum has dimension " +
                            std::to_string(z0.size()) + ", state has " +
                            std::to_string(nn));
  if (h.n != nn)
    throw DimensionMismatch("nonlinearity acts on dimension " +
                            std::to_string(h.n) + ", state has " + std::to_string(nn));
  if (static_cast<int>(impulses.maps.size()) != partition.m())
    throw DimensionMismatch("partition has " + std::to_string(partition.m()) +
                            " impulse windows but " +
                            std::to_string(impulses.maps.size()) + " reset maps");
  if (A.horizon < partition.a() * (1.0 - kTimeSlack))
    throw HypothesisViolated("generator growth bound certified only up to " +
                             fmt(A.horizon) + " but the problem runs to " +
                             fmt(partition.a()));
  if (h.cert_eta >= 0.0 && std::abs(h.cert_eta - eta) > 1e-12)
    throw HypothesisViolated("nonlinearity certificates derived for order " +
                             fmt(h.cert_eta) + ", problem has " + fmt(eta));
  for (const ImpulseMap& map : impulses.maps)
    if (map.b > 1.0 || map.c > 1.0 || map.b < 0.0 || map.c < 0.0)
      throw HypothesisViolated("reset certificates must lie in [0,1]");
  verify_nonlinearity(h, partition, eta);
  verify_impulses(impulses, partition, nn);
}

Eigen::Index Trajectory::dim() const {
  if (!flow.empty()) return flow.front().dim();
  return 0;
}

void Trajectory::validate() const {
  partition.validate();
  if (!(eta > 0.0 && eta < 1.0))
    throw OrderOutOfRange("order must lie in (0,1), got " + fmt(eta));
  const int mm = partition.m();
  if (static_cast<int>(flow.size()) != mm + 1 ||
      static_cast<int>(impulse.size()) != mm)
    throw DimensionMismatch("trajectory must carry " + std::to_string(mm + 1) +
                            " flow segments and " + std::to_string(mm) +
                            " impulse segments");
  const double slack = kTimeSlack * std::max(1.0, partition.a());
  const Eigen::Index nn = dim();
  for (int r = 0; r <= mm; ++r) {
    const SampledFunction& seg = flow[static_cast<size_t>(r)];
    if (seg.nodes.empty()) throw EmptyInterval("flow window " + std::to_string(r) + " has no samples");
    seg.validate();
    if (seg.dim() != nn) throw DimensionMismatch("segment dimensions differ");
    if (std::abs(seg.origin - partition.flow_lo(r)) > slack)
      throw BadPartition("flow segment " + std::to_string(r) +
                         " is anchored at " + fmt(seg.origin) + ", window opens at " +
                         fmt(partition.flow_lo(r)));
    if (seg.nodes.back() < partition.flow_hi(r) - slack ||
        seg.nodes.back() > partition.flow_hi(r) + slack)
      throw BadPartition("flow segment " + std::to_string(r) +
                         " must end exactly at the window close");
  }
  for (int r = 1; r <= mm; ++r) {
    const SampledFunction& seg = impulse[static_cast<size_t>(r) - 1];
    if (seg.nodes.empty()) throw EmptyInterval("impulse window " + std::to_string(r) + " has no samples");
    seg.validate();
    if (seg.dim() != nn) throw DimensionMismatch("segment dimensions differ");
    if (seg.nodes.front() < partition.impulse_lo(r) - slack ||
        seg.nodes.back() < partition.impulse_hi(r) - slack ||
        seg.nodes.back() > partition.impulse_hi(r) + slack)
      throw BadPartition("impulse segment " + std::to_string(r) +
                         " does not span its window");
  }
}

Eigen::VectorXd Trajectory::eval(double time) const {
  const Partition::Location loc = partition.locate(time);
  const SampledFunction& seg =
      loc.impulse ? impulse[static_cast<size_t>(loc.index) - 1]
                  : flow[static_cast<size_t>(loc.index)];
  return seg.eval(std::min(time, seg.nodes.back()));
}

Eigen::VectorXd Trajectory::left_limit_flow(int r) const {
  if (r < 1 || r > partition.m() + 1)
    throw IndexOutOfRange("flow left limits exist for r = 1.." +
                          std::to_string(partition.m() + 1));
  return flow[static_cast<size_t>(r) - 1].values.back();
}

Eigen::VectorXd Trajectory::left_limit_impulse(int r) const {
  if (r < 1 || r > partition.m())
    throw IndexOutOfRange("impulse left limits exist for r = 1.." +
                          std::to_string(partition.m()));
  return impulse[static_cast<size_t>(r) - 1].values.back();
}

namespace {

// Sup of (t - origin)^{1-eta} |seg(t)| over the segment: sample nodes,
// 3 probes per cell, 3 probes in the gap between the window opening and the
// first node, and the weighted limit itself when the segment's own weight
// matches (then the weighted view is piecewise linear and the limit is the
// exact left-end value).
double weighted_sup(const SampledFunction& seg, double origin, double eta) {
  double best = 0.0;
  const double w = 1.0 - eta;
  auto candidate = [&](double t, const Eigen::VectorXd& value) {
    best = std::max(best, std::pow(t - origin, w) * value.norm());
  };
  if (seg.weighted_limit && std::abs(seg.weight_exponent - w) < 1e-12 &&
      std::abs(seg.origin - origin) < 1e-12)
    best = std::max(best, seg.weighted_limit->norm());
  for (size_t i = 0; i < seg.nodes.size(); ++i) candidate(seg.nodes[i], seg.values[i]);
  auto probe_span = [&](double lo, double hi) {
    for (int j = 1; j <= 3; ++j) {
      const double t = lo + (hi - lo) * j / 4.0;
      candidate(t, seg.eval(t));
    }
  };
  if (seg.nodes.front() > seg.origin) probe_span(seg.origin, seg.nodes.front());
  for (size_t i = 0; i + 1 < seg.nodes.size(); ++i)
    probe_span(seg.nodes[i], seg.nodes[i + 1]);
  return best;
}

}  // namespace

double pc_norm(const Trajectory& z) {
  const int mm = z.partition.m();
  if (static_cast<int>(z.flow.size()) != mm + 1 ||
      static_cast<int>(z.impulse.size()) != mm)
    throw EmptyInterval("trajectory does not cover every window");
  for (const SampledFunction& seg : z.flow)
    if (seg.nodes.empty()) throw EmptyInterval("flow window has no samples");
  for (const SampledFunction& seg : z.impulse)
    if (seg.nodes.empty()) throw EmptyInterval("impulse window has no samples");
  double best = 0.0;
  for (int r = 0; r <= mm; ++r) {
    const double origin = z.partition.p[static_cast<size_t>(r)];
    best = std::max(best, weighted_sup(z.flow[static_cast<size_t>(r)], origin, z.eta));
    if (r < mm)
      best = std::max(best, weighted_sup(z.impulse[static_cast<size_t>(r)], origin, z.eta));
  }
  return best;
}

std::vector<double> window_nodes(double lo, double hi, int n_cells,
                                 double grading) {
  std::vector<double> mesh = quad::graded_mesh(lo, hi, n_cells, grading);
  mesh.erase(mesh.begin());
  return mesh;
}

}  // namespace fracimp
