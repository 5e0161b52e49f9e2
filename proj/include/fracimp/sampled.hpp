#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "fracimp/errors.hpp"

namespace fracimp {

/// Vector-valued function known at discrete times, with an optional algebraic
/// blow-up at the origin: for weight_exponent = w in [0,1) the weighted view
/// g~(t) = (t - origin)^w g(t) extends continuously to the origin, and
/// `weighted_limit` (when present) stores lim_{t->origin+} g~(t).
///
/// Values are stored raw.  Interpolation runs in the weighted view when
/// w > 0 (it is exact for pure power behavior) and is plain piecewise-linear
/// otherwise.
struct SampledFunction {
  double origin = 0.0;
  std::vector<double> nodes;             // strictly increasing, > origin
  std::vector<Eigen::VectorXd> values;   // one per node
  double weight_exponent = 0.0;          // w in [0,1)
  std::optional<Eigen::VectorXd> weighted_limit;  // lim (t-origin)^w g(t)

  Eigen::Index dim() const {
    return values.empty()
               ? (weighted_limit ? weighted_limit->size() : Eigen::Index(0))
               : values.front().size();
  }

  void validate() const;

  /// g(t) for t in (origin, nodes.back()].  Throws TimeOutsideWindow outside
  /// the span and for t == origin when the function blows up there.
  Eigen::VectorXd eval(double t) const;

  /// g~(t) = (t-origin)^w g(t), defined down to t == origin inclusively when
  /// the limit is known.
  Eigen::VectorXd weighted_eval(double t) const;
};

/// Dense sample of a callable on the given nodes.
template <typename F>
SampledFunction sample_function(F&& f, double origin,
                                std::vector<double> nodes,
                                double weight_exponent = 0.0) {
  SampledFunction out;
  out.origin = origin;
  out.weight_exponent = weight_exponent;
  out.nodes = std::move(nodes);
  out.values.reserve(out.nodes.size());
  for (double t : out.nodes) out.values.push_back(f(t));
  return out;
}

}  // namespace fracimp
