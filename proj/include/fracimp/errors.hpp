#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace fracimp {

/// Base class for all library failures; `what()` carries the diagnostic.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A fractional order or exponent left its admissible range.
struct OrderOutOfRange : Error {
  using Error::Error;
};

/// A series or quadrature result cannot be trusted to the requested accuracy.
struct AccuracyLoss : Error {
  using Error::Error;
};

/// A quadrature produced a non-finite value or could not be assembled.
struct QuadratureFailure : Error {
  using Error::Error;
};

/// A finite-difference stencil would step outside the sampled domain.
struct StencilUnderflow : Error {
  using Error::Error;
};

/// Vector/matrix dimensions do not agree.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// The requested evaluation route does not apply to this operator kind.
struct RouteUnavailable : Error {
  using Error::Error;
};

/// A dense generator could not be diagonalized reliably.
struct NotDiagonalizable : Error {
  using Error::Error;
};

/// Partition times are not strictly interleaved as 0 = p0 < t1 < p1 < ... < a.
struct BadPartition : Error {
  using Error::Error;
};

/// A norm or quadrature was requested over an empty time interval.
struct EmptyInterval : Error {
  using Error::Error;
};

/// An impulse map was evaluated outside its window.
struct TimeOutsideWindow : Error {
  using Error::Error;
};

/// An interval or impulse index does not exist in the partition.
struct IndexOutOfRange : Error {
  using Error::Error;
};

/// A solve or steering run was started while a required hypothesis fails.
struct HypothesisViolated : Error {
  using Error::Error;
};

/// A history-dependent quantity was requested while an earlier window of the
/// trajectory is still unsolved.
struct HistoryIncomplete : Error {
  using Error::Error;
};

/// An iteration exhausted its budget before reaching tolerance; `ratio`
/// records the worst observed step-contraction factor (NaN when fewer than
/// two steps ran).
struct NonConvergence : Error {
  double ratio;
  explicit NonConvergence(
      const std::string& msg,
      double ratio_value = std::numeric_limits<double>::quiet_NaN())
      : Error(msg), ratio(ratio_value) {}
};

/// The discretized terminal operator is too ill-conditioned to invert.
struct SingularTerminalOperator : Error {
  using Error::Error;
};

/// Configuration file could not be parsed or validated; message is line-anchored.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace fracimp
