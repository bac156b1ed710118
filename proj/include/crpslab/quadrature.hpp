#pragma once

#include <functional>
#include <span>

namespace crpslab {

struct QuadratureResult {
  double value = 0.0;
  bool converged = true;
};

/// Integral over [breakpoints.front(), breakpoints.back()] of a function that is
/// smooth between consecutive breakpoints. `right` is evaluated at the left end of
/// each segment and `left` at its right end (one-sided limits), so jumps located
/// at breakpoints do not pollute the Simpson estimates. Each segment is refined
/// adaptively with a share of `abs_tol` proportional to its length.
QuadratureResult integrate_piecewise(const std::function<double(double)>& right,
                                     const std::function<double(double)>& left,
                                     std::span<const double> breakpoints, double abs_tol,
                                     int max_depth);

}  // namespace crpslab
