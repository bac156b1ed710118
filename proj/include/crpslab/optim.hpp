#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crpslab/models.hpp"

namespace crpslab {

struct NelderMeadConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Initial simplex edge as a fraction of the box width per coordinate.
  double step_fraction = 0.1;
  /// Explicit initial edges; overrides step_fraction when non-empty.
  std::vector<double> step;
  /// Stop when max - min objective over the simplex falls below this.
  double f_tol = 1e-9;
  /// Evaluation budget is max_evals_per_dim * K.
  std::size_t max_evals_per_dim = 2000;
  /// A run whose best value improves by no more than stall_tol over
  /// stall_evals_per_dim * K consecutive evaluations is declared stalled.
  std::size_t stall_evals_per_dim = 50;
  double stall_tol = 1e-10;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  double initial_value = 0.0;
  /// Best value after each iteration; nonincreasing.
  std::vector<double> trace;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  /// false when the run stalled or exhausted its budget.
  bool converged = true;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead minimization. With a box, every trial point is projected into it
/// before evaluation, so all iterates (and the result) are feasible.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const std::optional<ParamBox>& box,
                        const NelderMeadConfig& cfg = {});

}  // namespace crpslab
