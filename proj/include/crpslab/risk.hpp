#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/fitted_model.hpp"
#include "crpslab/models.hpp"
#include "crpslab/optim.hpp"
#include "crpslab/synthetic.hpp"

namespace crpslab {

struct RiskEstimate {
  double value = 0.0;
  std::size_t n = 0;
  std::vector<double> scores;  // empty unless retained
  /// Sample standard deviation of the scores over sqrt(n); 0 when n < 2.
  double std_error = 0.0;
};

/// Mean CRPS of `model` over `sample`.
RiskEstimate empirical_risk(const FittedModel& model, const Dataset& sample, bool keep_scores = false,
                            const DiscretizationConfig& disc = {});

enum class OptimizerKind { nelder_mead, gradient_descent };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::nelder_mead;
  std::size_t starts = 5;
  /// Default box: initializer +/- box_half_width in every coordinate.
  double box_half_width = 50.0;
  NelderMeadConfig nelder_mead;

  // Mini-batch gradient descent (DRN default).
  std::size_t batch_size = 32;
  double step = 1e-2;
  std::size_t epochs = 200;
  /// Epochs without a new best full-sample risk before the step is halved.
  std::size_t plateau_epochs = 5;
  /// Nelder-Mead refinement of the gradient-descent result when H <= 2.
  bool polish_small = true;
};

struct FitResult {
  std::variant<EmosParams, DrnParams> params;
  double risk = 0.0;
  /// Risk at the data-driven initializer (first start).
  double initial_risk = 0.0;
  /// Best-so-far risk per iteration of the winning start.
  std::vector<double> trace;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = true;
  std::uint64_t seed = 0;
  std::size_t best_start = 0;
  ParamBox box;

  ModelPtr model() const;
};

/// alpha = mean(Y), sigma^2 = var(Y), zero slopes.
EmosParams emos_moment_init(const Dataset& train);

FitResult fit_emos(const Dataset& train, const std::optional<ParamBox>& box, const OptimizerConfig& opt,
                   std::uint64_t seed);

/// H == 0 is the network without hidden units (location and scale intercepts only).
FitResult fit_drn(const Dataset& train, std::size_t hidden, Activation activation,
                  const std::optional<ParamBox>& box, const OptimizerConfig& opt, std::uint64_t seed);

/// Monte-Carlo estimate of E[S(F_X, Y)] under the synthetic truth.
RiskEstimate theoretical_risk_mc(const FittedModel& model, const SyntheticGenerator& truth, std::size_t n_mc,
                                 std::uint64_t seed, const DiscretizationConfig& disc = {});

/// Monte-Carlo over X of the integral of (F_X - F*_X)^2, i.e. R(F) - R(F*).
RiskEstimate excess_risk_exact(const FittedModel& model, const SyntheticGenerator& truth, std::size_t x_mc,
                               std::uint64_t seed);

}  // namespace crpslab
