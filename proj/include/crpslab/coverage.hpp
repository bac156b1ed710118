#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crpslab/forest.hpp"

namespace crpslab {

enum class CoverageScenario { estimation, selection, aggregation, constant };

std::string to_string(CoverageScenario s);
CoverageScenario coverage_scenario_from_string(const std::string& name);

/// Monte-Carlo check of the high-probability bounds on synthetic truths.
///
///   estimation:  EMOS fitted on n draws of the linear preset, parameters in
///                [-box, box]^K; error is R(fit) - R(truth), exact given X and
///                averaged over x_mc draws of X (the truth lies in the box).
///   selection:   KNN(knn_k) vs DRF trained on n_train draws of the sine preset,
///                selected on N validation draws; regret against the oracle.
///   aggregation: same candidates, convex weights on N validation draws; oracle is
///                the best point of the simplex grid.
///   constant:    selection on a noiseless constant truth (regret is exactly 0).
struct CoverageConfig {
  CoverageScenario scenario = CoverageScenario::selection;
  std::size_t reps = 200;
  /// n for estimation, N otherwise. Empty selects the scenario default.
  std::vector<std::size_t> grid;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::size_t x_mc = 4000;
  std::size_t n_train = 500;
  std::size_t knn_k = 10;
  DrfHyper drf = [] {
    DrfHyper h;
    h.num_trees = 100;
    h.mtry = 1;
    return h;
  }();
  double box_half_width = 10.0;
  double grid_step = 0.02;
  std::size_t dim = 1;
  std::size_t threads = 0;
  /// Smallest accepted reps; the slope study lowers it.
  std::size_t min_reps = 50;
};

struct CoveragePoint {
  std::size_t size = 0;
  std::vector<double> values;      // estimation error or regret per rep
  std::vector<double> std_errors;  // Monte-Carlo standard error per rep
  std::vector<double> bounds;      // bound per rep (data dependent for regret)
  std::vector<bool> valid;         // side condition met
  std::vector<bool> flagged;       // optimizer did not converge
  double coverage = 0.0;           // fraction of reps with value <= bound
  double median = 0.0;
};

struct CoverageReport {
  CoverageConfig config;
  std::vector<CoveragePoint> points;
  /// Least-squares slope of log(median) against log(size); NaN when undefined.
  double slope = 0.0;
  /// 2 sqrt(delta (1 - delta) / reps).
  double slack = 0.0;
  /// 1 - delta - slack.
  double threshold = 0.0;
  std::string bound_name;
  double beta1 = 0.0;
  double beta2 = 0.0;  // estimation only
  double L = 0.0;      // estimation only
  double R = 0.0;      // estimation only
  double K = 0.0;      // parameter dimension (estimation) or candidate count
};

CoverageReport coverage_experiment(const CoverageConfig& cfg);

double loglog_slope(std::span<const double> sizes, std::span<const double> values);

std::vector<std::size_t> default_grid(CoverageScenario s);

}  // namespace crpslab
