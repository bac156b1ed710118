#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/fitted_model.hpp"
#include "crpslab/optim.hpp"
#include "crpslab/synthetic.hpp"

namespace crpslab {

struct Candidate {
  std::string name;
  ModelPtr model;
};

using CandidateSet = std::vector<Candidate>;

/// Validation risk of each candidate, in candidate order.
std::vector<double> validation_risks(const CandidateSet& candidates, const Dataset& val,
                                     const DiscretizationConfig& disc = {});

/// Index of the smallest value; ties go to the lowest index.
std::size_t argmin_first(std::span<const double> values);

/// 0-based index of the candidate with minimal validation risk.
std::size_t select_model(const CandidateSet& candidates, const Dataset& val, const DiscretizationConfig& disc = {});

/// Mixture risk over a fixed sample as a function of the weights, in the energy form
///   S(F^lambda, y) = sum_m lambda_m a_m - 1/2 sum_{m,l} lambda_m lambda_l b_ml
/// with a_m = E|Z_m - y| and b_ml = E|Z_m - Z'_l| precomputed exactly per point.
class MixtureScorer {
 public:
  MixtureScorer(const CandidateSet& candidates, const Dataset& sample);

  std::size_t candidates() const noexcept { return m_; }
  std::size_t points() const noexcept { return n_; }

  double risk(std::span<const double> lambda) const;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<double> a_;  // n x m
  std::vector<double> b_;  // n x m x m
};

std::vector<double> softmax(std::span<const double> u);

struct AggregationConfig {
  NelderMeadConfig nelder_mead = [] {
    NelderMeadConfig c;
    c.step_fraction = 1.0;  // unit initial edges in logit space
    return c;
  }();
  /// Logit offset of the vertex starts: u = vertex_logit * e_m.
  double vertex_logit = 10.0;
};

struct AggregationResult {
  std::vector<double> weights;
  double risk = 0.0;
  std::vector<double> trace;
  std::size_t evaluations = 0;
  bool converged = true;
  std::uint64_t seed = 0;
  /// "uniform", "vertex:<m>", "softmin" or "exact-vertex:<m>".
  std::string start;
};

/// Convex weights minimizing validation risk of the mixture. Nelder-Mead runs in
/// logit space lambda = softmax(u) from the uniform point, every vertex and the
/// risk softmin; exact vertices are scored too, so the result is never worse
/// than the best single candidate.
AggregationResult aggregate_convex(const CandidateSet& candidates, const Dataset& val,
                                   const AggregationConfig& cfg = {}, std::uint64_t seed = 0);

/// Theoretical risk of every mixture of the candidates under a synthetic truth:
///   R(F^lambda) = E_X[ sum_m lambda_m a_m(X) - 1/2 sum_{m,l} lambda_m lambda_l b_ml(X) ]
/// with a_m(x) = E|Z_m - Y| and b_ml(x) = E|Z_m - Z'_l| computed exactly given x,
/// and a Monte-Carlo average over X draws.
class MixtureRiskOracle {
 public:
  MixtureRiskOracle(const CandidateSet& candidates, const SyntheticGenerator& truth, std::size_t x_mc,
                    std::uint64_t seed);

  std::size_t candidates() const noexcept { return m_; }

  struct Value {
    double risk;
    double std_error;
  };
  Value risk(std::span<const double> lambda) const;
  /// Mean and standard error of R(lambda1) - R(lambda2) over the shared draws.
  Value difference(std::span<const double> lambda1, std::span<const double> lambda2) const;

 private:
  double point_risk(std::size_t i, std::span<const double> lambda) const;
  std::size_t m_;
  std::size_t n_;
  std::vector<double> a_;  // n x m
  std::vector<double> b_;  // n x m x m
};

struct RegretResult {
  double regret = 0.0;
  double std_error = 0.0;
  std::vector<double> chosen_weights;
  std::size_t selected = 0;
  double chosen_risk = 0.0;
  double oracle_risk = 0.0;
  std::vector<double> oracle_weights;
  std::vector<double> theoretical_risks;  // per candidate
  std::vector<double> validation_risks;   // per candidate
};

RegretResult regret_selection(const CandidateSet& candidates, const SyntheticGenerator& truth, const Dataset& val,
                              std::size_t x_mc, std::uint64_t seed, const DiscretizationConfig& disc = {});

/// Largest candidate count accepted by the simplex-grid oracle.
inline constexpr std::size_t kMaxGridCandidates = 4;

/// All points of the simplex with coordinates on multiples of 1/round(1/step).
std::vector<std::vector<double>> simplex_grid(std::size_t m, double step);

RegretResult regret_aggregation(const CandidateSet& candidates, const SyntheticGenerator& truth, const Dataset& val,
                                double grid_step, std::size_t x_mc, std::uint64_t seed,
                                const AggregationConfig& cfg = {});

}  // namespace crpslab
