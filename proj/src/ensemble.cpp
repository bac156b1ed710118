#include "crpslab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "crpslab/errors.hpp"
#include "crpslab/rng.hpp"

namespace crpslab {

namespace {

void check_candidates(const CandidateSet& candidates) {
  if (candidates.empty()) throw InputError("candidate set is empty");
  for (const auto& c : candidates) {
    if (!c.model) throw InputError("candidate '" + c.name + "' has no model");
    if (c.model->dim() != candidates.front().model->dim()) throw InputError("candidates disagree in dimension");
  }
}

void check_sample(const CandidateSet& candidates, const Dataset& sample) {
  check_candidates(candidates);
  if (sample.size() == 0) throw InputError("validation set is empty");
  if (sample.dim() != candidates.front().model->dim()) throw InputError("validation set dimension mismatch");
}

std::vector<double> vertex(std::size_t m, std::size_t i) {
  std::vector<double> e(m, 0.0);
  e[i] = 1.0;
  return e;
}

}  // namespace

std::vector<double> validation_risks(const CandidateSet& candidates, const Dataset& val,
                                     const DiscretizationConfig& disc) {
  check_sample(candidates, val);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    double total = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) total += c.model->score(val.x.row(i), val.y[i], disc);
    out.push_back(total / static_cast<double>(val.size()));
  }
  return out;
}

std::size_t argmin_first(std::span<const double> values) {
  if (values.empty()) throw InputError("argmin of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

std::size_t select_model(const CandidateSet& candidates, const Dataset& val, const DiscretizationConfig& disc) {
  return argmin_first(validation_risks(candidates, val, disc));
}

// ---------------------------------------------------------------------------

MixtureScorer::MixtureScorer(const CandidateSet& candidates, const Dataset& sample)
    : m_(candidates.size()), n_(sample.size()) {
  check_sample(candidates, sample);
  a_.resize(n_ * m_);
  b_.resize(n_ * m_ * m_);
  std::vector<PredictiveDistribution> preds;
  for (std::size_t i = 0; i < n_; ++i) {
    const PredictiveDistribution y = WeightedEmpirical::dirac(sample.y[i]);
    preds.clear();
    for (const auto& c : candidates) preds.push_back(c.model->predict(sample.x.row(i)));
    for (std::size_t m = 0; m < m_; ++m) {
      a_[i * m_ + m] = expected_abs_difference(preds[m], y);
      for (std::size_t l = m; l < m_; ++l) {
        const double v = expected_abs_difference(preds[m], preds[l]);
        b_[(i * m_ + m) * m_ + l] = v;
        b_[(i * m_ + l) * m_ + m] = v;
      }
    }
  }
}

double MixtureScorer::risk(std::span<const double> lambda) const {
  if (lambda.size() != m_) throw InputError("weight vector has wrong length");
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double linear = 0.0;
    double quad = 0.0;
    for (std::size_t m = 0; m < m_; ++m) {
      if (lambda[m] == 0.0) continue;
      linear += lambda[m] * a_[i * m_ + m];
      const double* row = b_.data() + (i * m_ + m) * m_;
      for (std::size_t l = 0; l < m_; ++l) quad += lambda[m] * lambda[l] * row[l];
    }
    total += linear - 0.5 * quad;
  }
  return total / static_cast<double>(n_);
}

std::vector<double> softmax(std::span<const double> u) {
  if (u.empty()) return {};
  const double top = *std::max_element(u.begin(), u.end());
  std::vector<double> out(u.size());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = std::exp(u[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

AggregationResult aggregate_convex(const CandidateSet& candidates, const Dataset& val, const AggregationConfig& cfg,
                                   std::uint64_t seed) {
  check_sample(candidates, val);
  const std::size_t m = candidates.size();
  const MixtureScorer scorer(candidates, val);

  AggregationResult result;
  result.seed = seed;
  if (m == 1) {
    result.weights = {1.0};
    result.risk = scorer.risk(result.weights);
    result.start = "exact-vertex:0";
    return result;
  }

  const Objective objective = [&](std::span<const double> u) { return scorer.risk(softmax(u)); };

  std::vector<std::pair<std::string, std::vector<double>>> starts;
  starts.emplace_back("uniform", std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> u(m, 0.0);
    u[i] = cfg.vertex_logit;
    starts.emplace_back("vertex:" + std::to_string(i), std::move(u));
  }
  std::vector<double> vertex_risks(m);
  for (std::size_t i = 0; i < m; ++i) vertex_risks[i] = scorer.risk(vertex(m, i));
  {
    // lambda proportional to exp(-(r_m - min r) / tau), tau the mean absolute deviation of the risks.
    const double lo = *std::min_element(vertex_risks.begin(), vertex_risks.end());
    const double mean = std::accumulate(vertex_risks.begin(), vertex_risks.end(), 0.0) / static_cast<double>(m);
    double tau = 0.0;
    for (double r : vertex_risks) tau += std::abs(r - mean);
    tau = std::max(tau / static_cast<double>(m), 1e-12);
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i) u[i] = std::max(-50.0, -(vertex_risks[i] - lo) / tau);
    starts.emplace_back("softmin", std::move(u));
  }

  bool have = false;
  for (const auto& [name, u0] : starts) {
    const OptimResult run = nelder_mead(objective, u0, std::nullopt, cfg.nelder_mead);
    result.evaluations += run.evaluations;
    if (!have || run.value < result.risk) {
      result.weights = softmax(run.x);
      result.risk = run.value;
      result.trace = run.trace;
      result.converged = run.converged;
      result.start = name;
      have = true;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (vertex_risks[i] < result.risk) {
      result.weights = vertex(m, i);
      result.risk = vertex_risks[i];
      result.trace.clear();
      result.converged = true;
      result.start = "exact-vertex:" + std::to_string(i);
    }
  }
  // Report the risk of the weights actually returned.
  result.risk = scorer.risk(result.weights);
  return result;
}

// ---------------------------------------------------------------------------

MixtureRiskOracle::MixtureRiskOracle(const CandidateSet& candidates, const SyntheticGenerator& truth,
                                     std::size_t x_mc, std::uint64_t seed)
    : m_(candidates.size()), n_(x_mc) {
  check_candidates(candidates);
  if (x_mc < 2) throw InputError("risk oracle needs at least two draws");
  if (candidates.front().model->dim() != truth.dim()) throw InputError("candidates and truth disagree in dimension");
  a_.resize(n_ * m_);
  b_.resize(n_ * m_ * m_);
  Rng rng(seed);
  std::vector<PredictiveDistribution> preds;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto x = truth.sample_x(rng);
    const PredictiveDistribution g = truth.conditional(x);
    preds.clear();
    for (const auto& c : candidates) preds.push_back(c.model->predict(x));
    for (std::size_t m = 0; m < m_; ++m) {
      a_[i * m_ + m] = expected_abs_difference(preds[m], g);
      for (std::size_t l = m; l < m_; ++l) {
        const double v = expected_abs_difference(preds[m], preds[l]);
        b_[(i * m_ + m) * m_ + l] = v;
        b_[(i * m_ + l) * m_ + m] = v;
      }
    }
  }
}

double MixtureRiskOracle::point_risk(std::size_t i, std::span<const double> lambda) const {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t m = 0; m < m_; ++m) {
    if (lambda[m] == 0.0) continue;
    linear += lambda[m] * a_[i * m_ + m];
    const double* row = b_.data() + (i * m_ + m) * m_;
    for (std::size_t l = 0; l < m_; ++l) quad += lambda[m] * lambda[l] * row[l];
  }
  return linear - 0.5 * quad;
}

MixtureRiskOracle::Value MixtureRiskOracle::risk(std::span<const double> lambda) const {
  if (lambda.size() != m_) throw InputError("weight vector has wrong length");
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double v = point_risk(i, lambda);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / static_cast<double>(n_);
  const double var = std::max(0.0, (sq - sum * mean) / static_cast<double>(n_ - 1));
  return {mean, std::sqrt(var / static_cast<double>(n_))};
}

MixtureRiskOracle::Value MixtureRiskOracle::difference(std::span<const double> lambda1,
                                                       std::span<const double> lambda2) const {
  if (lambda1.size() != m_ || lambda2.size() != m_) throw InputError("weight vector has wrong length");
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double v = point_risk(i, lambda1) - point_risk(i, lambda2);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / static_cast<double>(n_);
  const double var = std::max(0.0, (sq - sum * mean) / static_cast<double>(n_ - 1));
  return {mean, std::sqrt(var / static_cast<double>(n_))};
}

RegretResult regret_selection(const CandidateSet& candidates, const SyntheticGenerator& truth, const Dataset& val,
                              std::size_t x_mc, std::uint64_t seed, const DiscretizationConfig& disc) {
  RegretResult out;
  out.validation_risks = validation_risks(candidates, val, disc);
  const std::size_t m = candidates.size();
  out.selected = argmin_first(out.validation_risks);
  out.chosen_weights = vertex(m, out.selected);
  const MixtureRiskOracle oracle(candidates, truth, x_mc, seed);
  for (std::size_t i = 0; i < m; ++i) out.theoretical_risks.push_back(oracle.risk(vertex(m, i)).risk);
  const std::size_t best = argmin_first(out.theoretical_risks);
  out.oracle_weights = vertex(m, best);
  out.chosen_risk = out.theoretical_risks[out.selected];
  out.oracle_risk = out.theoretical_risks[best];
  if (best != out.selected) {
    const auto diff = oracle.difference(out.chosen_weights, out.oracle_weights);
    out.regret = diff.risk;
    out.std_error = diff.std_error;
  }
  return out;
}

std::vector<std::vector<double>> simplex_grid(std::size_t m, double step) {
  if (m == 0) throw InputError("simplex grid needs m >= 1");
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("simplex grid step must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> parts(m, 0);
  // Enumerate compositions of k into m nonnegative parts in lexicographic order.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == m) {
      parts[pos] = left;
      std::vector<double> lambda(m);
      for (std::size_t i = 0; i < m; ++i) lambda[i] = static_cast<double>(parts[i]) / static_cast<double>(k);
      out.push_back(std::move(lambda));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      parts[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, k);
  return out;
}

RegretResult regret_aggregation(const CandidateSet& candidates, const SyntheticGenerator& truth, const Dataset& val,
                                double grid_step, std::size_t x_mc, std::uint64_t seed, const AggregationConfig& cfg) {
  check_candidates(candidates);
  const std::size_t m = candidates.size();
  if (m > kMaxGridCandidates) {
    throw CapabilityError("simplex-grid oracle supports at most " + std::to_string(kMaxGridCandidates) +
                          " candidates");
  }
  RegretResult out;
  out.validation_risks = validation_risks(candidates, val);
  const AggregationResult agg = aggregate_convex(candidates, val, cfg, seed);
  out.chosen_weights = agg.weights;
  out.selected = argmin_first(out.validation_risks);

  const MixtureRiskOracle oracle(candidates, truth, x_mc, seed);
  for (std::size_t i = 0; i < m; ++i) out.theoretical_risks.push_back(oracle.risk(vertex(m, i)).risk);
  out.chosen_risk = oracle.risk(out.chosen_weights).risk;
  if (m == 1) {
    out.oracle_weights = {1.0};
    out.oracle_risk = out.chosen_risk;
    return out;
  }
  double best = std::numeric_limits<double>::infinity();
  for (auto& lambda : simplex_grid(m, grid_step)) {
    const double r = oracle.risk(lambda).risk;
    if (r < best) {
      best = r;
      out.oracle_weights = std::move(lambda);
    }
  }
  out.oracle_risk = best;
  const auto diff = oracle.difference(out.chosen_weights, out.oracle_weights);
  out.regret = diff.risk;
  out.std_error = diff.std_error;
  return out;
}

}  // namespace crpslab
