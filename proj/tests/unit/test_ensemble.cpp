#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "crpslab/bounds.hpp"
#include "crpslab/ensemble.hpp"
#include "crpslab/errors.hpp"
#include "crpslab/risk.hpp"
#include "fixtures.hpp"

using namespace crpslab;
using crpslab::fixture::make_dataset;

namespace {

Candidate fixed(std::string name, PredictiveDistribution f) {
  return {std::move(name), make_model(ConditionalModel{"fixed", 1, [f](std::span<const double>) { return f; }})};
}

Dataset points(std::vector<double> y) {
  std::vector<std::vector<double>> rows(y.size(), std::vector<double>{0.0});
  return make_dataset(rows, std::move(y));
}

SyntheticGenerator standard_normal_truth() {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::constant;
  spec.level = 0.0;
  spec.noise = 1.0;
  return SyntheticGenerator(spec);
}

}  // namespace

TEST(ValidationRisks, SingleCandidateEqualsEmpiricalRisk) {
  const CandidateSet c = {fixed("g", GaussianLS(0.2, 1.1))};
  const Dataset val = points({-1.0, 0.0, 2.0});
  const auto r = validation_risks(c, val);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r[0], empirical_risk(*c[0].model, val).value);
}

TEST(ValidationRisks, InterpolatingCandidateIsZero) {
  const Dataset val = make_dataset({{0.0}, {1.0}, {2.0}}, {3.0, 1.0, -2.0});
  const CandidateSet c = {{"knn", make_model(knn_fit(val, 1))}};
  EXPECT_DOUBLE_EQ(validation_risks(c, val)[0], 0.0);
}

TEST(ValidationRisks, ThreePointFixture) {
  // Closed-form per-point scores summed independently in Python.
  const CandidateSet c = {fixed("normal", GaussianLS(0.0, 1.0)),
                          fixed("two-point", WeightedEmpirical({0.0, 2.0}, {0.5, 0.5}))};
  const auto r = validation_risks(c, points({-1.0, 0.5, 3.0}));
  EXPECT_NEAR(r[0], 1.123473204656271, 1e-14);
  EXPECT_NEAR(r[1], 7.0 / 6.0, 1e-14);
  EXPECT_THROW(validation_risks(c, Dataset{}), InputError);
}

TEST(SelectModel, TieRules) {
  const Dataset val = points({0.0, 1.0});
  EXPECT_EQ(select_model({fixed("a", GaussianLS(0.0, 1.0))}, val), 0u);
  EXPECT_EQ(select_model({fixed("a", GaussianLS(0.0, 1.0)), fixed("b", GaussianLS(0.0, 1.0))}, val), 0u);
  EXPECT_EQ(select_model({fixed("a", GaussianLS(5.0, 1.0)), fixed("b", GaussianLS(0.5, 1.0))}, val), 1u);
}

TEST(Softmax, OnSimplex) {
  const auto w = softmax(std::vector<double>{800.0, 0.0, -3.0});
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(w[0], 1.0, 1e-15);
}

TEST(MixtureScorer, MatchesQuadrature) {
  const WeightedEmpirical e({0.0, 1.0}, {0.3, 0.7});
  const GaussianLS g(0.5, 2.0);
  const CandidateSet c = {fixed("a", e), fixed("b", g)};
  const Dataset val = points({-0.5, 0.25, 3.0});
  const MixtureScorer scorer(c, val);
  const std::vector<double> lambda = {0.35, 0.65};
  double expected = 0.0;
  for (double y : val.y) expected += crps_integral(MixtureSpec({e, g}, lambda), y);
  EXPECT_NEAR(scorer.risk(lambda), expected / 3.0, 1e-8);
  const std::vector<double> vertex = {0.0, 1.0};
  EXPECT_NEAR(scorer.risk(vertex), validation_risks(c, val)[1], 1e-14);
}

TEST(Aggregate, IdenticalCandidates) {
  const CandidateSet c = {fixed("a", GaussianLS(0.0, 1.0)), fixed("b", GaussianLS(0.0, 1.0))};
  const Dataset val = points({-0.3, 0.8, 1.9});
  const AggregationResult r = aggregate_convex(c, val);
  EXPECT_NEAR(r.risk, validation_risks(c, val)[0], 1e-9);
  EXPECT_NEAR(r.weights[0] + r.weights[1], 1.0, 1e-9);
}

TEST(Aggregate, PerfectCandidateTakesAllWeight) {
  const Dataset val = make_dataset({{0.0}, {1.0}, {2.0}}, {3.0, 1.0, -2.0});
  const CandidateSet c = {fixed("g", GaussianLS(0.0, 1.0)), {"knn", make_model(knn_fit(val, 1))}};
  const AggregationResult r = aggregate_convex(c, val);
  EXPECT_GE(r.weights[1], 1.0 - 1e-6);
  EXPECT_NEAR(r.risk, 0.0, 1e-9);
}

TEST(Aggregate, ComplementaryCandidates) {
  // Grid search over lambda in {0, 0.01, ..., 1}: minimum 1.0 at 0.5; vertices give 2.0.
  const CandidateSet c = {fixed("zero", WeightedEmpirical::dirac(0.0)), fixed("four", WeightedEmpirical::dirac(4.0))};
  const Dataset val = points({0.0, 4.0, 0.0, 4.0, 1.0, 3.0});
  const AggregationResult r = aggregate_convex(c, val);
  EXPECT_NEAR(r.risk, 1.0, 1e-8);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-4);
  const auto single = validation_risks(c, val);
  EXPECT_LT(r.risk, std::min(single[0], single[1]));
  EXPECT_TRUE(r.converged);
}

TEST(Aggregate, NeverWorseThanBestVertex) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const CandidateSet c = {fixed("a", fixture::random_gaussian(rng)), fixed("b", fixture::random_empirical(rng, 4)),
                            fixed("c", fixture::random_gaussian(rng))};
    std::vector<double> y(15);
    for (double& v : y) v = 2.0 * rng.normal();
    const Dataset val = points(y);
    const AggregationResult r = aggregate_convex(c, val, {}, static_cast<std::uint64_t>(rep));
    const auto single = validation_risks(c, val);
    EXPECT_LE(r.risk, *std::min_element(single.begin(), single.end()) + 1e-9);
    EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-9);
    for (double w : r.weights) EXPECT_GE(w, 0.0);
  }
}

TEST(SimplexGrid, Sizes) {
  EXPECT_EQ(simplex_grid(1, 0.02).size(), 1u);
  EXPECT_EQ(simplex_grid(2, 0.02).size(), 51u);
  EXPECT_EQ(simplex_grid(3, 0.5).size(), 6u);
  for (const auto& p : simplex_grid(3, 0.1)) EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
}

TEST(Regret, SingleCandidateIsZero) {
  const SyntheticGenerator truth = standard_normal_truth();
  const CandidateSet c = {fixed("a", GaussianLS(0.2, 1.0))};
  const Dataset val = points({0.0, 1.0});
  EXPECT_DOUBLE_EQ(regret_selection(c, truth, val, 100, 1).regret, 0.0);
  EXPECT_NEAR(regret_aggregation(c, truth, val, 0.02, 100, 1).regret, 0.0, 1e-12);
}

TEST(Regret, IdenticalCandidatesAggregateToZero) {
  const SyntheticGenerator truth = standard_normal_truth();
  const CandidateSet c = {fixed("a", GaussianLS(0.2, 1.0)), fixed("b", GaussianLS(0.2, 1.0))};
  EXPECT_NEAR(regret_aggregation(c, truth, points({0.0, 1.0, -1.0}), 0.02, 100, 1).regret, 0.0, 1e-12);
}

TEST(Regret, MisleadingValidationSample) {
  // Every validation point sits at 0.3, so the shifted candidate wins; the regret is
  // the divergence between N(0.3, 1) and N(0, 1) (30-digit quadrature).
  const SyntheticGenerator truth = standard_normal_truth();
  const CandidateSet c = {fixed("truth", GaussianLS(0.0, 1.0)), fixed("shifted", GaussianLS(0.3, 1.0))};
  const RegretResult r = regret_selection(c, truth, points({0.3, 0.3, 0.3}), 50, 1);
  EXPECT_EQ(r.selected, 1u);
  EXPECT_NEAR(r.regret, 0.0252937509835203142, 1e-12);
}

TEST(Regret, GridOracleCapability) {
  const SyntheticGenerator truth = standard_normal_truth();
  CandidateSet c;
  for (int m = 0; m < 5; ++m) c.push_back(fixed("c" + std::to_string(m), GaussianLS(0.1 * m, 1.0)));
  EXPECT_THROW(regret_aggregation(c, truth, points({0.0, 1.0}), 0.02, 10, 1), CapabilityError);
}

TEST(Regret, TwoCandidateRunWithinBound) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::sine_drn;
  const SyntheticGenerator truth(spec);
  Rng rng(404);
  const Dataset train = truth.sample(300, rng);
  const Dataset val = truth.sample(1000, rng);
  DrfHyper h;
  h.num_trees = 50;
  const CandidateSet c = {{"knn", make_model(knn_fit(train, 10))}, {"drf", make_model(drf_fit(train, h, 3))}};
  const RegretResult r = regret_aggregation(c, truth, val, 0.02, 2000, 9);
  BoundInputs b;
  b.N = 1000;
  b.M = 2;
  b.delta = 0.1;
  b.beta1 = truth.beta1();
  b.beta_n = subgauss_proxy(train.y);
  // Off-grid weights may beat the grid minimum by a second-order amount.
  EXPECT_GE(r.regret, -1e-3);
  EXPECT_LE(r.regret, bound_aggregation_regret(b).value);
}
