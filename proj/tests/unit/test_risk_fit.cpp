#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crpslab/errors.hpp"
#include "crpslab/optim.hpp"
#include "crpslab/risk.hpp"
#include "crpslab/synthetic.hpp"
#include "fixtures.hpp"

using namespace crpslab;
using crpslab::fixture::make_dataset;

namespace {

ModelPtr constant_law(PredictiveDistribution f, std::size_t dim = 1) {
  return make_model(ConditionalModel{"fixed", dim, [f](std::span<const double>) { return f; }});
}

Dataset draw(SyntheticPreset preset, std::size_t n, std::uint64_t seed, double level = 0.0, double noise = 1.0) {
  SyntheticSpec spec;
  spec.preset = preset;
  spec.level = level;
  spec.noise = noise;
  Rng rng(seed);
  return SyntheticGenerator(spec).sample(n, rng);
}

}  // namespace

TEST(NelderMead, Quadratic) {
  const auto f = [](std::span<const double> x) { return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0); };
  NelderMeadConfig cfg;
  cfg.step = {1.0, 1.0};
  const OptimResult r = nelder_mead(f, {0.0, 0.0}, std::nullopt, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], -2.0, 1e-3);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST(NelderMead, BoxKeepsIteratesFeasible) {
  const ParamBox box({0.0, 0.0}, {1.0, 1.0});
  const auto f = [&](std::span<const double> x) {
    EXPECT_TRUE(box.contains(x));
    return (x[0] - 3.0) * (x[0] - 3.0) + x[1] * x[1];
  };
  const OptimResult r = nelder_mead(f, {0.5, 0.5}, box);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 0.0, 1e-4);
}

TEST(EmpiricalRisk, PerfectInterpolationIsZero) {
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}}, {4.0, -1.0, 2.0});
  const FittedModel m(knn_fit(d, 1));
  EXPECT_DOUBLE_EQ(empirical_risk(m, d).value, 0.0);
}

TEST(EmpiricalRisk, SinglePointStandardNormal) {
  const Dataset d = make_dataset({{0.0}}, {0.0});
  EXPECT_NEAR(empirical_risk(*constant_law(GaussianLS(0.0, 1.0)), d).value, 0.233694977255109069, 1e-14);
}

TEST(EmpiricalRisk, MeanOfPointScores) {
  const Dataset d = make_dataset({{0.0}, {0.0}}, {0.5, -2.0});
  const GaussianLS g(0.1, 1.3);
  const RiskEstimate r = empirical_risk(*constant_law(g), d, true);
  EXPECT_NEAR(r.value, 0.5 * (crps_gaussian(g, 0.5) + crps_gaussian(g, -2.0)), 1e-15);
  EXPECT_EQ(r.scores.size(), 2u);
  EXPECT_THROW(empirical_risk(*constant_law(g), Dataset{}), InputError);
}

TEST(FitEmos, RecoversHomoscedasticLine) {
  // Y = 2 + 3 x + N(0, 1), n = 2000.
  const Dataset d = draw(SyntheticPreset::linear_emos, 2000, 2024);
  const FitResult r = fit_emos(d, std::nullopt, {}, 7);
  const auto& p = std::get<EmosParams>(r.params);
  EXPECT_NEAR(p.alpha, 2.0, 0.15);
  EXPECT_NEAR(p.beta[0], 3.0, 0.15);
  for (double x : {0.0, 0.5, 1.0}) {
    const std::vector<double> xv = {x};
    EXPECT_NEAR(emos_predict(p, xv).scale(), 1.0, 0.15);
  }
  EXPECT_LE(r.risk, r.initial_risk);
  EXPECT_TRUE(r.box.contains(p.to_vector()));
}

TEST(FitEmos, NoiselessConstant) {
  const Dataset d = draw(SyntheticPreset::constant, 200, 1, 1.5, 0.0);
  const FitResult r = fit_emos(d, std::nullopt, {}, 3);
  EXPECT_LT(r.risk, 1e-3);
  const std::vector<double> x = {0.5};
  EXPECT_NEAR(emos_predict(std::get<EmosParams>(r.params), x).location(), 1.5, 1e-2);
}

TEST(FitEmos, CollapsedBox) {
  const Dataset d = draw(SyntheticPreset::linear_emos, 100, 4);
  const std::vector<double> point = {1.0, 2.0, 0.5, -0.5};
  const FitResult r = fit_emos(d, ParamBox(point, point), {}, 0);
  EXPECT_EQ(std::get<EmosParams>(r.params).to_vector(), point);
  EXPECT_NEAR(r.risk, empirical_risk(EmosParams::from_vector(point, 1), d).value, 1e-12);
}

TEST(FitEmos, GradientDescentAgreesWithNelderMead) {
  const Dataset d = draw(SyntheticPreset::linear_emos, 500, 5);
  OptimizerConfig gd;
  gd.kind = OptimizerKind::gradient_descent;
  gd.epochs = 300;
  gd.step = 5e-2;
  const FitResult a = fit_emos(d, std::nullopt, {}, 1);
  const FitResult b = fit_emos(d, std::nullopt, gd, 1);
  EXPECT_NEAR(a.risk, b.risk, 5e-3);
}

TEST(FitDrn, BeatsEmosOnHeteroscedasticSine) {
  // m(x) = sin(2 pi x), sigma(x) = 0.1 + 0.2 x.
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::sine_drn;
  const SyntheticGenerator truth(spec);
  Rng rng(31);
  const Dataset train = truth.sample(1000, rng);
  OptimizerConfig opt;
  opt.kind = OptimizerKind::gradient_descent;
  const FitResult drn = fit_drn(train, 8, Activation::tanh, std::nullopt, opt, 2);
  const FitResult emos = fit_emos(train, std::nullopt, {}, 2);
  const double drn_excess = excess_risk_exact(*drn.model(), truth, 2000, 77).value;
  const double emos_excess = excess_risk_exact(*emos.model(), truth, 2000, 77).value;
  EXPECT_LT(drn_excess, emos_excess);
}

TEST(FitDrn, ZeroWidthMatchesInterceptOnlyEmos) {
  const Dataset d = draw(SyntheticPreset::constant, 300, 8, 0.7, 2.0);
  Dataset no_features = d;
  no_features.x = Matrix(d.size(), 0);
  const FitResult drn = fit_drn(d, 0, Activation::relu, std::nullopt, {}, 4);
  const FitResult emos = fit_emos(no_features, std::nullopt, {}, 4);
  EXPECT_NEAR(drn.risk, emos.risk, 1e-6);
}

TEST(FitDrn, NoiselessConstant) {
  const Dataset d = draw(SyntheticPreset::constant, 200, 2, -1.0, 0.0);
  OptimizerConfig opt;
  opt.kind = OptimizerKind::gradient_descent;
  const FitResult r = fit_drn(d, 2, Activation::relu, std::nullopt, opt, 9);
  EXPECT_LT(r.risk, 1e-2);
}

TEST(TheoreticalRisk, TruthAgainstItself) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::constant;
  spec.level = 0.0;
  spec.noise = 1.0;
  const SyntheticGenerator truth(spec);
  const RiskEstimate r = theoretical_risk_mc(*truth.truth_model(), truth, 200000, 1);
  // S(G, G) = 1 / sqrt(pi).
  EXPECT_NEAR(r.value, 0.564189583547756287, 4.0 * r.std_error);
  EXPECT_THROW(theoretical_risk_mc(*truth.truth_model(), truth, 1, 1), InputError);
}

TEST(TheoreticalRisk, DegenerateTruth) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::constant;
  spec.noise = 0.0;
  const SyntheticGenerator truth(spec);
  EXPECT_DOUBLE_EQ(theoretical_risk_mc(*constant_law(WeightedEmpirical::dirac(0.0)), truth, 100, 1).value, 0.0);
}

TEST(ExcessRisk, TruthIsZero) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::sine_drn;
  const SyntheticGenerator truth(spec);
  EXPECT_NEAR(excess_risk_exact(*truth.truth_model(), truth, 500, 3).value, 0.0, 1e-12);
}

TEST(ExcessRisk, UnitShiftOfDirac) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::constant;
  spec.level = 1.0;
  spec.noise = 0.0;
  const SyntheticGenerator truth(spec);
  EXPECT_NEAR(excess_risk_exact(*constant_law(WeightedEmpirical::dirac(0.0)), truth, 50, 3).value, 1.0, 1e-14);
}

TEST(ExcessRisk, DecreasesWithSampleSize) {
  SyntheticSpec spec;
  const SyntheticGenerator truth(spec);
  double previous = INFINITY;
  for (std::size_t n : {250u, 1000u, 4000u}) {
    std::vector<double> errors;
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng rng(derive_seed(derive_seed(17, n), s));
      const Dataset d = truth.sample(n, rng);
      errors.push_back(excess_risk_exact(*fit_emos(d, std::nullopt, {}, s).model(), truth, 4000, 5).value);
    }
    std::nth_element(errors.begin(), errors.begin() + 2, errors.end());
    EXPECT_LT(errors[2], previous);
    previous = errors[2];
  }
}
