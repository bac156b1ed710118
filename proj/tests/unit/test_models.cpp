#include <gtest/gtest.h>

#include <cmath>

#include "crpslab/errors.hpp"
#include "crpslab/fitted_model.hpp"
#include "crpslab/forest.hpp"
#include "crpslab/models.hpp"
#include "fixtures.hpp"

using namespace crpslab;
using crpslab::fixture::make_dataset;

TEST(Softplus, Values) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_NEAR(softplus(10.0), 10.0000453988992169, 1e-13);
  EXPECT_NEAR(softplus_inverse(softplus(-3.0)), -3.0, 1e-12);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
}

TEST(Emos, ZeroParameters) {
  const EmosParams p{0.0, {0.0}, 0.0, {0.0}};
  const std::vector<double> x = {4.2};
  const GaussianLS g = emos_predict(p, x);
  EXPECT_DOUBLE_EQ(g.location(), 0.0);
  EXPECT_NEAR(g.scale(), 0.832554611157697756, 1e-15);
}

TEST(Emos, LinearLocation) {
  const EmosParams p{1.0, {2.0}, 0.0, {0.0}};
  const std::vector<double> x = {3.0};
  EXPECT_DOUBLE_EQ(emos_predict(p, x).location(), 7.0);
}

TEST(Emos, ScaleFromSoftplus) {
  const EmosParams p{0.0, {0.0}, 10.0, {0.0}};
  const std::vector<double> x = {1.0};
  EXPECT_NEAR(emos_predict(p, x).scale(), 3.16228483835647178, 1e-13);
}

TEST(Emos, DimensionMismatch) {
  const EmosParams p{0.0, {0.0, 1.0}, 0.0, {0.0, 0.0}};
  const std::vector<double> x = {1.0};
  EXPECT_THROW(emos_predict(p, x), InputError);
}

TEST(Emos, VectorLayoutRoundTrip) {
  const EmosParams p{1.0, {2.0, 3.0}, 4.0, {5.0, 6.0}};
  const auto v = p.to_vector();
  EXPECT_EQ(v, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(EmosParams::from_vector(v, 2), p);
}

namespace {

DrnParams random_drn(Rng& rng, std::size_t h, std::size_t d, Activation act) {
  std::vector<double> theta((d + 3) * h + 2);
  for (double& t : theta) t = rng.uniform(-1.0, 1.0);
  return DrnParams::from_vector(theta, h, d, act);
}

}  // namespace

TEST(Drn, ZeroSlopesIgnoreInput) {
  Rng rng(2);
  DrnParams p = random_drn(rng, 3, 2, Activation::tanh);
  std::fill(p.beta.begin(), p.beta.end(), 0.0);
  std::fill(p.beta_scale.begin(), p.beta_scale.end(), 0.0);
  const std::vector<double> x1 = {0.1, 0.9};
  const std::vector<double> x2 = {-4.0, 2.0};
  EXPECT_EQ(drn_predict(p, x1), drn_predict(p, x2));
  const EmosParams e{p.alpha, {0.0, 0.0}, p.alpha_scale, {0.0, 0.0}};
  EXPECT_EQ(drn_predict(p, x1), emos_predict(e, x1));
}

TEST(Drn, SingleReluUnit) {
  DrnParams p;
  p.hidden = 1;
  p.input_dim = 1;
  p.activation = Activation::relu;
  p.alpha = 0.0;
  p.beta = {1.0};
  p.alpha_scale = 0.0;
  p.beta_scale = {0.0};
  p.gamma = {0.0};
  p.delta = {1.0};
  const std::vector<double> x = {2.0};
  EXPECT_DOUBLE_EQ(drn_predict(p, x).location(), 2.0);
}

TEST(Drn, MatchesUnrolledForwardPass) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const DrnParams p = random_drn(rng, 3, 2, Activation::tanh);
    const std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    double m = p.alpha;
    double s = p.alpha_scale;
    for (std::size_t j = 0; j < 3; ++j) {
      const double h = std::tanh(p.gamma[j] + p.delta[2 * j] * x[0] + p.delta[2 * j + 1] * x[1]);
      m += p.beta[j] * h;
      s += p.beta_scale[j] * h;
    }
    const GaussianLS g = drn_predict(p, x);
    EXPECT_NEAR(g.location(), m, 1e-12);
    EXPECT_NEAR(g.scale(), std::sqrt(std::log1p(std::exp(s))), 1e-12);
  }
}

TEST(Drn, ZeroSlopeGradientVanishesInLocation) {
  Rng rng(6);
  DrnParams p = random_drn(rng, 2, 1, Activation::relu);
  std::fill(p.beta.begin(), p.beta.end(), 0.0);
  std::fill(p.beta_scale.begin(), p.beta_scale.end(), 0.0);
  const std::vector<double> x = {0.3};
  const DrnGradient g = drn_grad(p, x, p.alpha);
  EXPECT_NEAR(g.values[0], 0.0, 1e-15);
}

TEST(Drn, IdentityUnitCollapsesToEmos) {
  // h = x, m = alpha + beta x, sigma^2 = softplus(alpha_s + beta_s x).
  DrnParams p;
  p.hidden = 1;
  p.input_dim = 1;
  p.activation = Activation::identity;
  p.alpha = 0.4;
  p.beta = {1.3};
  p.alpha_scale = -0.2;
  p.beta_scale = {0.7};
  p.gamma = {0.0};
  p.delta = {1.0};
  const EmosParams e{0.4, {1.3}, -0.2, {0.7}};
  const std::vector<double> x = {0.8};
  const DrnGradient gd = drn_grad(p, x, 1.1);
  const std::vector<double> ge = emos_grad(e, x, 1.1);
  EXPECT_NEAR(gd.values[0], ge[0], 1e-14);
  EXPECT_NEAR(gd.values[1], ge[1], 1e-14);
  EXPECT_NEAR(gd.values[2], ge[2], 1e-14);
  EXPECT_NEAR(gd.values[3], ge[3], 1e-14);
}

TEST(Drn, ScaleClampIsReported) {
  DrnParams p;
  p.hidden = 0;
  p.input_dim = 1;
  p.alpha_scale = -100.0;
  const std::vector<double> x = {0.0};
  EXPECT_TRUE(drn_grad(p, x, 0.0).scale_clamped);
  EXPECT_GT(drn_predict(p, x).scale(), 0.0);
}

TEST(Knn, AllNeighboursGiveEmpiricalLaw) {
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}}, {5.0, 1.0, 3.0});
  const KnnModel m = knn_fit(d, 3);
  const std::vector<double> x = {10.0};
  EXPECT_EQ(knn_predict(m, x), WeightedEmpirical::uniform({1.0, 3.0, 5.0}));
}

TEST(Knn, OneNeighbourAtTrainingPoint) {
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}}, {5.0, 1.0, 3.0});
  const KnnModel m = knn_fit(d, 1);
  const std::vector<double> x = {1.0};
  EXPECT_EQ(knn_predict(m, x), WeightedEmpirical::dirac(1.0));
}

TEST(Knn, FivePointFixture) {
  // Distances from 0.4: 0.4, 0.15, 0.1, 0.35, 0.6.
  const Dataset d = make_dataset({{0.0}, {0.25}, {0.5}, {0.75}, {1.0}}, {10, 20, 30, 40, 50});
  const KnnModel m = knn_fit(d, 2);
  const std::vector<double> x = {0.4};
  EXPECT_EQ(knn_predict(m, x), WeightedEmpirical({20.0, 30.0}, {0.5, 0.5}));
}

TEST(Knn, TiesGoToLowerIndex) {
  const Dataset d = make_dataset({{-1.0}, {1.0}, {1.0}}, {1.0, 2.0, 3.0});
  const KnnModel m = knn_fit(d, 1);
  const std::vector<double> x = {0.0};
  EXPECT_EQ(knn_predict(m, x), WeightedEmpirical::dirac(1.0));
}

TEST(Knn, KAboveSampleSize) {
  const Dataset d = make_dataset({{0.0}, {1.0}}, {1.0, 2.0});
  EXPECT_THROW(knn_fit(d, 3), InputError);
}

TEST(SubGaussProxy, Values) {
  EXPECT_DOUBLE_EQ(subgauss_proxy(std::vector<double>{-3.0, 1.0, 2.0}), 3.0);
  EXPECT_DOUBLE_EQ(subgauss_proxy(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_THROW(subgauss_proxy(std::vector<double>{}), InputError);
}

TEST(SubGaussProxy, MaximumOfNormalSample) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    std::vector<double> y(1000);
    for (double& v : y) v = rng.normal();
    total += subgauss_proxy(y);
  }
  EXPECT_NEAR(total / 200.0, std::sqrt(2.0 * std::log(1000.0)), 0.5);
}

TEST(Forest, ConstantResponseGivesDirac) {
  Rng rng(1);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) rows.push_back({rng.uniform(), rng.uniform()});
  const Dataset d = make_dataset(rows, std::vector<double>(30, 2.5));
  DrfHyper h;
  h.num_trees = 10;
  const DrfModel m = drf_fit(d, h, 3);
  const std::vector<double> x = {0.5, 0.5};
  EXPECT_EQ(drf_predict(m, x), WeightedEmpirical::dirac(2.5));
  for (const Tree& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
}

TEST(Forest, RootSplitAtVarianceOptimalMidpoint) {
  // Thresholds 0.5, 2, 3.5 give SSE 68.67, 2.5, 60.67 (brute force).
  const Dataset d = make_dataset({{0.0}, {1.0}, {3.0}, {4.0}}, {0.0, 1.0, 10.0, 12.0});
  DrfHyper h;
  h.num_trees = 1;
  h.mtry = 1;
  h.min_node_size = 1;
  const DrfModel m = drf_fit(d, h, 0);
  ASSERT_EQ(m.trees.front().in_bag.size(), 4u);
  EXPECT_EQ(m.trees.front().nodes.front().feature, 0);
  EXPECT_DOUBLE_EQ(m.trees.front().nodes.front().threshold, 2.0);
}

TEST(Forest, SameSeedSameTrees) {
  Rng rng(8);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 80; ++i) {
    rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    y.push_back(rows.back()[0] + rng.normal());
  }
  const Dataset d = make_dataset(rows, y);
  DrfHyper h;
  h.num_trees = 20;
  EXPECT_EQ(drf_fit(d, h, 99), drf_fit(d, h, 99));
  EXPECT_NE(drf_fit(d, h, 99), drf_fit(d, h, 100));
}

TEST(Forest, HandBuiltTwoTreeWeights) {
  DrfModel m;
  m.dim = 1;
  m.train_y = {1.0, 2.0, 3.0, 4.0};
  Tree t1;
  t1.in_bag = {0, 1, 2, 3};
  t1.nodes = {TreeNode{0, 0.5, 1, 2, 0}, TreeNode{-1, 0.0, 0, 0, 0}, TreeNode{-1, 0.0, 0, 0, 1}};
  t1.leaves = {{0, 1}, {2, 3}};
  Tree t2;
  t2.in_bag = {0, 1, 2};
  t2.nodes = {TreeNode{}};
  t2.leaves = {{0, 1, 2}};
  m.trees = {t1, t2};
  drf_reindex(m);
  const std::vector<double> x = {0.2};
  const auto w = drf_weights(m, x);
  EXPECT_NEAR(w[0], 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(w[1], 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(w[2], 1.0 / 6.0, 1e-15);
  EXPECT_EQ(w[3], 0.0);
  const WeightedEmpirical f = drf_predict(m, x);
  EXPECT_NEAR(drf_crps(m, x, 2.2), crps_empirical(f, 2.2), 1e-14);
}

TEST(Forest, SingleLeafTreeWeightsAreUniformOverInBag) {
  DrfModel m;
  m.dim = 1;
  m.train_y = {1.0, 2.0, 3.0};
  Tree t;
  t.in_bag = {0, 2};
  t.nodes = {TreeNode{}};
  t.leaves = {{0, 2}};
  m.trees = {t};
  drf_reindex(m);
  const std::vector<double> x = {0.0};
  EXPECT_EQ(drf_weights(m, x), (std::vector<double>{0.5, 0.0, 0.5}));
}

TEST(Forest, MtryDefault) {
  DrfHyper h;
  EXPECT_EQ(resolve_mtry(h, 8), 2u);
  EXPECT_EQ(resolve_mtry(h, 1), 1u);
  h.mtry = 5;
  EXPECT_EQ(resolve_mtry(h, 8), 5u);
}

TEST(FittedModel, ScoreMatchesPrediction) {
  Rng rng(12);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({rng.uniform()});
    y.push_back(rng.normal());
  }
  const Dataset d = make_dataset(rows, y);
  DrfHyper h;
  h.num_trees = 15;
  const FittedModel forest(drf_fit(d, h, 1));
  const FittedModel knn(knn_fit(d, 4));
  const std::vector<double> x = {0.37};
  EXPECT_NEAR(forest.score(x, 0.3), crps(forest.predict(x), 0.3), 1e-13);
  EXPECT_NEAR(knn.score(x, 0.3), crps(knn.predict(x), 0.3), 1e-13);
  EXPECT_EQ(forest.kind(), "drf");
  EXPECT_EQ(knn.dim(), 1u);
}
