#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "crpslab/bounds.hpp"
#include "crpslab/errors.hpp"

using namespace crpslab;

namespace {

BoundInputs unit_inputs() {
  BoundInputs b;
  b.beta1 = 1.0;
  b.beta2 = 1.0;
  b.beta_n = 1.0;
  b.delta = 0.1;
  return b;
}

}  // namespace

TEST(Estimation, ReferenceValue) {
  BoundInputs b = unit_inputs();
  b.K = 1;
  b.n = 10000;
  // sqrt(128 log(2e5) / 1e4) at 30 digits.
  EXPECT_NEAR(bound_estimation(b).value, 0.395269186584011661, 1e-14);
  EXPECT_DOUBLE_EQ(c_beta(b), 128.0);
}

TEST(Estimation, DecreasesInN) {
  BoundInputs b = unit_inputs();
  b.K = 2;
  double previous = std::numeric_limits<double>::infinity();
  for (double n : {100.0, 1000.0, 1e4, 1e5, 1e6}) {
    b.n = n;
    const double v = bound_estimation(b).value;
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(Estimation, VacuousSideCondition) {
  BoundInputs b = unit_inputs();
  b.L = 0.0;
  b.R = 0.0;
  for (double n : {1.0, 2.0, 50.0}) {
    b.n = n;
    EXPECT_TRUE(bound_estimation(b).valid);
    EXPECT_TRUE(bound_estimation_expect(b).valid);
  }
  b.L = 10.0;
  b.R = 10.0;
  b.n = 10;
  EXPECT_FALSE(bound_estimation(b).valid);
}

TEST(Estimation, DeltaOutsideUnitInterval) {
  BoundInputs b = unit_inputs();
  b.delta = 1.0;
  EXPECT_THROW(bound_estimation(b), InputError);
  b.delta = 0.0;
  EXPECT_THROW(bound_selection_regret(b), InputError);
}

TEST(Selection, ReferenceValue) {
  BoundInputs b = unit_inputs();
  b.M = 2;
  b.N = 1000;
  EXPECT_NEAR(bound_selection_regret(b).value, 0.343575526677390050, 1e-14);
  EXPECT_NEAR(bound_selection_regret_expect(b).value, 0.421243015637465495, 1e-14);
}

TEST(Selection, Scaling) {
  BoundInputs b = unit_inputs();
  b.M = 1;
  b.N = 500;
  EXPECT_GT(bound_selection_regret(b).value, 0.0);
  b.M = 3;
  const double v = bound_selection_regret(b).value;
  b.N = 2000;
  EXPECT_NEAR(bound_selection_regret(b).value, v / 2.0, 1e-15);
}

TEST(Aggregation, ReferenceValueAndCondition) {
  BoundInputs b = unit_inputs();
  b.M = 2;
  b.N = 1000;
  EXPECT_NEAR(bound_aggregation_regret(b).value, 1.46691481771585426, 1e-13);
  // N log(2 N^M / delta) = 1000 * 16.12 >= 48^2 / 2.
  EXPECT_TRUE(bound_aggregation_regret(b).valid);
  b.N = 50;
  EXPECT_FALSE(bound_aggregation_regret(b).valid);
}

TEST(Aggregation, LipschitzForms) {
  BoundInputs b;
  b.M = 4;
  b.max_m1 = 1.5;
  const auto l = aggregation_lipschitz(b);
  EXPECT_DOUBLE_EQ(l.sqrt_m_form, 3.0);
  EXPECT_DOUBLE_EQ(l.l1_form, 1.5);
}

TEST(RateExponent, Values) {
  EXPECT_DOUBLE_EQ(rate_exponent_heavy_tail(2.0, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(rate_exponent_heavy_tail(std::numeric_limits<double>::infinity(), 3.0), 0.5);
  EXPECT_DOUBLE_EQ(rate_exponent_heavy_tail(2.0, 0.0), 0.5);
  EXPECT_NEAR(rate_exponent_heavy_tail(1e12, 5.0), 0.5, 1e-10);
  EXPECT_THROW(rate_exponent_heavy_tail(1.5, 1.0), InputError);
  EXPECT_DOUBLE_EQ(rate_exponent_aggregation(4.0, 2.0), 1.0 / 3.0);
}

TEST(MomentBounds, Shapes) {
  BoundInputs b;
  b.p = 2.0;
  b.D = 1.0;
  b.D_n = 4.0;
  b.M = 2;
  b.N = 100;
  b.c_prime = 1.0;
  // 2 (max(D, D_n) M)^{1/p} / sqrt(N) = 2 sqrt(8) / 10.
  EXPECT_NEAR(bound_selection_moment(b).value, 0.2 * std::sqrt(8.0), 1e-15);
  b.max_m1 = 1.0;
  // L = sqrt(2); (L^2 * 4 * 100^{-1})^{1/4}.
  EXPECT_NEAR(bound_aggregation_moment(b).value, std::pow(2.0 * 4.0 / 100.0, 0.25), 1e-14);
}

TEST(EmosConstants, UnitBox) {
  const ParamBox box({-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0});
  const EmosConstants c = emos_constants(box, 1);
  EXPECT_DOUBLE_EQ(c.R, 2.0);
  EXPECT_GT(c.beta2, 0.0);
  EXPECT_GT(c.L, std::sqrt(2.0));
}

TEST(ScaleLink, Supremum) {
  // d/du sqrt(softplus(u)) = sigmoid(u) / (2 sqrt(softplus(u))) is bounded on u >= -30.
  const double c = scale_link_lipschitz();
  for (double u = -30.0; u < 30.0; u += 0.01) {
    const double sp = std::log1p(std::exp(u));
    EXPECT_LE(1.0 / (1.0 + std::exp(-u)) / (2.0 * std::sqrt(sp)), c + 1e-9);
  }
}
