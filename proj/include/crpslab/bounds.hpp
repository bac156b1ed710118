#pragma once

#include <cstddef>
#include <string>

#include "crpslab/models.hpp"

namespace crpslab {

struct BoundInputs {
  double n = 1;       // training sample size
  double N = 1;       // validation sample size
  double K = 1;       // parameter dimension
  double M = 1;       // number of candidates
  double delta = 0.1;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double beta_n = 1.0;
  double L = 0.0;     // Lipschitz constant of theta -> F_theta in W1
  double R = 0.0;     // radius of an origin-centred ball containing the parameter set
  double p = 2.0;     // moment order
  double D = 1.0;     // moment bound
  double D_n = 0.0;   // data-dependent moment bound, max |Y_i|^p for KNN/DRF
  double c_prime = 1.0;  // moment-inequality constant (unspecified; 1 reports the shape)
  double max_m1 = 1.0;   // max_m m_1 of the candidates, for the aggregation Lipschitz constants
};

struct BoundValue {
  double value = 0.0;
  /// false when the sample-size side condition fails.
  bool valid = true;
  std::string condition;
};

/// c_beta = 64 (beta1^2 + beta2^2).
double c_beta(const BoundInputs& b);
/// c_n = beta1^2 + beta_n^2.
double c_n(const BoundInputs& b);

/// sqrt(c_beta log(2 n^K / delta) / n), valid iff n log(2 n^K / delta) >= (48 L R)^2 / c_beta.
BoundValue bound_estimation(const BoundInputs& b);
/// 2 sqrt(c_beta log(2 n^K) / n), valid iff n log(2 n^K) >= (48 L R)^2 / c_beta.
BoundValue bound_estimation_expect(const BoundInputs& b);

/// 4 sqrt(c_n log(2M / delta) / N); no side condition.
BoundValue bound_selection_regret(const BoundInputs& b);
/// 8 sqrt(c_n log(2M) / N).
BoundValue bound_selection_regret_expect(const BoundInputs& b);

/// 8 sqrt(c_n log(2 N^M / delta) / N), valid iff N log(2 N^M / delta) >= 48^2 / c_n.
BoundValue bound_aggregation_regret(const BoundInputs& b);
/// 2 sqrt(c_n log(2 N^M) / N), valid iff N log(2 N^M) >= 48^2 / c_n.
BoundValue bound_aggregation_regret_expect(const BoundInputs& b);

/// Lipschitz constants of lambda -> F^lambda: sqrt(M) max m1 and the l1 form max m1.
struct AggregationLipschitz {
  double sqrt_m_form;
  double l1_form;
};
AggregationLipschitz aggregation_lipschitz(const BoundInputs& b);

/// p / (2 (p + K)); p may be +infinity (limit 1/2).
double rate_exponent_heavy_tail(double p, double K);
/// p / (2 (p + M)), the convex-aggregation analogue.
double rate_exponent_aggregation(double p, double M);

/// 2 (c' max(D, D_n) M)^{1/p} N^{-1/2}.
BoundValue bound_selection_moment(const BoundInputs& b);
/// (L^M max(D, D_n) N^{-p/2})^{1/(p+M)} with L = sqrt(M) max m1, up to a constant factor.
BoundValue bound_aggregation_moment(const BoundInputs& b);

/// Explicit constants for EMOS on X in [0,1]^d with parameters in `box`.
struct EmosConstants {
  double beta2;  // sub-Gaussian parameter of m_1(F_theta,X): half the range of m_1
  double L;      // W1 Lipschitz constant in theta
  double R;      // box circumradius
};
EmosConstants emos_constants(const ParamBox& box, std::size_t d);

/// sup_u d/du sqrt(softplus(u)) over u >= kMinScaleArgument.
double scale_link_lipschitz();

}  // namespace crpslab
