#include "crpslab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "crpslab/errors.hpp"

namespace crpslab {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
}

void check_positive(double v, const char* name) {
  if (!(v >= 1.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be a finite number >= 1");
}

void check_betas(const BoundInputs& b) {
  if (!(b.beta1 >= 0.0) || !(b.beta2 >= 0.0) || !(b.beta_n >= 0.0)) {
    throw InputError("sub-Gaussian parameters must be nonnegative");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// log(2 n^K / delta) without forming n^K.
double log_term(double n, double K, double delta) { return std::log(2.0) + K * std::log(n) - std::log(delta); }

BoundValue with_condition(double value, double lhs, double rhs, const std::string& lhs_text) {
  BoundValue out;
  out.value = value;
  out.valid = lhs >= rhs;
  out.condition = lhs_text + " = " + fmt(lhs) + (out.valid ? " >= " : " < ") + fmt(rhs);
  return out;
}

}  // namespace

double c_beta(const BoundInputs& b) { return 64.0 * (b.beta1 * b.beta1 + b.beta2 * b.beta2); }

double c_n(const BoundInputs& b) { return b.beta1 * b.beta1 + b.beta_n * b.beta_n; }

BoundValue bound_estimation(const BoundInputs& b) {
  check_delta(b.delta);
  check_positive(b.n, "n");
  check_positive(b.K, "K");
  check_betas(b);
  const double cb = c_beta(b);
  const double lt = log_term(b.n, b.K, b.delta);
  const double lr = 48.0 * b.L * b.R;
  const double rhs = lr == 0.0 ? 0.0 : lr * lr / cb;
  return with_condition(std::sqrt(cb * lt / b.n), b.n * lt, rhs, "n log(2 n^K / delta)");
}

BoundValue bound_estimation_expect(const BoundInputs& b) {
  check_positive(b.n, "n");
  check_positive(b.K, "K");
  check_betas(b);
  const double cb = c_beta(b);
  const double lt = log_term(b.n, b.K, 1.0);
  const double lr = 48.0 * b.L * b.R;
  const double rhs = lr == 0.0 ? 0.0 : lr * lr / cb;
  return with_condition(2.0 * std::sqrt(cb * lt / b.n), b.n * lt, rhs, "n log(2 n^K)");
}

BoundValue bound_selection_regret(const BoundInputs& b) {
  check_delta(b.delta);
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  check_betas(b);
  BoundValue out;
  out.value = 4.0 * std::sqrt(c_n(b) * std::log(2.0 * b.M / b.delta) / b.N);
  out.condition = "none";
  return out;
}

BoundValue bound_selection_regret_expect(const BoundInputs& b) {
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  check_betas(b);
  BoundValue out;
  out.value = 8.0 * std::sqrt(c_n(b) * std::log(2.0 * b.M) / b.N);
  out.condition = "none";
  return out;
}

BoundValue bound_aggregation_regret(const BoundInputs& b) {
  check_delta(b.delta);
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  check_betas(b);
  const double cn = c_n(b);
  const double lt = log_term(b.N, b.M, b.delta);
  const double rhs = cn > 0.0 ? 48.0 * 48.0 / cn : std::numeric_limits<double>::infinity();
  return with_condition(8.0 * std::sqrt(cn * lt / b.N), b.N * lt, rhs, "N log(2 N^M / delta)");
}

BoundValue bound_aggregation_regret_expect(const BoundInputs& b) {
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  check_betas(b);
  const double cn = c_n(b);
  const double lt = log_term(b.N, b.M, 1.0);
  const double rhs = cn > 0.0 ? 48.0 * 48.0 / cn : std::numeric_limits<double>::infinity();
  return with_condition(2.0 * std::sqrt(cn * lt / b.N), b.N * lt, rhs, "N log(2 N^M)");
}

AggregationLipschitz aggregation_lipschitz(const BoundInputs& b) {
  if (!(b.max_m1 >= 0.0)) throw InputError("max_m1 must be nonnegative");
  check_positive(b.M, "M");
  return {std::sqrt(b.M) * b.max_m1, b.max_m1};
}

double rate_exponent_heavy_tail(double p, double K) {
  if (std::isnan(p) || p < 2.0) throw InputError("moment order p must be >= 2");
  if (!(K >= 0.0) || !std::isfinite(K)) throw InputError("K must be finite and nonnegative");
  if (std::isinf(p)) return 0.5;
  return p / (2.0 * (p + K));
}

double rate_exponent_aggregation(double p, double M) { return rate_exponent_heavy_tail(p, M); }

BoundValue bound_selection_moment(const BoundInputs& b) {
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  if (std::isnan(b.p) || b.p < 2.0 || std::isinf(b.p)) throw InputError("moment order p must be finite and >= 2");
  if (!(b.D > 0.0) || !(b.D_n >= 0.0) || !(b.c_prime > 0.0)) throw InputError("D, D_n and c' must be positive");
  BoundValue out;
  out.value = 2.0 * std::pow(b.c_prime * std::max(b.D, b.D_n) * b.M, 1.0 / b.p) / std::sqrt(b.N);
  out.condition = "none";
  return out;
}

BoundValue bound_aggregation_moment(const BoundInputs& b) {
  check_positive(b.N, "N");
  check_positive(b.M, "M");
  if (std::isnan(b.p) || b.p < 2.0 || std::isinf(b.p)) throw InputError("moment order p must be finite and >= 2");
  if (!(b.D > 0.0) || !(b.D_n >= 0.0)) throw InputError("D must be positive and D_n nonnegative");
  const double lip = aggregation_lipschitz(b).sqrt_m_form;
  const double log_inner = b.M * std::log(std::max(lip, std::numeric_limits<double>::min())) +
                           std::log(std::max(b.D, b.D_n)) - 0.5 * b.p * std::log(b.N);
  BoundValue out;
  out.value = std::exp(log_inner / (b.p + b.M));
  out.condition = "up to a constant depending on p and M";
  return out;
}

double scale_link_lipschitz() {
  // d/du sqrt(softplus(u)) = sigmoid(u) / (2 sqrt(softplus(u))) is unimodal; grid then golden refinement.
  const auto g = [](double u) { return sigmoid(u) / (2.0 * std::sqrt(softplus(u))); };
  double best_u = kMinScaleArgument;
  for (double u = kMinScaleArgument; u <= 50.0; u += 0.01) {
    if (g(u) > g(best_u)) best_u = u;
  }
  double lo = best_u - 0.01;
  double hi = best_u + 0.01;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double a = hi - phi * (hi - lo);
    const double c = lo + phi * (hi - lo);
    if (g(a) > g(c)) {
      hi = c;
    } else {
      lo = a;
    }
  }
  return g(0.5 * (lo + hi));
}

EmosConstants emos_constants(const ParamBox& box, std::size_t d) {
  if (box.dim() != 2 * (1 + d)) throw InputError("EMOS box has wrong dimension");
  const auto lo = box.lower();
  const auto hi = box.upper();
  // Location range over x in [0,1]^d: each slope contributes [min(0, lo), max(0, hi)].
  double m_lo = lo[0];
  double m_hi = hi[0];
  double u_lo = lo[1 + d];
  double u_hi = hi[1 + d];
  for (std::size_t j = 0; j < d; ++j) {
    m_lo += std::min(0.0, lo[1 + j]);
    m_hi += std::max(0.0, hi[1 + j]);
    u_lo += std::min(0.0, lo[2 + d + j]);
    u_hi += std::max(0.0, hi[2 + d + j]);
  }
  const double s_lo = std::sqrt(softplus(std::max(u_lo, kMinScaleArgument)));
  const double s_hi = std::sqrt(softplus(std::max(u_hi, kMinScaleArgument)));
  const double abs_m = std::max(std::abs(m_lo), std::abs(m_hi));
  const double root2pi = std::sqrt(2.0 / std::numbers::pi);
  // sigma sqrt(2/pi) <= m_1(N(m, sigma^2)) <= |m| + sigma sqrt(2/pi).
  const double m1_hi = abs_m + root2pi * s_hi;
  const double m1_lo = root2pi * s_lo;
  const double c_sigma = scale_link_lipschitz();
  EmosConstants out;
  out.beta2 = 0.5 * (m1_hi - m1_lo);
  out.L = std::sqrt(1.0 + static_cast<double>(d)) * std::sqrt(1.0 + (2.0 / std::numbers::pi) * c_sigma * c_sigma);
  out.R = box.circumradius();
  return out;
}

}  // namespace crpslab
