#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace crpslab {

double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;
/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);
/// E|W| for W ~ N(mean, sd^2); sd may be 0.
double normal_abs_mean(double mean, double sd) noexcept;

struct QuadratureConfig {
  double abs_tol = 1e-9;
  int max_depth = 50;
  /// Gaussian components are integrated over location +/- tail_sigmas * scale.
  double tail_sigmas = 10.0;
};

struct DiscretizationConfig {
  int n_quantiles = 512;
};

/// Finitely supported distribution sum_i w_i delta_{y_i}.
///
/// Atoms are kept sorted; exactly equal atoms are merged and zero-weight atoms
/// dropped on construction. Weights must sum to one within 1e-9 and are then
/// renormalized.
class WeightedEmpirical {
 public:
  WeightedEmpirical(std::vector<double> atoms, std::vector<double> weights);

  static WeightedEmpirical dirac(double value);
  static WeightedEmpirical uniform(std::vector<double> values);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// P(X <= z).
  double cdf(double z) const noexcept;
  /// P(X < z).
  double cdf_left(double z) const noexcept;

  friend bool operator==(const WeightedEmpirical&, const WeightedEmpirical&) = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

class GaussianLS {
 public:
  GaussianLS(double location, double scale);

  double location() const noexcept { return location_; }
  double scale() const noexcept { return scale_; }
  double cdf(double z) const noexcept { return normal_cdf((z - location_) / scale_); }

  friend bool operator==(const GaussianLS&, const GaussianLS&) = default;

 private:
  double location_;
  double scale_;
};

class PredictiveDistribution;

/// Convex combination sum_m lambda_m F^m of predictive distributions.
class MixtureSpec {
 public:
  MixtureSpec(std::vector<PredictiveDistribution> components, std::vector<double> weights);

  const std::vector<PredictiveDistribution>& components() const noexcept { return components_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::vector<PredictiveDistribution> components_;
  std::vector<double> weights_;
};

class PredictiveDistribution {
 public:
  using Variant = std::variant<WeightedEmpirical, GaussianLS, MixtureSpec>;

  PredictiveDistribution(WeightedEmpirical d) : value_(std::move(d)) {}
  PredictiveDistribution(GaussianLS d) : value_(std::move(d)) {}
  PredictiveDistribution(MixtureSpec d) : value_(std::move(d)) {}

  const Variant& value() const noexcept { return value_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&value_);
  }

  double cdf(double z) const noexcept;
  double cdf_left(double z) const noexcept;

 private:
  Variant value_;
};

/// CRPS with the closed form matching the representation. Mixtures are
/// flattened first since the score is not linear in F.
double crps(const PredictiveDistribution& f, double y, const DiscretizationConfig& disc = {});

double crps_empirical(const WeightedEmpirical& f, double y);
double crps_gaussian(const GaussianLS& g, double y);

struct GaussianCrpsGradient {
  double d_location;
  double d_scale;
};
GaussianCrpsGradient crps_gaussian_grad(const GaussianLS& g, double y);

/// Reference CRPS: integral of (1{y <= z} - F(z))^2 by adaptive Simpson over the
/// support, split at every discontinuity. Throws NumericalError if the
/// tolerance is not reached.
double crps_integral(const PredictiveDistribution& f, double y, const QuadratureConfig& quad = {});

/// Wasserstein-1 distance, the L1 distance between the two cdfs.
double w1_distance(const PredictiveDistribution& f, const PredictiveDistribution& g,
                   const QuadratureConfig& quad = {});

/// m_1(F) = E|X|.
double first_abs_moment(const PredictiveDistribution& f);

/// E|X - Y| for independent X ~ F and Y ~ G, exact for atoms and Gaussians.
double expected_abs_difference(const PredictiveDistribution& f, const PredictiveDistribution& g);

WeightedEmpirical flatten_mixture(const MixtureSpec& mixture, const DiscretizationConfig& disc = {});

/// Integral of (F - G)^2, i.e. S(F, G) - S(G, G) for the expected CRPS. Exact:
/// piecewise for two empirical laws, energy form otherwise.
double cdf_l2_divergence(const PredictiveDistribution& f, const PredictiveDistribution& g);

namespace detail {

/// Empirical CRPS on pre-sorted atoms; weights may contain zeros.
double crps_sorted(std::span<const double> atoms, std::span<const double> weights, double y) noexcept;

}  // namespace detail

}  // namespace crpslab
