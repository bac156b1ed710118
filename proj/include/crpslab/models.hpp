#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/distributions.hpp"

namespace crpslab {

/// Lower bound applied to the softplus argument of the variance link. Keeps the
/// scale strictly positive (sigma >= ~3e-7) for every finite parameter.
inline constexpr double kMinScaleArgument = -30.0;

double softplus(double u) noexcept;
double softplus_inverse(double v);
double sigmoid(double u) noexcept;

/// Coordinatewise bounds defining the compact parameter set.
class ParamBox {
 public:
  ParamBox() = default;
  ParamBox(std::vector<double> lower, std::vector<double> upper);

  static ParamBox around(std::span<const double> center, double half_width);

  std::size_t dim() const noexcept { return lower_.size(); }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }

  bool contains(std::span<const double> theta, double tol = 0.0) const noexcept;
  void project(std::span<double> theta) const noexcept;
  /// Radius of the smallest origin-centred ball containing the box.
  double circumradius() const noexcept;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

// ---------------------------------------------------------------------------
// EMOS: m = alpha + beta'x, sigma^2 = softplus(alpha_s + beta_s'x)

struct EmosParams {
  double alpha = 0.0;
  std::vector<double> beta;
  double alpha_scale = 0.0;
  std::vector<double> beta_scale;

  std::size_t dim() const noexcept { return beta.size(); }
  /// K = 2(1 + d).
  std::size_t size() const noexcept { return 2 * (1 + beta.size()); }

  /// Layout [alpha, beta..., alpha_scale, beta_scale...].
  std::vector<double> to_vector() const;
  static EmosParams from_vector(std::span<const double> theta, std::size_t dim);

  friend bool operator==(const EmosParams&, const EmosParams&) = default;
};

GaussianLS emos_predict(const EmosParams& p, std::span<const double> x);

/// Gradient of crps_gaussian(emos_predict(p, x), y) in the to_vector() layout.
std::vector<double> emos_grad(const EmosParams& p, std::span<const double> x, double y);

// ---------------------------------------------------------------------------
// DRN with one hidden layer of width H shared by both heads:
//   h = g(gamma + delta x),  m = alpha + beta'h,  sigma^2 = softplus(alpha_s + beta_s'h)

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DrnParams {
  std::size_t hidden = 0;
  std::size_t input_dim = 0;
  Activation activation = Activation::relu;
  double alpha = 0.0;
  std::vector<double> beta;        // H
  double alpha_scale = 0.0;
  std::vector<double> beta_scale;  // H
  std::vector<double> gamma;       // H
  std::vector<double> delta;       // H x d, row-major

  /// (d + 3) H + 2.
  std::size_t size() const noexcept { return (input_dim + 3) * hidden + 2; }

  /// Layout [alpha, beta..., alpha_scale, beta_scale..., gamma..., delta...].
  std::vector<double> to_vector() const;
  static DrnParams from_vector(std::span<const double> theta, std::size_t hidden, std::size_t input_dim,
                               Activation activation);

  void validate() const;

  friend bool operator==(const DrnParams&, const DrnParams&) = default;
};

GaussianLS drn_predict(const DrnParams& p, std::span<const double> x);

struct DrnGradient {
  std::vector<double> values;  // to_vector() layout
  bool scale_clamped = false;  // softplus argument hit kMinScaleArgument
};

DrnGradient drn_grad(const DrnParams& p, std::span<const double> x, double y);

// ---------------------------------------------------------------------------
// Distributional k nearest neighbours

struct KnnModel {
  std::size_t k = 1;
  Matrix x;
  std::vector<double> y;
  bool standardize = false;
  std::vector<double> center;  // per-feature shift applied before distances
  std::vector<double> spread;  // per-feature divisor applied before distances

  std::size_t dim() const noexcept { return x.cols(); }
};

KnnModel knn_fit(const Dataset& train, std::size_t k, bool standardize = false);

/// The `count` nearest training indices, ordered by (distance, index).
std::vector<std::size_t> knn_neighbors(const KnnModel& m, std::span<const double> x, std::size_t count);

WeightedEmpirical knn_predict(const KnnModel& m, std::span<const double> x);

/// beta_n = max_i |Y_i|.
double subgauss_proxy(std::span<const double> train_y);

}  // namespace crpslab
