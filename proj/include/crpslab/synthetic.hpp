#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "crpslab/dataset.hpp"
#include "crpslab/distributions.hpp"
#include "crpslab/fitted_model.hpp"
#include "crpslab/models.hpp"
#include "crpslab/rng.hpp"

namespace crpslab {

enum class SyntheticPreset { linear_emos, sine_drn, constant };

std::string to_string(SyntheticPreset p);
SyntheticPreset synthetic_preset_from_string(const std::string& name);

struct SyntheticSpec {
  SyntheticPreset preset = SyntheticPreset::linear_emos;
  std::size_t dim = 1;
  /// constant preset: Y ~ N(level, noise^2), a point mass when noise == 0.
  double level = 0.0;
  double noise = 1.0;
};

/// Y = m(X) + s(X) eps with X uniform on [0,1]^d and eps standard normal.
///   linear_emos: m = 2 + 3 x_0, s = 1
///   sine_drn:    m = sin(2 pi x_0), s = 0.1 + 0.2 x_0
///   constant:    m = level, s = noise
class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(SyntheticSpec spec);

  const SyntheticSpec& spec() const noexcept { return spec_; }
  std::size_t dim() const noexcept { return spec_.dim; }

  double mean(std::span<const double> x) const;
  double sd(std::span<const double> x) const;

  /// F*_x in closed form.
  PredictiveDistribution conditional(std::span<const double> x) const;
  ModelPtr truth_model() const;

  std::vector<double> sample_x(Rng& rng) const;
  double sample_y(std::span<const double> x, Rng& rng) const;
  Dataset sample(std::size_t n, Rng& rng) const;

  /// Sub-Gaussian parameter of Y: sqrt(((max m - min m) / 2)^2 + max s^2).
  double beta1() const noexcept;

  /// EMOS parameters reproducing F*_x exactly, when the preset is realizable.
  std::optional<EmosParams> emos_truth() const;

 private:
  SyntheticSpec spec_;
};

}  // namespace crpslab
