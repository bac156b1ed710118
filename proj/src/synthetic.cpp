#include "crpslab/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "crpslab/errors.hpp"

namespace crpslab {

std::string to_string(SyntheticPreset p) {
  switch (p) {
    case SyntheticPreset::linear_emos: return "linear_emos";
    case SyntheticPreset::sine_drn: return "sine_drn";
    case SyntheticPreset::constant: return "constant";
  }
  return "linear_emos";
}

SyntheticPreset synthetic_preset_from_string(const std::string& name) {
  if (name == "linear_emos" || name == "linear") return SyntheticPreset::linear_emos;
  if (name == "sine_drn" || name == "sine") return SyntheticPreset::sine_drn;
  if (name == "constant") return SyntheticPreset::constant;
  throw ConfigError("unknown synthetic preset '" + name + "'");
}

SyntheticGenerator::SyntheticGenerator(SyntheticSpec spec) : spec_(spec) {
  if (spec_.dim == 0) throw ConfigError("synthetic generator needs dim >= 1");
  if (!std::isfinite(spec_.level) || !(spec_.noise >= 0.0) || !std::isfinite(spec_.noise)) {
    throw ConfigError("constant preset needs finite level and noise >= 0");
  }
}

double SyntheticGenerator::mean(std::span<const double> x) const {
  if (x.size() != spec_.dim) throw InputError("covariate dimension mismatch");
  switch (spec_.preset) {
    case SyntheticPreset::linear_emos: return 2.0 + 3.0 * x[0];
    case SyntheticPreset::sine_drn: return std::sin(2.0 * std::numbers::pi * x[0]);
    case SyntheticPreset::constant: return spec_.level;
  }
  return 0.0;
}

double SyntheticGenerator::sd(std::span<const double> x) const {
  if (x.size() != spec_.dim) throw InputError("covariate dimension mismatch");
  switch (spec_.preset) {
    case SyntheticPreset::linear_emos: return 1.0;
    case SyntheticPreset::sine_drn: return 0.1 + 0.2 * x[0];
    case SyntheticPreset::constant: return spec_.noise;
  }
  return 1.0;
}

PredictiveDistribution SyntheticGenerator::conditional(std::span<const double> x) const {
  const double m = mean(x);
  const double s = sd(x);
  if (s == 0.0) return WeightedEmpirical::dirac(m);
  return GaussianLS(m, s);
}

ModelPtr SyntheticGenerator::truth_model() const {
  const SyntheticGenerator copy = *this;
  return make_model(ConditionalModel{"truth:" + to_string(spec_.preset), spec_.dim,
                                     [copy](std::span<const double> x) { return copy.conditional(x); }});
}

std::vector<double> SyntheticGenerator::sample_x(Rng& rng) const {
  std::vector<double> x(spec_.dim);
  for (double& v : x) v = rng.uniform();
  return x;
}

double SyntheticGenerator::sample_y(std::span<const double> x, Rng& rng) const {
  return mean(x) + sd(x) * rng.normal();
}

Dataset SyntheticGenerator::sample(std::size_t n, Rng& rng) const {
  Dataset out;
  out.x = Matrix(n, spec_.dim);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sample_x(rng);
    std::copy(x.begin(), x.end(), out.x.row(i).begin());
    out.y[i] = sample_y(x, rng);
  }
  for (std::size_t j = 0; j < spec_.dim; ++j) out.feature_names.push_back("x" + std::to_string(j));
  out.target_name = "y";
  out.source = "synthetic:" + to_string(spec_.preset);
  return out;
}

double SyntheticGenerator::beta1() const noexcept {
  double half_range = 0.0;
  double s_max = 0.0;
  switch (spec_.preset) {
    case SyntheticPreset::linear_emos:
      half_range = 1.5;
      s_max = 1.0;
      break;
    case SyntheticPreset::sine_drn:
      half_range = 1.0;
      s_max = 0.3;
      break;
    case SyntheticPreset::constant:
      s_max = spec_.noise;
      break;
  }
  return std::sqrt(half_range * half_range + s_max * s_max);
}

std::optional<EmosParams> SyntheticGenerator::emos_truth() const {
  const std::size_t d = spec_.dim;
  EmosParams p;
  p.beta.assign(d, 0.0);
  p.beta_scale.assign(d, 0.0);
  switch (spec_.preset) {
    case SyntheticPreset::linear_emos:
      p.alpha = 2.0;
      p.beta[0] = 3.0;
      p.alpha_scale = softplus_inverse(1.0);
      return p;
    case SyntheticPreset::constant:
      if (spec_.noise == 0.0) return std::nullopt;
      p.alpha = spec_.level;
      p.alpha_scale = softplus_inverse(spec_.noise * spec_.noise);
      return p;
    case SyntheticPreset::sine_drn:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace crpslab
