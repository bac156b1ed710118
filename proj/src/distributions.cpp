#include "crpslab/distributions.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <type_traits>

#include "crpslab/errors.hpp"
#include "crpslab/quadrature.hpp"

namespace crpslab {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)
constexpr double kWeightSumTol = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> validated_simplex(std::vector<double> weights, const char* what) {
  if (weights.empty()) throw InputError(std::string(what) + ": no weights");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InputError(std::string(what) + ": negative or non-finite weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw InputError(std::string(what) + ": weights do not sum to one");
  }
  for (double& w : weights) w /= total;
  return weights;
}

}  // namespace

double normal_pdf(double z) noexcept {
  return 0.39894228040143267794 * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_abs_mean(double mean, double sd) noexcept {
  if (sd <= 0.0) return std::abs(mean);
  const double r = mean / sd;
  return sd * (2.0 * normal_pdf(r) + r * (2.0 * normal_cdf(r) - 1.0));
}

// ---------------------------------------------------------------------------
// Representations

WeightedEmpirical::WeightedEmpirical(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty()) throw InputError("empirical distribution needs at least one atom");
  if (atoms.size() != weights.size()) throw InputError("atoms and weights differ in length");
  for (double a : atoms) {
    if (!std::isfinite(a)) throw InputError("non-finite atom");
  }
  weights = validated_simplex(std::move(weights), "empirical distribution");

  if (!std::is_sorted(atoms.begin(), atoms.end())) {
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    std::vector<double> sa(atoms.size());
    std::vector<double> sw(atoms.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      sa[i] = atoms[order[i]];
      sw[i] = weights[order[i]];
    }
    atoms = std::move(sa);
    weights = std::move(sw);
  }

  atoms_.reserve(atoms.size());
  weights_.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] == 0.0) continue;
    if (!atoms_.empty() && atoms_.back() == atoms[i]) {
      weights_.back() += weights[i];
    } else {
      atoms_.push_back(atoms[i]);
      weights_.push_back(weights[i]);
    }
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (double& w : weights_) w /= total;
  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

WeightedEmpirical WeightedEmpirical::dirac(double value) { return WeightedEmpirical({value}, {1.0}); }

WeightedEmpirical WeightedEmpirical::uniform(std::vector<double> values) {
  const auto n = values.size();
  if (n == 0) throw InputError("empirical distribution needs at least one atom");
  return WeightedEmpirical(std::move(values), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double WeightedEmpirical::cdf(double z) const noexcept {
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), z);
  if (it == atoms_.begin()) return 0.0;
  if (it == atoms_.end()) return 1.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double WeightedEmpirical::cdf_left(double z) const noexcept {
  const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z);
  if (it == atoms_.begin()) return 0.0;
  if (it == atoms_.end()) return 1.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

GaussianLS::GaussianLS(double location, double scale) : location_(location), scale_(scale) {
  if (!std::isfinite(location) || !std::isfinite(scale)) throw InputError("non-finite Gaussian parameter");
  if (!(scale > 0.0)) throw InputError("Gaussian scale must be positive");
}

MixtureSpec::MixtureSpec(std::vector<PredictiveDistribution> components, std::vector<double> weights)
    : components_(std::move(components)) {
  if (components_.empty()) throw InputError("mixture needs at least one component");
  if (components_.size() != weights.size()) throw InputError("mixture components and weights differ in length");
  weights_ = validated_simplex(std::move(weights), "mixture");
}

double PredictiveDistribution::cdf(double z) const noexcept {
  return std::visit(Overloaded{[&](const WeightedEmpirical& d) { return d.cdf(z); },
                               [&](const GaussianLS& d) { return d.cdf(z); },
                               [&](const MixtureSpec& d) {
                                 double acc = 0.0;
                                 for (std::size_t m = 0; m < d.components().size(); ++m) {
                                   acc += d.weights()[m] * d.components()[m].cdf(z);
                                 }
                                 return acc;
                               }},
                    value_);
}

double PredictiveDistribution::cdf_left(double z) const noexcept {
  return std::visit(Overloaded{[&](const WeightedEmpirical& d) { return d.cdf_left(z); },
                               [&](const GaussianLS& d) { return d.cdf(z); },
                               [&](const MixtureSpec& d) {
                                 double acc = 0.0;
                                 for (std::size_t m = 0; m < d.components().size(); ++m) {
                                   acc += d.weights()[m] * d.components()[m].cdf_left(z);
                                 }
                                 return acc;
                               }},
                    value_);
}

// ---------------------------------------------------------------------------
// Closed forms

double detail::crps_sorted(std::span<const double> atoms, std::span<const double> weights,
                           double y) noexcept {
  // sum_i w_i |y_i - y|  -  sum_{i<j} w_i w_j (y_(j) - y_(i)); the pair term is
  // sum_k W_k (W - W_k) (y_(k+1) - y_(k)) with W_k the cumulative weight.
  const std::size_t n = atoms.size();
  double total = 0.0;
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += weights[i];
    spread += weights[i] * std::abs(atoms[i] - y);
  }
  double pair = 0.0;
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    cum += weights[k];
    pair += cum * (total - cum) * (atoms[k + 1] - atoms[k]);
  }
  return std::max(0.0, spread - pair);
}

double crps_empirical(const WeightedEmpirical& f, double y) {
  if (!std::isfinite(y)) throw InputError("observation must be finite");
  return detail::crps_sorted(f.atoms(), f.weights(), y);
}

double crps_gaussian(const GaussianLS& g, double y) {
  if (!std::isfinite(y)) throw InputError("observation must be finite");
  const double z = (y - g.location()) / g.scale();
  return g.scale() * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - kInvSqrtPi);
}

GaussianCrpsGradient crps_gaussian_grad(const GaussianLS& g, double y) {
  if (std::isnan(y)) throw InputError("observation must not be NaN");
  if (std::isinf(y)) return {y > 0 ? -1.0 : 1.0, -kInvSqrtPi};
  const double z = (y - g.location()) / g.scale();
  return {-(2.0 * normal_cdf(z) - 1.0), 2.0 * normal_pdf(z) - kInvSqrtPi};
}

double crps(const PredictiveDistribution& f, double y, const DiscretizationConfig& disc) {
  return std::visit(Overloaded{[&](const WeightedEmpirical& d) { return crps_empirical(d, y); },
                               [&](const GaussianLS& d) { return crps_gaussian(d, y); },
                               [&](const MixtureSpec& d) { return crps_empirical(flatten_mixture(d, disc), y); }},
                    f.value());
}

// ---------------------------------------------------------------------------
// Quadrature-based quantities

namespace {

void collect_breakpoints(const PredictiveDistribution& f, double tails, std::vector<double>& out) {
  std::visit(Overloaded{[&](const WeightedEmpirical& d) { out.insert(out.end(), d.atoms().begin(), d.atoms().end()); },
                        [&](const GaussianLS& d) {
                          out.push_back(d.location() - tails * d.scale());
                          out.push_back(d.location());
                          out.push_back(d.location() + tails * d.scale());
                        },
                        [&](const MixtureSpec& d) {
                          for (const auto& c : d.components()) collect_breakpoints(c, tails, out);
                        }},
             f.value());
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double checked(const QuadratureResult& r, const char* what) {
  if (!r.converged) throw NumericalError(std::string(what) + ": quadrature did not reach tolerance", r.value);
  return r.value;
}

}  // namespace

double crps_integral(const PredictiveDistribution& f, double y, const QuadratureConfig& quad) {
  if (!std::isfinite(y)) throw InputError("observation must be finite");
  std::vector<double> points{y};
  collect_breakpoints(f, quad.tail_sigmas, points);
  points = sorted_unique(std::move(points));

  const auto right = [&](double z) {
    const double d = (y <= z ? 1.0 : 0.0) - f.cdf(z);
    return d * d;
  };
  const auto left = [&](double z) {
    const double d = (y < z ? 1.0 : 0.0) - f.cdf_left(z);
    return d * d;
  };
  return std::max(0.0, checked(integrate_piecewise(right, left, points, quad.abs_tol, quad.max_depth),
                               "crps_integral"));
}

namespace {

double w1_empirical(const WeightedEmpirical& f, const WeightedEmpirical& g) {
  std::vector<double> points(f.atoms().begin(), f.atoms().end());
  points.insert(points.end(), g.atoms().begin(), g.atoms().end());
  points = sorted_unique(std::move(points));
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    acc += std::abs(f.cdf(points[k]) - g.cdf(points[k])) * (points[k + 1] - points[k]);
  }
  return acc;
}

}  // namespace

double w1_distance(const PredictiveDistribution& f, const PredictiveDistribution& g,
                   const QuadratureConfig& quad) {
  const auto* fe = f.as<WeightedEmpirical>();
  const auto* ge = g.as<WeightedEmpirical>();
  if (fe != nullptr && ge != nullptr) return w1_empirical(*fe, *ge);

  std::vector<double> points;
  collect_breakpoints(f, quad.tail_sigmas, points);
  collect_breakpoints(g, quad.tail_sigmas, points);
  points = sorted_unique(std::move(points));
  const auto right = [&](double z) { return std::abs(f.cdf(z) - g.cdf(z)); };
  const auto left = [&](double z) { return std::abs(f.cdf_left(z) - g.cdf_left(z)); };
  return checked(integrate_piecewise(right, left, points, quad.abs_tol, quad.max_depth), "w1_distance");
}

// ---------------------------------------------------------------------------
// Energy-form computations on the atoms + Gaussians decomposition

namespace {

struct GaussComponent {
  double weight;
  double location;
  double scale;
};

/// F written as sum_i a_i delta_{x_i} + sum_k c_k N(mu_k, s_k^2), atoms sorted.
struct Decomposition {
  std::vector<double> atoms;
  std::vector<double> atom_weights;
  std::vector<GaussComponent> gaussians;
};

void decompose_into(const PredictiveDistribution& f, double scale,
                    std::vector<std::pair<double, double>>& atoms, std::vector<GaussComponent>& gaussians) {
  std::visit(Overloaded{[&](const WeightedEmpirical& d) {
                          for (std::size_t i = 0; i < d.size(); ++i) atoms.emplace_back(d.atoms()[i], scale * d.weights()[i]);
                        },
                        [&](const GaussianLS& d) { gaussians.push_back({scale, d.location(), d.scale()}); },
                        [&](const MixtureSpec& d) {
                          for (std::size_t m = 0; m < d.components().size(); ++m) {
                            decompose_into(d.components()[m], scale * d.weights()[m], atoms, gaussians);
                          }
                        }},
             f.value());
}

Decomposition decompose(const PredictiveDistribution& f) {
  std::vector<std::pair<double, double>> atoms;
  Decomposition out;
  decompose_into(f, 1.0, atoms, out.gaussians);
  std::sort(atoms.begin(), atoms.end());
  out.atoms.reserve(atoms.size());
  out.atom_weights.reserve(atoms.size());
  for (const auto& [a, w] : atoms) {
    out.atoms.push_back(a);
    out.atom_weights.push_back(w);
  }
  return out;
}

/// sum_{i,j} a_i b_j |x_i - y_j| for two sorted weighted atom lists, as the
/// integral of A(z)(B - G(z)) + G(z)(A - A(z)) over the merged breakpoints.
double atoms_abs_diff(std::span<const double> xa, std::span<const double> wa, std::span<const double> xb,
                      std::span<const double> wb) {
  if (xa.empty() || xb.empty()) return 0.0;
  const double mass_a = std::accumulate(wa.begin(), wa.end(), 0.0);
  const double mass_b = std::accumulate(wb.begin(), wb.end(), 0.0);
  std::size_t i = 0;
  std::size_t j = 0;
  double ca = 0.0;
  double cb = 0.0;
  double acc = 0.0;
  double prev = std::min(xa.front(), xb.front());
  while (i < xa.size() || j < xb.size()) {
    const double next = (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j])) ? xa[i] : xb[j];
    acc += (ca * (mass_b - cb) + cb * (mass_a - ca)) * (next - prev);
    while (i < xa.size() && xa[i] == next) ca += wa[i++];
    while (j < xb.size() && xb[j] == next) cb += wb[j++];
    prev = next;
  }
  return acc;
}

/// E|X - Y| for independent X ~ F, Y ~ G given as decompositions.
double mean_abs_difference(const Decomposition& f, const Decomposition& g) {
  double acc = atoms_abs_diff(f.atoms, f.atom_weights, g.atoms, g.atom_weights);
  for (const auto& c : g.gaussians) {
    for (std::size_t i = 0; i < f.atoms.size(); ++i) {
      acc += f.atom_weights[i] * c.weight * normal_abs_mean(f.atoms[i] - c.location, c.scale);
    }
  }
  for (const auto& c : f.gaussians) {
    for (std::size_t j = 0; j < g.atoms.size(); ++j) {
      acc += g.atom_weights[j] * c.weight * normal_abs_mean(g.atoms[j] - c.location, c.scale);
    }
  }
  for (const auto& a : f.gaussians) {
    for (const auto& b : g.gaussians) {
      acc += a.weight * b.weight *
             normal_abs_mean(a.location - b.location, std::hypot(a.scale, b.scale));
    }
  }
  return acc;
}

double l2_empirical(const WeightedEmpirical& f, const WeightedEmpirical& g) {
  std::vector<double> points(f.atoms().begin(), f.atoms().end());
  points.insert(points.end(), g.atoms().begin(), g.atoms().end());
  points = sorted_unique(std::move(points));
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double d = f.cdf(points[k]) - g.cdf(points[k]);
    acc += d * d * (points[k + 1] - points[k]);
  }
  return acc;
}

}  // namespace

double first_abs_moment(const PredictiveDistribution& f) {
  const Decomposition d = decompose(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < d.atoms.size(); ++i) acc += d.atom_weights[i] * std::abs(d.atoms[i]);
  for (const auto& c : d.gaussians) acc += c.weight * normal_abs_mean(c.location, c.scale);
  return acc;
}

double expected_abs_difference(const PredictiveDistribution& f, const PredictiveDistribution& g) {
  return mean_abs_difference(decompose(f), decompose(g));
}

double cdf_l2_divergence(const PredictiveDistribution& f, const PredictiveDistribution& g) {
  const auto* fe = f.as<WeightedEmpirical>();
  const auto* ge = g.as<WeightedEmpirical>();
  if (fe != nullptr && ge != nullptr) return l2_empirical(*fe, *ge);

  const Decomposition df = decompose(f);
  const Decomposition dg = decompose(g);
  const double cross = mean_abs_difference(df, dg);
  const double self_f = mean_abs_difference(df, df);
  const double self_g = mean_abs_difference(dg, dg);
  return std::max(0.0, cross - 0.5 * self_f - 0.5 * self_g);
}

// ---------------------------------------------------------------------------

namespace {

void flatten_into(const PredictiveDistribution& f, double scale, int n_quantiles, std::vector<double>& atoms,
                  std::vector<double>& weights) {
  std::visit(Overloaded{[&](const WeightedEmpirical& d) {
                          for (std::size_t i = 0; i < d.size(); ++i) {
                            atoms.push_back(d.atoms()[i]);
                            weights.push_back(scale * d.weights()[i]);
                          }
                        },
                        [&](const GaussianLS& d) {
                          const double w = scale / n_quantiles;
                          for (int j = 0; j < n_quantiles; ++j) {
                            const double level = (j + 0.5) / n_quantiles;
                            atoms.push_back(d.location() + d.scale() * normal_quantile(level));
                            weights.push_back(w);
                          }
                        },
                        [&](const MixtureSpec& d) {
                          for (std::size_t m = 0; m < d.components().size(); ++m) {
                            flatten_into(d.components()[m], scale * d.weights()[m], n_quantiles, atoms, weights);
                          }
                        }},
             f.value());
}

}  // namespace

WeightedEmpirical flatten_mixture(const MixtureSpec& mixture, const DiscretizationConfig& disc) {
  if (disc.n_quantiles < 1) throw ConfigError("n_quantiles must be at least 1");
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t m = 0; m < mixture.components().size(); ++m) {
    flatten_into(mixture.components()[m], mixture.weights()[m], disc.n_quantiles, atoms, weights);
  }
  return WeightedEmpirical(std::move(atoms), std::move(weights));
}

}  // namespace crpslab
