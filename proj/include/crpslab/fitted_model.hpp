#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crpslab/distributions.hpp"
#include "crpslab/forest.hpp"
#include "crpslab/models.hpp"

namespace crpslab {

class FittedModel;

/// Convex combination of fitted models; predicts the mixture of their laws.
struct MixtureModel {
  std::vector<std::shared_ptr<const FittedModel>> components;
  std::vector<double> weights;
};

/// Arbitrary x -> law map (synthetic truths, fixtures).
struct ConditionalModel {
  std::string name;
  std::size_t dim = 0;
  std::function<PredictiveDistribution(std::span<const double>)> law;
};

class FittedModel {
 public:
  using Variant = std::variant<EmosParams, DrnParams, KnnModel, DrfModel, MixtureModel, ConditionalModel>;

  FittedModel(EmosParams m) : value_(std::move(m)) {}
  FittedModel(DrnParams m) : value_(std::move(m)) {}
  FittedModel(KnnModel m) : value_(std::move(m)) {}
  FittedModel(DrfModel m) : value_(std::move(m)) {}
  FittedModel(MixtureModel m);
  FittedModel(ConditionalModel m) : value_(std::move(m)) {}

  const Variant& value() const noexcept { return value_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&value_);
  }

  /// "emos", "drn", "knn", "drf", "mixture" or the conditional model's name.
  std::string kind() const;
  std::size_t dim() const;

  PredictiveDistribution predict(std::span<const double> x) const;

  /// crps(predict(x), y), using the cheapest exact route for the representation.
  double score(std::span<const double> x, double y, const DiscretizationConfig& disc = {}) const;

 private:
  Variant value_;
};

using ModelPtr = std::shared_ptr<const FittedModel>;

template <class T>
ModelPtr make_model(T model) {
  return std::make_shared<const FittedModel>(std::move(model));
}

}  // namespace crpslab
