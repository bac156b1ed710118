#include "crpslab/fitted_model.hpp"

#include <cmath>

#include "crpslab/errors.hpp"

namespace crpslab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

FittedModel::FittedModel(MixtureModel m) {
  if (m.components.empty()) throw InputError("mixture model needs at least one component");
  if (m.components.size() != m.weights.size()) throw InputError("mixture weights and components differ in length");
  for (const auto& c : m.components) {
    if (!c) throw InputError("null mixture component");
    if (c->dim() != m.components.front()->dim()) throw InputError("mixture components disagree in dimension");
  }
  value_ = std::move(m);
}

std::string FittedModel::kind() const {
  return std::visit(Overloaded{[](const EmosParams&) { return std::string("emos"); },
                               [](const DrnParams&) { return std::string("drn"); },
                               [](const KnnModel&) { return std::string("knn"); },
                               [](const DrfModel&) { return std::string("drf"); },
                               [](const MixtureModel&) { return std::string("mixture"); },
                               [](const ConditionalModel& c) { return c.name; }},
                    value_);
}

std::size_t FittedModel::dim() const {
  return std::visit(Overloaded{[](const EmosParams& p) { return p.dim(); },
                               [](const DrnParams& p) { return p.input_dim; },
                               [](const KnnModel& p) { return p.dim(); },
                               [](const DrfModel& p) { return p.dim; },
                               [](const MixtureModel& p) { return p.components.front()->dim(); },
                               [](const ConditionalModel& p) { return p.dim; }},
                    value_);
}

PredictiveDistribution FittedModel::predict(std::span<const double> x) const {
  return std::visit(
      Overloaded{[&](const EmosParams& p) { return PredictiveDistribution(emos_predict(p, x)); },
                 [&](const DrnParams& p) { return PredictiveDistribution(drn_predict(p, x)); },
                 [&](const KnnModel& p) { return PredictiveDistribution(knn_predict(p, x)); },
                 [&](const DrfModel& p) { return PredictiveDistribution(drf_predict(p, x)); },
                 [&](const MixtureModel& p) {
                   std::vector<PredictiveDistribution> laws;
                   laws.reserve(p.components.size());
                   for (const auto& c : p.components) laws.push_back(c->predict(x));
                   return PredictiveDistribution(MixtureSpec(std::move(laws), p.weights));
                 },
                 [&](const ConditionalModel& p) {
                   if (x.size() != p.dim) throw InputError("covariate dimension mismatch");
                   return p.law(x);
                 }},
      value_);
}

double FittedModel::score(std::span<const double> x, double y, const DiscretizationConfig& disc) const {
  if (!std::isfinite(y)) throw InputError("observation must be finite");
  if (const auto* drf = as<DrfModel>()) return drf_crps(*drf, x, y);
  return crps(predict(x), y, disc);
}

}  // namespace crpslab
