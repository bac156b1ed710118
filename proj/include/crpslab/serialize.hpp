#pragma once

#include <filesystem>

#include <json.hpp>

#include "crpslab/bounds.hpp"
#include "crpslab/coverage.hpp"
#include "crpslab/distributions.hpp"
#include "crpslab/ensemble.hpp"
#include "crpslab/fitted_model.hpp"
#include "crpslab/pipeline.hpp"
#include "crpslab/risk.hpp"

namespace crpslab {

using Json = nlohmann::ordered_json;

/// {"type":"empirical","atoms":[...],"weights":[...]} | {"type":"gaussian","m":..,"sigma":..}
/// | {"type":"mixture","weights":[...],"components":[...]}
Json dist_to_json(const PredictiveDistribution& f);
PredictiveDistribution dist_from_json(const Json& j);

/// Tagged by "type": emos, drn, knn, drf or mixture. DRF trees are stored as
/// node arrays; internal nodes carry feature/threshold/left/right and leaves
/// carry the in-bag training indices they hold.
Json model_to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);

Json box_to_json(const ParamBox& box);
Json fit_result_to_json(const FitResult& r);
Json aggregation_to_json(const AggregationResult& r);
Json regret_to_json(const RegretResult& r);
Json sweep_to_json(const SweepResult& s);
Json bound_to_json(const BoundValue& b);
BoundInputs bound_inputs_from_json(const Json& j);
Json coverage_to_json(const CoverageReport& r);
Json experiment_to_json(const ExperimentReport& r);

Json read_json_file(const std::filesystem::path& path);

}  // namespace crpslab
