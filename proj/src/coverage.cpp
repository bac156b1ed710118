#include "crpslab/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "crpslab/bounds.hpp"
#include "crpslab/ensemble.hpp"
#include "crpslab/errors.hpp"
#include "crpslab/parallel.hpp"
#include "crpslab/risk.hpp"
#include "crpslab/synthetic.hpp"

namespace crpslab {

std::string to_string(CoverageScenario s) {
  switch (s) {
    case CoverageScenario::estimation: return "estimation";
    case CoverageScenario::selection: return "selection";
    case CoverageScenario::aggregation: return "aggregation";
    case CoverageScenario::constant: return "constant";
  }
  return "selection";
}

CoverageScenario coverage_scenario_from_string(const std::string& name) {
  if (name == "estimation") return CoverageScenario::estimation;
  if (name == "selection") return CoverageScenario::selection;
  if (name == "aggregation") return CoverageScenario::aggregation;
  if (name == "constant") return CoverageScenario::constant;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<std::size_t> default_grid(CoverageScenario s) {
  if (s == CoverageScenario::estimation) return {250, 1000, 4000};
  return {250, 1000};
}

double loglog_slope(std::span<const double> sizes, std::span<const double> values) {
  if (sizes.size() != values.size() || sizes.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0) || !(values[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    sx += std::log(sizes[i]);
    sy += std::log(values[i]);
  }
  const double k = static_cast<double>(sizes.size());
  const double mx = sx / k;
  const double my = sy / k;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double dx = std::log(sizes[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct RepOutcome {
  double value = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool valid = true;
  bool flagged = false;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SyntheticGenerator scenario_truth(const CoverageConfig& cfg) {
  SyntheticSpec spec;
  spec.dim = cfg.dim;
  switch (cfg.scenario) {
    case CoverageScenario::estimation: spec.preset = SyntheticPreset::linear_emos; break;
    case CoverageScenario::selection:
    case CoverageScenario::aggregation: spec.preset = SyntheticPreset::sine_drn; break;
    case CoverageScenario::constant:
      spec.preset = SyntheticPreset::constant;
      spec.level = 1.0;
      spec.noise = 0.0;
      break;
  }
  return SyntheticGenerator(spec);
}

}  // namespace

CoverageReport coverage_experiment(const CoverageConfig& cfg_in) {
  CoverageConfig cfg = cfg_in;
  if (cfg.grid.empty()) cfg.grid = default_grid(cfg.scenario);
  if (cfg.reps < cfg.min_reps || cfg.reps == 0) {
    throw ConfigError("coverage experiment needs reps >= " + std::to_string(std::max<std::size_t>(cfg.min_reps, 1)));
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (cfg.x_mc < 2) throw ConfigError("x_mc must be at least 2");

  const SyntheticGenerator truth = scenario_truth(cfg);
  const bool estimation = cfg.scenario == CoverageScenario::estimation;
  const std::size_t k_emos = 2 * (1 + cfg.dim);

  CoverageReport report;
  report.beta1 = truth.beta1();
  std::optional<ParamBox> box;
  if (estimation) {
    for (std::size_t n : cfg.grid) {
      if (n < k_emos) throw ConfigError("grid size " + std::to_string(n) + " is below K = " + std::to_string(k_emos));
    }
    box = ParamBox(std::vector<double>(k_emos, -cfg.box_half_width), std::vector<double>(k_emos, cfg.box_half_width));
    const auto truth_params = truth.emos_truth();
    if (!truth_params || !box->contains(truth_params->to_vector())) {
      throw ConfigError("estimation scenario needs the true parameters inside the box");
    }
    const EmosConstants c = emos_constants(*box, cfg.dim);
    report.beta2 = c.beta2;
    report.L = c.L;
    report.R = c.R;
    report.K = static_cast<double>(k_emos);
    report.bound_name = "estimation";
  } else {
    if (cfg.n_train < std::max<std::size_t>(cfg.knn_k, 2 * cfg.drf.min_node_size)) {
      throw ConfigError("n_train too small for the candidates");
    }
    for (std::size_t n : cfg.grid) {
      if (n < 1) throw ConfigError("validation size must be positive");
    }
    report.K = 2.0;
    report.bound_name = cfg.scenario == CoverageScenario::aggregation ? "aggregation_regret" : "selection_regret";
  }

  for (std::size_t size : cfg.grid) {
    std::vector<RepOutcome> outcomes(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
      const std::uint64_t rep_seed = derive_seed(derive_seed(cfg.seed, size), r);
      Rng rng(rep_seed);
      RepOutcome& out = outcomes[r];
      BoundInputs b;
      b.delta = cfg.delta;
      b.beta1 = report.beta1;
      if (estimation) {
        const Dataset train = truth.sample(size, rng);
        const FitResult fit = fit_emos(train, box, OptimizerConfig{}, derive_seed(rep_seed, 1));
        const RiskEstimate err = excess_risk_exact(*fit.model(), truth, cfg.x_mc, derive_seed(rep_seed, 2));
        out.value = err.value;
        out.std_error = err.std_error;
        out.flagged = !fit.converged;
        b.n = static_cast<double>(size);
        b.K = report.K;
        b.beta2 = report.beta2;
        b.L = report.L;
        b.R = report.R;
        const BoundValue bv = bound_estimation(b);
        out.bound = bv.value;
        out.valid = bv.valid;
        return;
      }
      const Dataset train = truth.sample(cfg.n_train, rng);
      const Dataset val = truth.sample(size, rng);
      const CandidateSet candidates{
          {"knn", make_model(knn_fit(train, cfg.knn_k))},
          {"drf", make_model(drf_fit(train, cfg.drf, derive_seed(rep_seed, 1)))},
      };
      b.N = static_cast<double>(size);
      b.M = static_cast<double>(candidates.size());
      b.beta_n = subgauss_proxy(train.y);
      if (cfg.scenario == CoverageScenario::aggregation) {
        AggregationConfig agg;
        const RegretResult res =
            regret_aggregation(candidates, truth, val, cfg.grid_step, cfg.x_mc, derive_seed(rep_seed, 2), agg);
        out.value = res.regret;
        out.std_error = res.std_error;
        const BoundValue bv = bound_aggregation_regret(b);
        out.bound = bv.value;
        out.valid = bv.valid;
      } else {
        const RegretResult res = regret_selection(candidates, truth, val, cfg.x_mc, derive_seed(rep_seed, 2));
        out.value = res.regret;
        out.std_error = res.std_error;
        const BoundValue bv = bound_selection_regret(b);
        out.bound = bv.value;
        out.valid = bv.valid;
      }
    });

    CoveragePoint point;
    point.size = size;
    std::size_t covered = 0;
    for (const RepOutcome& o : outcomes) {
      point.values.push_back(o.value);
      point.std_errors.push_back(o.std_error);
      point.bounds.push_back(o.bound);
      point.valid.push_back(o.valid);
      point.flagged.push_back(o.flagged);
      if (o.value <= o.bound) ++covered;
    }
    point.coverage = static_cast<double>(covered) / static_cast<double>(cfg.reps);
    point.median = median(point.values);
    report.points.push_back(std::move(point));
  }

  std::vector<double> sizes;
  std::vector<double> medians;
  for (const auto& p : report.points) {
    sizes.push_back(static_cast<double>(p.size));
    medians.push_back(p.median);
  }
  report.slope = loglog_slope(sizes, medians);
  report.slack = 2.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / static_cast<double>(cfg.reps));
  report.threshold = 1.0 - cfg.delta - report.slack;
  report.config = cfg;
  return report;
}

}  // namespace crpslab
