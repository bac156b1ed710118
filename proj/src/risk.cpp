#include "crpslab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crpslab/errors.hpp"
#include "crpslab/rng.hpp"

namespace crpslab {

namespace {

RiskEstimate summarize(std::vector<double> scores, bool keep) {
  RiskEstimate r;
  r.n = scores.size();
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(r.n);
  r.value = mean;
  if (r.n >= 2) {
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    r.std_error = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
  }
  if (keep) r.scores = std::move(scores);
  return r;
}

double sample_variance(std::span<const double> y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(y.size());
}

// Smallest variance used by the moment initializer; keeps softplus_inverse finite.
constexpr double kMinInitVariance = 1e-12;

ParamBox default_box(std::span<const double> center, const std::optional<ParamBox>& box, const OptimizerConfig& opt) {
  if (box) {
    if (box->dim() != center.size()) throw InputError("parameter box has wrong dimension");
    return *box;
  }
  return ParamBox::around(center, opt.box_half_width);
}

std::vector<double> uniform_in_box(const ParamBox& box, Rng& rng) {
  std::vector<double> v(box.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(box.lower()[i], box.upper()[i]);
  return v;
}

double emos_risk(std::span<const double> theta, const Dataset& train) {
  const EmosParams p = EmosParams::from_vector(theta, train.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) total += crps_gaussian(emos_predict(p, train.x.row(i)), train.y[i]);
  return total / static_cast<double>(train.size());
}

double drn_risk(std::span<const double> theta, const Dataset& train, std::size_t hidden, Activation act) {
  const DrnParams p = DrnParams::from_vector(theta, hidden, train.dim(), act);
  double total = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) total += crps_gaussian(drn_predict(p, train.x.row(i)), train.y[i]);
  return total / static_cast<double>(train.size());
}

void keep_better(FitResult& best, bool& have, std::vector<double> theta, const OptimResult& run, std::size_t start,
                 const std::function<std::variant<EmosParams, DrnParams>(std::span<const double>)>& decode) {
  if (!have || run.value < best.risk) {
    best.params = decode(theta);
    best.risk = run.value;
    best.trace = run.trace;
    best.iterations = run.iterations;
    best.converged = run.converged;
    best.best_start = start;
    have = true;
  }
}

/// Mini-batch projected gradient descent from theta. Returns the best iterate by
/// full-sample risk. `grad(params, x, y)` is the per-point gradient of the score at
/// the decoded parameters.
template <class Decode, class Grad>
OptimResult minibatch_descent(const Dataset& train, std::vector<double> theta, const ParamBox& box,
                              const OptimizerConfig& opt, Rng& rng, const Objective& risk, Decode decode,
                              Grad grad) {
  const std::size_t k = theta.size();
  const std::size_t n = train.size();
  const std::size_t batch = std::max<std::size_t>(1, std::min(opt.batch_size, n));

  OptimResult run;
  box.project(theta);
  run.x = theta;
  run.initial_value = run.value = risk(theta);
  double step = opt.step;
  std::size_t since_best = 0;
  std::vector<double> sum(k);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const auto p = decode(theta);
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const std::vector<double> gi = grad(p, train.x.row(i), train.y[i]);
        for (std::size_t j = 0; j < k; ++j) sum[j] += gi[j];
      }
      const double scale = step / static_cast<double>(stop - start);
      for (std::size_t j = 0; j < k; ++j) theta[j] -= scale * sum[j];
      box.project(theta);
      ++run.evaluations;
    }
    const double v = risk(theta);
    ++run.iterations;
    if (std::isfinite(v) && v < run.value) {
      run.value = v;
      run.x = theta;
      since_best = 0;
    } else if (++since_best >= opt.plateau_epochs) {
      step *= 0.5;
      since_best = 0;
    }
    run.trace.push_back(run.value);
  }
  // Converged when the last tenth of the epochs moved the best risk by < 1e-4 relative.
  const std::size_t tail = std::max<std::size_t>(1, run.trace.size() / 10);
  if (run.trace.size() > tail) {
    const double before = run.trace[run.trace.size() - 1 - tail];
    run.converged = before - run.value <= 1e-4 * std::max(1.0, std::abs(run.value));
  }
  return run;
}

}  // namespace

RiskEstimate empirical_risk(const FittedModel& model, const Dataset& sample, bool keep_scores,
                            const DiscretizationConfig& disc) {
  if (sample.size() == 0) throw InputError("empirical risk needs a nonempty sample");
  if (sample.dim() != model.dim()) throw InputError("sample dimension differs from model dimension");
  std::vector<double> scores(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) scores[i] = model.score(sample.x.row(i), sample.y[i], disc);
  return summarize(std::move(scores), keep_scores);
}

ModelPtr FitResult::model() const {
  return std::visit([](const auto& p) { return make_model(p); }, params);
}

EmosParams emos_moment_init(const Dataset& train) {
  if (train.size() == 0) throw InputError("cannot initialize from an empty sample");
  EmosParams p;
  p.alpha = std::accumulate(train.y.begin(), train.y.end(), 0.0) / static_cast<double>(train.size());
  p.beta.assign(train.dim(), 0.0);
  p.alpha_scale = softplus_inverse(std::max(sample_variance(train.y), kMinInitVariance));
  p.beta_scale.assign(train.dim(), 0.0);
  return p;
}

FitResult fit_emos(const Dataset& train, const std::optional<ParamBox>& box, const OptimizerConfig& opt,
                   std::uint64_t seed) {
  train.validate();
  const std::size_t k = 2 * (1 + train.dim());
  if (train.size() < k) throw InputError("fit_emos needs n >= K = 2(1+d)");
  if (opt.starts == 0) throw ConfigError("at least one optimizer start is required");

  const std::vector<double> init = emos_moment_init(train).to_vector();
  FitResult result;
  result.seed = seed;
  result.box = default_box(init, box, opt);

  const Objective objective = [&](std::span<const double> theta) { return emos_risk(theta, train); };
  const auto decode = [&](std::span<const double> theta) -> std::variant<EmosParams, DrnParams> {
    return EmosParams::from_vector(theta, train.dim());
  };

  bool have = false;
  const Rng root(seed);
  for (std::size_t s = 0; s < opt.starts; ++s) {
    std::vector<double> x0 = init;
    if (s > 0) {
      Rng rng = root.split(s);
      x0 = uniform_in_box(result.box, rng);
    }
    result.box.project(x0);

    OptimResult run;
    if (opt.kind == OptimizerKind::nelder_mead) {
      run = nelder_mead(objective, x0, result.box, opt.nelder_mead);
    } else {
      Rng rng = root.split(opt.starts + s);
      run = minibatch_descent(
          train, x0, result.box, opt, rng, objective,
          [&](std::span<const double> t) { return EmosParams::from_vector(t, train.dim()); },
          [](const EmosParams& p, std::span<const double> x, double y) { return emos_grad(p, x, y); });
    }
    if (s == 0) result.initial_risk = run.initial_value;
    result.evaluations += run.evaluations;
    keep_better(result, have, run.x, run, s, decode);
  }
  return result;
}

namespace {

OptimResult drn_gradient_descent(const Dataset& train, std::size_t hidden, Activation act, std::vector<double> theta,
                                 const ParamBox& box, const OptimizerConfig& opt, Rng& rng) {
  const Objective risk = [&](std::span<const double> t) { return drn_risk(t, train, hidden, act); };
  return minibatch_descent(
      train, std::move(theta), box, opt, rng, risk,
      [&](std::span<const double> t) { return DrnParams::from_vector(t, hidden, train.dim(), act); },
      [](const DrnParams& p, std::span<const double> x, double y) { return drn_grad(p, x, y).values; });
}

std::vector<double> drn_initial(const Dataset& train, std::size_t hidden, Activation act, Rng& rng) {
  const EmosParams moments = emos_moment_init(train);
  const std::size_t d = train.dim();
  DrnParams p;
  p.hidden = hidden;
  p.input_dim = d;
  p.activation = act;
  p.alpha = moments.alpha;
  p.alpha_scale = moments.alpha_scale;
  const double out_sd = hidden > 0 ? 1.0 / std::sqrt(static_cast<double>(hidden)) : 0.0;
  const double in_sd = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1)));
  p.beta.resize(hidden);
  p.beta_scale.resize(hidden);
  p.gamma.resize(hidden);
  p.delta.resize(hidden * d);
  for (double& v : p.beta) v = 0.1 * out_sd * rng.normal();
  for (double& v : p.beta_scale) v = 0.1 * out_sd * rng.normal();
  for (double& v : p.gamma) v = 0.1 * rng.normal();
  for (double& v : p.delta) v = in_sd * rng.normal();
  return p.to_vector();
}

}  // namespace

FitResult fit_drn(const Dataset& train, std::size_t hidden, Activation activation,
                  const std::optional<ParamBox>& box, const OptimizerConfig& opt, std::uint64_t seed) {
  train.validate();
  const std::size_t d = train.dim();
  const std::size_t k = (d + 3) * hidden + 2;
  if (train.size() < k) throw InputError("fit_drn needs n >= (d+3)H+2");
  if (opt.starts == 0) throw ConfigError("at least one optimizer start is required");

  // The box is centred on the moment initializer with zero network weights.
  DrnParams center;
  center.hidden = hidden;
  center.input_dim = d;
  center.activation = activation;
  const EmosParams moments = emos_moment_init(train);
  center.alpha = moments.alpha;
  center.alpha_scale = moments.alpha_scale;
  center.beta.assign(hidden, 0.0);
  center.beta_scale.assign(hidden, 0.0);
  center.gamma.assign(hidden, 0.0);
  center.delta.assign(hidden * d, 0.0);

  FitResult result;
  result.seed = seed;
  result.box = default_box(center.to_vector(), box, opt);

  const Objective objective = [&](std::span<const double> theta) { return drn_risk(theta, train, hidden, activation); };
  const auto decode = [&](std::span<const double> theta) -> std::variant<EmosParams, DrnParams> {
    return DrnParams::from_vector(theta, hidden, d, activation);
  };

  bool have = false;
  const Rng root(seed);
  for (std::size_t s = 0; s < opt.starts; ++s) {
    Rng rng = root.split(s);
    std::vector<double> x0 = drn_initial(train, hidden, activation, rng);
    OptimResult run;
    if (opt.kind == OptimizerKind::nelder_mead) {
      run = nelder_mead(objective, x0, result.box, opt.nelder_mead);
    } else {
      run = drn_gradient_descent(train, hidden, activation, x0, result.box, opt, rng);
      if (opt.polish_small && hidden <= 2) {
        OptimResult polish = nelder_mead(objective, run.x, result.box, opt.nelder_mead);
        if (polish.value <= run.value) {
          run.trace.insert(run.trace.end(), polish.trace.begin(), polish.trace.end());
          run.x = std::move(polish.x);
          run.value = polish.value;
          run.iterations += polish.iterations;
          run.evaluations += polish.evaluations;
          run.converged = polish.converged;
        }
      }
    }
    if (s == 0) result.initial_risk = run.initial_value;
    result.evaluations += run.evaluations;
    keep_better(result, have, run.x, run, s, decode);
  }
  return result;
}

RiskEstimate theoretical_risk_mc(const FittedModel& model, const SyntheticGenerator& truth, std::size_t n_mc,
                                 std::uint64_t seed, const DiscretizationConfig& disc) {
  if (n_mc < 2) throw InputError("theoretical risk needs n_mc >= 2");
  if (model.dim() != truth.dim()) throw InputError("model and truth disagree in dimension");
  Rng rng(seed);
  std::vector<double> scores(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    const auto x = truth.sample_x(rng);
    scores[i] = model.score(x, truth.sample_y(x, rng), disc);
  }
  return summarize(std::move(scores), false);
}

RiskEstimate excess_risk_exact(const FittedModel& model, const SyntheticGenerator& truth, std::size_t x_mc,
                               std::uint64_t seed) {
  if (x_mc < 1) throw InputError("excess risk needs x_mc >= 1");
  if (model.dim() != truth.dim()) throw InputError("model and truth disagree in dimension");
  Rng rng(seed);
  std::vector<double> values(x_mc);
  for (std::size_t i = 0; i < x_mc; ++i) {
    const auto x = truth.sample_x(rng);
    values[i] = cdf_l2_divergence(model.predict(x), truth.conditional(x));
  }
  return summarize(std::move(values), false);
}

}  // namespace crpslab
