#include "crpslab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crpslab/errors.hpp"

namespace crpslab {

namespace {

class Runner {
 public:
  Runner(const Objective& f, const std::optional<ParamBox>& box, const NelderMeadConfig& cfg, std::size_t k)
      : f_(f), box_(box), cfg_(cfg), k_(k) {}

  double eval(std::vector<double>& x) {
    if (box_) box_->project(x);
    ++evaluations_;
    double v = f_(x);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (v < best_ - cfg_.stall_tol) last_improvement_ = evaluations_;
    if (v < best_) {
      best_ = v;
      best_x_ = x;
    }
    return v;
  }

  bool stalled() const { return evaluations_ - last_improvement_ > cfg_.stall_evals_per_dim * k_; }
  bool exhausted() const { return evaluations_ >= cfg_.max_evals_per_dim * k_; }

  std::size_t evaluations_ = 0;
  std::size_t last_improvement_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;

 private:
  const Objective& f_;
  const std::optional<ParamBox>& box_;
  const NelderMeadConfig& cfg_;
  std::size_t k_;
};

std::vector<double> initial_steps(const std::vector<double>& x0, const std::optional<ParamBox>& box,
                                  const NelderMeadConfig& cfg) {
  const std::size_t k = x0.size();
  if (!cfg.step.empty()) {
    if (cfg.step.size() != k) throw ConfigError("Nelder-Mead step vector has wrong length");
    return cfg.step;
  }
  std::vector<double> step(k);
  for (std::size_t i = 0; i < k; ++i) {
    step[i] = box ? cfg.step_fraction * (box->upper()[i] - box->lower()[i])
                  : cfg.step_fraction * std::max(1.0, std::abs(x0[i]));
  }
  return step;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const std::optional<ParamBox>& box,
                        const NelderMeadConfig& cfg) {
  const std::size_t k = x0.size();
  if (k == 0) throw InputError("Nelder-Mead needs at least one coordinate");
  if (box && box->dim() != k) throw InputError("box dimension differs from starting point");

  Runner run(f, box, cfg, k);
  OptimResult out;
  out.initial_value = run.eval(x0);

  const std::vector<double> step = initial_steps(x0, box, cfg);
  std::vector<std::vector<double>> simplex{x0};
  std::vector<double> values{out.initial_value};
  bool degenerate = true;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> v = x0;
    double s = step[i];
    if (box && v[i] + s > box->upper()[i]) s = -s;
    v[i] += s;
    values.push_back(run.eval(v));
    degenerate = degenerate && v == x0;
    simplex.push_back(std::move(v));
  }

  std::vector<std::size_t> order(k + 1);
  auto finish = [&](bool converged) {
    out.x = run.best_x_;
    out.value = run.best_;
    out.evaluations = run.evaluations_;
    out.converged = converged;
    return out;
  };
  if (degenerate) return finish(true);

  std::vector<double> centroid(k);
  auto affine = [&](const std::vector<double>& from, double t) {
    // centroid + t (centroid - from)
    std::vector<double> p(k);
    for (std::size_t j = 0; j < k; ++j) p[j] = centroid[j] + t * (centroid[j] - from[j]);
    return p;
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[k - 1];

    if (values[worst] - values[best] < cfg.f_tol) return finish(true);
    if (run.stalled() || run.exhausted()) return finish(false);

    ++out.iterations;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(k);

    std::vector<double> reflected = affine(simplex[worst], cfg.reflection);
    const double f_reflected = run.eval(reflected);

    if (f_reflected < values[best]) {
      std::vector<double> expanded = affine(simplex[worst], cfg.reflection * cfg.expansion);
      const double f_expanded = run.eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = std::move(expanded);
        values[worst] = f_expanded;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = f_reflected;
      }
    } else if (f_reflected < values[second_worst]) {
      simplex[worst] = std::move(reflected);
      values[worst] = f_reflected;
    } else {
      const bool outside = f_reflected < values[worst];
      std::vector<double> contracted =
          outside ? affine(simplex[worst], cfg.reflection * cfg.contraction) : affine(simplex[worst], -cfg.contraction);
      const double f_contracted = run.eval(contracted);
      if (f_contracted < (outside ? f_reflected : values[worst])) {
        simplex[worst] = std::move(contracted);
        values[worst] = f_contracted;
      } else {
        for (std::size_t i = 0; i <= k; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < k; ++j) {
            simplex[i][j] = simplex[best][j] + cfg.shrink * (simplex[i][j] - simplex[best][j]);
          }
          values[i] = run.eval(simplex[i]);
        }
      }
    }
    out.trace.push_back(run.best_);
  }
}

}  // namespace crpslab
