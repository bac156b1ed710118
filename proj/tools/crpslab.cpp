// crpslab command-line interface.
//
// Every subcommand accepts --config <file>: a flat "key = value" text file whose
// keys are long flag names without the dashes. Values from the file fill flags
// absent from the command line; CRPSLAB_SEED is the last fallback for --seed.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crpslab/bounds.hpp"
#include "crpslab/coverage.hpp"
#include "crpslab/errors.hpp"
#include "crpslab/pipeline.hpp"
#include "crpslab/risk.hpp"
#include "crpslab/serialize.hpp"

namespace fs = std::filesystem;
using namespace crpslab;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInput = 2,
  kConfig = 3,
  kSchema = 4,
  kParse = 5,
  kCapability = 6,
  kNumerical = 7,
  kInternal = 10,
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes" || v == "on"; }

/// Appends "--key value" for every config entry the subcommand knows and the
/// command line does not already set.
std::vector<std::string> inject_config(CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  const auto cfg_it = std::find(args.begin(), args.end(), "--config");
  if (cfg_it == args.end() || cfg_it + 1 == args.end()) return args;
  CLI::App* sub = nullptr;
  for (CLI::App* s : app.get_subcommands({})) {
    if (s->get_name() == args.front()) sub = s;
  }
  if (sub == nullptr) return args;

  const auto entries = read_config(*(cfg_it + 1));
  for (const auto& [key, value] : entries) {
    if (key == "config") continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("config key '" + key + "' is not an option of '" + sub->get_name() + "'");
    const bool present = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
    if (present) continue;
    if (opt->get_expected_max() == 0) {
      if (truthy(value)) args.push_back("--" + key);
    } else {
      args.push_back("--" + key);
      std::istringstream is(value);
      std::string tok;
      if (opt->get_expected_max() > 1) {
        while (is >> tok) args.push_back(tok);
      } else {
        args.push_back(value);
      }
    }
  }
  return args;
}

void write_json(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  const fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw InputError("cannot write '" + out + "'");
  f << j.dump(2) << "\n";
}

/// Inline JSON when the argument starts with '{', otherwise a file path.
Json json_argument(const std::string& arg) {
  const std::string t = trim(arg);
  if (!t.empty() && t.front() == '{') {
    try {
      return Json::parse(t);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(std::string("inline JSON does not parse: ") + e.what());
    }
  }
  return read_json_file(t);
}

struct CsvFlags {
  std::string preset = "csv";
  std::string delimiter;
  bool no_header = false;
  bool whitespace = false;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Parsing preset: csv, qsar or airfoil")
        ->check(CLI::IsMember({"csv", "qsar", "airfoil"}));
    app->add_option("--delimiter", delimiter, "Field separator (default ',')");
    app->add_flag("--no-header", no_header, "File has no header row");
    app->add_flag("--whitespace", whitespace, "Split fields on runs of blanks");
  }

  CsvOptions options(const std::string& target) const {
    CsvOptions o = csv_preset(preset);
    if (!delimiter.empty()) {
      if (delimiter == "\\t" || delimiter == "tab") {
        o.delimiter = '\t';
      } else if (delimiter.size() == 1) {
        o.delimiter = delimiter.front();
      } else {
        throw ConfigError("delimiter must be a single character");
      }
    }
    if (no_header) o.header = false;
    if (whitespace) o.whitespace = true;
    if (!target.empty()) o.target = target;
    return o;
  }
};

void add_seed(CLI::App* app, std::uint64_t& seed) {
  app->add_option("--seed", seed, "Random seed")->envname("CRPSLAB_SEED");
}

void add_config(CLI::App* app) {
  app->add_option("--config", "Flat key = value file supplying defaults for the other flags");
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string dist;
  double y = 0.0;
  std::size_t n_quantiles = DiscretizationConfig{}.n_quantiles;
};

int run_score(const ScoreArgs& a) {
  const PredictiveDistribution f = dist_from_json(json_argument(a.dist));
  DiscretizationConfig disc;
  disc.n_quantiles = a.n_quantiles;
  Json out;
  out["crps"] = crps(f, a.y, disc);
  out["y"] = a.y;
  out["m1"] = first_abs_moment(f);
  std::cout << out.dump(2) << "\n";
  return kOk;
}

struct FitArgs {
  std::string model;
  std::string train;
  std::string target;
  std::size_t hidden = 2;
  std::string activation = "relu";
  std::uint64_t seed = 0;
  std::string optimizer;
  std::size_t starts = 5;
  double box_half_width = 50.0;
  std::size_t epochs = 200;
  std::string out;
  CsvFlags csv;
};

int run_fit(const FitArgs& a) {
  const Dataset train = load_csv(a.train, a.csv.options(a.target));
  OptimizerConfig opt;
  opt.starts = a.starts;
  opt.box_half_width = a.box_half_width;
  opt.epochs = a.epochs;
  FitResult r;
  if (a.model == "emos") {
    opt.kind = a.optimizer == "gd" ? OptimizerKind::gradient_descent : OptimizerKind::nelder_mead;
    r = fit_emos(train, std::nullopt, opt, a.seed);
  } else {
    opt.kind = a.optimizer == "nm" ? OptimizerKind::nelder_mead : OptimizerKind::gradient_descent;
    r = fit_drn(train, a.hidden, activation_from_string(a.activation), std::nullopt, opt, a.seed);
  }
  if (!r.converged) spdlog::warn("optimizer did not meet its convergence criterion");
  Json out = fit_result_to_json(r);
  out["version"] = kVersion;
  out["train"] = {{"source", train.source}, {"n", train.size()}, {"d", train.dim()}, {"target", train.target_name}};
  write_json(out, a.out);
  return kOk;
}

struct SweepArgs {
  std::string model;
  std::string data;
  std::string target;
  std::size_t kmax = 50;
  std::uint64_t seed = 0;
  std::size_t num_trees = DrfHyper{}.num_trees;
  bool standardize = false;
  std::string out;
  CsvFlags csv;
};

int run_sweep(const SweepArgs& a) {
  const Dataset data = load_csv(a.data, a.csv.options(a.target));
  if (data.size() < 10) throw InputError("sweep needs at least 10 rows");
  const SplitPlan plan = make_splits(data.size(), a.seed);
  const Dataset train = data.subset(plan.train);
  const Dataset val = data.subset(plan.val);
  SweepResult s;
  if (a.model == "knn") {
    s = sweep_knn(train, val, default_k_grid(train.size(), a.kmax), a.standardize);
  } else {
    DrfHyper h;
    h.num_trees = a.num_trees;
    std::vector<std::size_t> grid(data.dim());
    for (std::size_t j = 0; j < grid.size(); ++j) grid[j] = j + 1;
    s = sweep_drf(train, val, grid, h, derive_seed(a.seed, 1));
  }
  Json out;
  out["version"] = kVersion;
  out["model"] = a.model;
  out["parameter"] = a.model == "knn" ? "k" : "mtry";
  out["seed"] = a.seed;
  out["split"] = {{"train", plan.train.size()}, {"val", plan.val.size()}, {"test", plan.test.size()}};
  out["sweep"] = sweep_to_json(s);
  write_json(out, a.out);
  spdlog::info("best {} = {} (validation CRPS {:.6f})", a.model == "knn" ? "k" : "mtry", s.best, s.best_risk);
  return kOk;
}

struct BenchArgs {
  std::string data;
  std::string target;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::size_t kmax = 50;
  std::size_t num_trees = DrfHyper{}.num_trees;
  std::size_t threads = 0;
  bool standardize = false;
  std::string out_dir;
  CsvFlags csv;
};

int run_bench(const BenchArgs& a) {
  const Dataset data = load_csv(a.data, a.csv.options(a.target));
  BenchConfig cfg;
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.kmax = a.kmax;
  cfg.drf.num_trees = a.num_trees;
  cfg.threads = a.threads;
  cfg.standardize = a.standardize;
  const ExperimentReport report = run_benchmark(data, cfg);
  emit_report(report, a.out_dir);
  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    spdlog::info("{:>3}: mean test CRPS {:.4f} ({:.4f})", kMethods[m], report.summary[m].mean,
                 report.summary[m].std_error);
  }
  return kOk;
}

struct AggregateArgs {
  std::vector<std::string> candidates;
  std::string val;
  std::string target;
  std::uint64_t seed = 0;
  std::string out;
  CsvFlags csv;
};

int run_aggregate(const AggregateArgs& a) {
  CandidateSet set;
  for (const auto& path : a.candidates) {
    Json j = read_json_file(path);
    // Output of `fit` wraps the parameters in a "model" field.
    if (j.contains("model") && j.at("model").is_object()) j = j.at("model");
    set.push_back({fs::path(path).stem().string(), make_model(model_from_json(j))});
  }
  const Dataset val = load_csv(a.val, a.csv.options(a.target));
  const AggregationResult r = aggregate_convex(set, val, {}, a.seed);
  const std::vector<double> risks = validation_risks(set, val);
  Json out;
  out["version"] = kVersion;
  Json names = Json::array();
  for (const auto& c : set) names.push_back(c.name);
  out["candidates"] = names;
  out["validation_risks"] = risks;
  out["selected"] = set[argmin_first(risks)].name;
  out["aggregation"] = aggregation_to_json(r);
  write_json(out, a.out);
  if (!r.converged) spdlog::warn("aggregation optimizer stalled");
  return kOk;
}

struct VerifyArgs {
  std::string scenario;
  std::size_t reps = 200;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> grid;
  std::size_t n_train = 500;
  std::size_t x_mc = 4000;
  std::size_t threads = 0;
  std::size_t min_reps = 50;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  CoverageConfig cfg;
  cfg.scenario = coverage_scenario_from_string(a.scenario);
  cfg.reps = a.reps;
  cfg.delta = a.delta;
  cfg.seed = a.seed;
  cfg.grid = a.grid;
  cfg.n_train = a.n_train;
  cfg.x_mc = a.x_mc;
  cfg.threads = a.threads;
  cfg.min_reps = a.min_reps;
  const CoverageReport r = coverage_experiment(cfg);
  write_json(coverage_to_json(r), a.out);
  bool ok = true;
  for (const auto& p : r.points) {
    spdlog::info("size {}: coverage {:.3f} (threshold {:.3f}), median {:.4g}", p.size, p.coverage, r.threshold,
                 p.median);
    ok = ok && p.coverage >= r.threshold;
  }
  if (!ok) spdlog::warn("empirical coverage below the binomial threshold");
  return kOk;
}

struct BoundsArgs {
  int theorem = 1;
  std::string params;
};

int run_bounds(const BoundsArgs& a) {
  const BoundInputs b = bound_inputs_from_json(json_argument(a.params));
  Json out;
  out["theorem"] = a.theorem;
  switch (a.theorem) {
    case 1:
      out["c_beta"] = c_beta(b);
      out["high_probability"] = bound_to_json(bound_estimation(b));
      out["expectation"] = bound_to_json(bound_estimation_expect(b));
      break;
    case 2:
      out["c_n"] = c_n(b);
      out["high_probability"] = bound_to_json(bound_selection_regret(b));
      out["expectation"] = bound_to_json(bound_selection_regret_expect(b));
      break;
    case 3: {
      const AggregationLipschitz lip = aggregation_lipschitz(b);
      out["c_n"] = c_n(b);
      out["high_probability"] = bound_to_json(bound_aggregation_regret(b));
      out["expectation"] = bound_to_json(bound_aggregation_regret_expect(b));
      out["lipschitz"] = {{"sqrt_m_form", lip.sqrt_m_form}, {"l1_form", lip.l1_form}};
      break;
    }
    case 4:
      out["rate_exponent"] = rate_exponent_heavy_tail(b.p, b.K);
      break;
    case 5:
      out["high_probability"] = bound_to_json(bound_selection_moment(b));
      break;
    case 6:
      out["rate_exponent"] = rate_exponent_aggregation(b.p, b.M);
      out["high_probability"] = bound_to_json(bound_aggregation_moment(b));
      break;
    default:
      throw ConfigError("theorem must be 1 to 6");
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("crpslab"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"CRPS model fitting, selection, aggregation and bound verification"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "CRPS of a predictive distribution at an observation");
  s->add_option("--dist", score.dist, "Distribution JSON (file path or inline object)")->required();
  s->add_option("--y", score.y, "Observation")->required();
  s->add_option("--n-quantiles", score.n_quantiles, "Quantiles per Gaussian component inside mixtures");
  add_config(s);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit EMOS or DRN by empirical CRPS minimization");
  f->add_option("--model", fit.model)->required()->check(CLI::IsMember({"emos", "drn"}));
  f->add_option("--train", fit.train, "Training CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--target", fit.target, "Target column name or index")->required();
  f->add_option("--hidden", fit.hidden, "DRN hidden width");
  f->add_option("--activation", fit.activation, "DRN activation: relu, tanh or identity");
  f->add_option("--optimizer", fit.optimizer, "nm or gd (defaults: emos nm, drn gd)")
      ->check(CLI::IsMember({"nm", "gd"}));
  f->add_option("--starts", fit.starts, "Nelder-Mead starts");
  f->add_option("--box-half-width", fit.box_half_width, "Half width of the parameter box around the initializer");
  f->add_option("--epochs", fit.epochs, "Gradient-descent epochs");
  f->add_option("--out", fit.out, "Output JSON (stdout when omitted)");
  add_seed(f, fit.seed);
  fit.csv.add(f);
  add_config(f);

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "Validation curve of k (KNN) or mtry (DRF) on one split");
  w->add_option("--model", sweep.model)->required()->check(CLI::IsMember({"knn", "drf"}));
  w->add_option("--data", sweep.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  w->add_option("--target", sweep.target, "Target column name or index")->required();
  w->add_option("--kmax", sweep.kmax, "Largest k in the grid");
  w->add_option("--num-trees", sweep.num_trees, "DRF trees");
  w->add_flag("--standardize", sweep.standardize, "Standardize features before KNN distances");
  w->add_option("--out", sweep.out, "Output JSON (stdout when omitted)");
  add_seed(w, sweep.seed);
  sweep.csv.add(w);
  add_config(w);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Repeated split benchmark of KNN, DRF, selection and aggregation");
  b->add_option("--data", bench.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  b->add_option("--target", bench.target, "Target column name or index");
  b->add_option("--reps", bench.reps, "Repetitions");
  b->add_option("--kmax", bench.kmax, "Largest k in the grid");
  b->add_option("--num-trees", bench.num_trees, "DRF trees");
  b->add_option("--threads", bench.threads, "Worker threads (0: hardware concurrency)");
  b->add_flag("--standardize", bench.standardize, "Standardize features before KNN distances");
  b->add_option("--out-dir", bench.out_dir, "Report directory")->required();
  add_seed(b, bench.seed);
  bench.csv.add(b);
  add_config(b);

  AggregateArgs agg;
  auto* g = app.add_subcommand("aggregate", "Convex aggregation of fitted candidates on a validation CSV");
  g->add_option("--candidates", agg.candidates, "Model JSON files")->required()->check(CLI::ExistingFile);
  g->add_option("--val", agg.val, "Validation CSV")->required()->check(CLI::ExistingFile);
  g->add_option("--target", agg.target, "Target column name or index");
  g->add_option("--out", agg.out, "Output JSON (stdout when omitted)");
  add_seed(g, agg.seed);
  agg.csv.add(g);
  add_config(g);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify-bounds", "Monte-Carlo coverage of the high-probability bounds");
  v->add_option("--scenario", verify.scenario)
      ->required()
      ->check(CLI::IsMember({"estimation", "selection", "aggregation", "constant"}));
  v->add_option("--reps", verify.reps, "Repetitions per size");
  v->add_option("--delta", verify.delta, "Confidence parameter");
  v->add_option("--grid", verify.grid, "Sample sizes (n or N)");
  v->add_option("--n-train", verify.n_train, "Training size of the candidates");
  v->add_option("--x-mc", verify.x_mc, "Covariate draws of the risk oracle");
  v->add_option("--threads", verify.threads, "Worker threads (0: hardware concurrency)");
  v->add_option("--min-reps", verify.min_reps, "Smallest accepted --reps");
  v->add_option("--out", verify.out, "Output JSON (stdout when omitted)");
  add_seed(v, verify.seed);
  add_config(v);

  BoundsArgs bounds;
  auto* d = app.add_subcommand("bounds", "Evaluate a bound from its constants");
  d->add_option("--theorem", bounds.theorem, "1 estimation, 2 selection, 3 aggregation, 4-6 moment versions")
      ->required()
      ->check(CLI::Range(1, 6));
  d->add_option("--params", bounds.params, "Constants JSON (file path or inline object)")->required();
  add_config(d);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  }

  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (s->parsed()) return run_score(score);
    if (f->parsed()) return run_fit(fit);
    if (w->parsed()) return run_sweep(sweep);
    if (b->parsed()) return run_bench(bench);
    if (g->parsed()) return run_aggregate(agg);
    if (v->parsed()) return run_verify(verify);
    if (d->parsed()) return run_bounds(bounds);
  } catch (const ParseError& e) {
    spdlog::error("parse error: {}", e.what());
    return kParse;
  } catch (const SchemaError& e) {
    spdlog::error("schema error: {}", e.what());
    return kSchema;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const InputError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const CapabilityError& e) {
    spdlog::error("unsupported: {}", e.what());
    return kCapability;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {} (best estimate {})", e.what(), e.estimate());
    return kNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInternal;
  }
  return kInternal;
}
