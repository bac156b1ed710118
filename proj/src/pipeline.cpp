#include "crpslab/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "crpslab/errors.hpp"
#include "crpslab/models.hpp"
#include "crpslab/parallel.hpp"
#include "crpslab/rng.hpp"
#include "crpslab/serialize.hpp"

namespace crpslab {

// ---------------------------------------------------------------------------
// Ingestion

CsvOptions csv_preset(const std::string& name) {
  CsvOptions o;
  if (name == "qsar") {
    o.delimiter = ';';
    o.header = false;
    o.column_names = {"TPSA", "SAacc", "H050", "MLOGP", "RDCHI", "GATS1p", "nN", "C040", "LC50"};
    o.target = "LC50";
  } else if (name == "airfoil") {
    o.whitespace = true;
    o.header = false;
    o.column_names = {"frequency", "angle", "chord", "velocity", "thickness", "sound_pressure"};
    o.target = "sound_pressure";
  } else if (name != "csv") {
    throw ConfigError("unknown CSV preset '" + name + "'");
  }
  return o;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line, const CsvOptions& o) {
  std::vector<std::string> out;
  if (o.whitespace) {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(trim(tok));
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(o.delimiter, start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::size_t resolve_target(const std::vector<std::string>& names, const std::string& target) {
  if (target == "last") return names.size() - 1;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == target) return j;
  }
  if (!target.empty() && std::all_of(target.begin(), target.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const std::size_t idx = std::stoul(target);
    if (idx < names.size()) return idx;
  }
  throw SchemaError("target column '" + target + "' not present");
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");

  std::vector<std::string> names = options.column_names;
  std::string line;
  std::size_t line_no = 0;
  if (options.header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!is_blank(line)) break;
    }
    if (is_blank(line)) throw SchemaError("'" + path.string() + "' has no header row");
    names = split_fields(line, options);
  }

  Dataset data;
  data.source = path.string();
  std::size_t width = names.size();
  std::size_t target = 0;
  bool resolved = false;
  std::size_t dropped = 0;
  std::vector<double> row;
  std::vector<double> features;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_fields(line, options);
    if (!resolved) {
      if (width == 0) {
        width = fields.size();
        for (std::size_t j = 0; j < width; ++j) names.push_back("c" + std::to_string(j));
      }
      if (width < 2) throw SchemaError("need at least one feature and a target column");
      target = resolve_target(names, options.target);
      data.target_name = names[target];
      for (std::size_t j = 0; j < width; ++j) {
        if (j != target) data.feature_names.push_back(names[j]);
      }
      data.x = Matrix(0, width - 1);
      resolved = true;
    }
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()),
                       line_no, std::min(fields.size(), width) + 1);
    }
    row.assign(width, 0.0);
    bool missing = false;
    for (std::size_t j = 0; j < width; ++j) {
      if (std::find(options.missing.begin(), options.missing.end(), fields[j]) != options.missing.end()) {
        missing = true;
        continue;
      }
      if (!parse_double(fields[j], row[j])) {
        throw ParseError("non-numeric cell '" + fields[j] + "'", line_no, j + 1);
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    features.clear();
    for (std::size_t j = 0; j < width; ++j) {
      if (j != target) features.push_back(row[j]);
    }
    data.x.append_row(features);
    data.y.push_back(row[target]);
  }
  if (!resolved) {
    if (width == 0) throw SchemaError("'" + path.string() + "' contains no data");
    target = resolve_target(names, options.target);
    data.target_name = names[target];
    for (std::size_t j = 0; j < width; ++j) {
      if (j != target) data.feature_names.push_back(names[j]);
    }
    data.x = Matrix(0, width - 1);
  }
  spdlog::info("loaded {}: {} rows, {} features, {} rows dropped for missing values", path.string(), data.size(),
               data.dim(), dropped);
  return data;
}

// ---------------------------------------------------------------------------
// Protocol

SplitPlan make_splits(std::size_t n, std::uint64_t seed, double train_fraction, double val_fraction) {
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction > 1.0) {
    throw ConfigError("split fractions must be positive and sum to at most one");
  }
  SplitPlan plan;
  plan.seed = seed;
  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(n);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  plan.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                  perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  plan.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return plan;
}

std::vector<std::size_t> default_k_grid(std::size_t n_train, std::size_t kmax) {
  std::vector<std::size_t> grid(std::min(kmax, n_train));
  std::iota(grid.begin(), grid.end(), std::size_t{1});
  return grid;
}

namespace {

void finish_sweep(SweepResult& s) {
  const std::size_t i = argmin_first(s.risks);
  s.best = s.grid[i];
  s.best_risk = s.risks[i];
}

}  // namespace

SweepResult sweep_knn(const Dataset& train, const Dataset& val, const std::vector<std::size_t>& k_grid,
                      bool standardize) {
  if (k_grid.empty()) throw ConfigError("k grid is empty");
  if (val.size() == 0) throw InputError("validation set is empty");
  for (std::size_t k : k_grid) {
    if (k < 1 || k > train.size()) throw InputError("k grid must lie in [1, n_train]");
  }
  const std::size_t kmax = *std::max_element(k_grid.begin(), k_grid.end());
  const KnnModel model = knn_fit(train, kmax, standardize);

  SweepResult out;
  out.grid = k_grid;
  out.risks.assign(k_grid.size(), 0.0);
  std::vector<double> responses;
  std::vector<double> weights;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto nb = knn_neighbors(model, val.x.row(i), kmax);
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
      const std::size_t k = k_grid[g];
      responses.resize(k);
      for (std::size_t j = 0; j < k; ++j) responses[j] = train.y[nb[j]];
      std::sort(responses.begin(), responses.end());
      weights.assign(k, 1.0 / static_cast<double>(k));
      out.risks[g] += detail::crps_sorted(responses, weights, val.y[i]);
    }
  }
  for (double& r : out.risks) r /= static_cast<double>(val.size());
  finish_sweep(out);
  return out;
}

SweepResult sweep_drf(const Dataset& train, const Dataset& val, const std::vector<std::size_t>& mtry_grid,
                      const DrfHyper& hyper, std::uint64_t seed, DrfModel* best_model) {
  if (mtry_grid.empty()) throw ConfigError("mtry grid is empty");
  if (val.size() == 0) throw InputError("validation set is empty");
  SweepResult out;
  out.grid = mtry_grid;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mtry : mtry_grid) {
    if (mtry < 1 || mtry > train.dim()) throw InputError("mtry grid must lie in [1, d]");
    DrfHyper h = hyper;
    h.mtry = mtry;
    DrfModel model = drf_fit(train, h, seed);
    double total = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) total += drf_crps(model, val.x.row(i), val.y[i]);
    const double risk = total / static_cast<double>(val.size());
    out.risks.push_back(risk);
    if (best_model != nullptr && risk < best) {
      best = risk;
      *best_model = std::move(model);
    }
  }
  finish_sweep(out);
  return out;
}

MethodSummary summarize_method(const std::vector<double>& values) {
  MethodSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

namespace {

double mean_score(const FittedModel& model, const Dataset& sample) {
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) total += model.score(sample.x.row(i), sample.y[i]);
  return total / static_cast<double>(sample.size());
}

RepRecord run_rep(const Dataset& data, const BenchConfig& cfg, std::size_t rep) {
  RepRecord r;
  r.rep = rep;
  r.seed = derive_seed(cfg.seed, rep);
  const SplitPlan plan = make_splits(data.size(), r.seed);
  const Dataset train = data.subset(plan.train);
  const Dataset val = data.subset(plan.val);
  const Dataset test = data.subset(plan.test);

  r.knn_curve = sweep_knn(train, val, default_k_grid(train.size(), cfg.kmax), cfg.standardize);
  std::vector<std::size_t> mtry_grid(data.dim());
  std::iota(mtry_grid.begin(), mtry_grid.end(), std::size_t{1});
  DrfModel drf_train;
  r.drf_curve = sweep_drf(train, val, mtry_grid, cfg.drf, derive_seed(r.seed, 1), &drf_train);
  r.k_hat = r.knn_curve.best;
  r.mtry_hat = r.drf_curve.best;

  const CandidateSet stage1{{"knn", make_model(knn_fit(train, r.k_hat, cfg.standardize))},
                            {"drf", make_model(std::move(drf_train))}};
  const double val_knn = r.knn_curve.best_risk;
  const double val_drf = r.drf_curve.best_risk;
  const std::size_t chosen = val_drf < val_knn ? 1 : 0;
  r.selected = stage1[chosen].name;
  const AggregationResult agg = aggregate_convex(stage1, val, cfg.aggregation, derive_seed(r.seed, 3));
  r.lambda = agg.weights;
  r.val_crps = {val_knn, val_drf, std::min(val_knn, val_drf), agg.risk};
  if (!agg.converged) {
    r.flagged = true;
    r.flag_reason = "aggregation optimizer stalled";
  }

  // Refit on train + val; CA keeps its validation weights.
  const Dataset refit = concat(train, val);
  DrfHyper h = cfg.drf;
  h.mtry = r.mtry_hat;
  const CandidateSet stage2{{"knn", make_model(knn_fit(refit, r.k_hat, cfg.standardize))},
                            {"drf", make_model(drf_fit(refit, h, derive_seed(r.seed, 2)))}};
  const double test_knn = mean_score(*stage2[0].model, test);
  const double test_drf = mean_score(*stage2[1].model, test);
  const double test_ca = MixtureScorer(stage2, test).risk(r.lambda);
  r.test_crps = {test_knn, test_drf, chosen == 0 ? test_knn : test_drf, test_ca};
  return r;
}

}  // namespace

ExperimentReport run_benchmark(const Dataset& data, const BenchConfig& cfg) {
  data.validate();
  if (data.size() < 10) throw InputError("benchmark needs at least 10 rows");
  if (data.dim() < 1) throw InputError("benchmark needs at least one feature");
  if (cfg.reps < 1) throw ConfigError("reps must be positive");

  ExperimentReport report;
  report.source = data.source;
  report.n = data.size();
  report.d = data.dim();
  report.target = data.target_name;
  report.config = cfg;
  report.reps.resize(cfg.reps);

  parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
    try {
      report.reps[rep] = run_rep(data, cfg, rep);
    } catch (const std::exception& e) {
      RepRecord r;
      r.rep = rep;
      r.seed = derive_seed(cfg.seed, rep);
      r.flagged = true;
      r.flag_reason = e.what();
      report.reps[rep] = std::move(r);
    }
    spdlog::debug("rep {} done", rep);
  });

  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    std::vector<double> values;
    for (const auto& r : report.reps) {
      if (!r.flagged) values.push_back(r.test_crps[m]);
    }
    report.summary.push_back(summarize_method(values));
  }
  report.flagged = static_cast<std::size_t>(
      std::count_if(report.reps.begin(), report.reps.end(), [](const RepRecord& r) { return r.flagged; }));
  if (report.flagged > 0) spdlog::warn("{} of {} repetitions flagged and excluded", report.flagged, cfg.reps);
  return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
}

std::string curve_csv(const SweepResult& s, const char* name) {
  std::string out = std::string(name) + ",val_crps\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i) out += std::to_string(s.grid[i]) + "," + num(s.risks[i]) + "\n";
  return out;
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", experiment_to_json(report).dump(2) + "\n");

  std::string table =
      "rep,seed,k_hat,mtry_hat,selected,lambda_knn,lambda_drf,val_knn,val_drf,val_ms,val_ca,"
      "test_knn,test_drf,test_ms,test_ca,flagged\n";
  for (const auto& r : report.reps) {
    table += std::to_string(r.rep) + "," + std::to_string(r.seed) + ",";
    if (r.test_crps.size() == kMethods.size()) {
      table += std::to_string(r.k_hat) + "," + std::to_string(r.mtry_hat) + "," + r.selected + "," + num(r.lambda[0]) +
               "," + num(r.lambda[1]);
      for (double v : r.val_crps) table += "," + num(v);
      for (double v : r.test_crps) table += "," + num(v);
    } else {
      table += ",,,,";
      for (std::size_t i = 0; i < 2 * kMethods.size(); ++i) table += ",";
    }
    table += std::string(",") + (r.flagged ? "1" : "0") + "\n";
  }
  write_file(dir / "per_rep.csv", table);

  const RepRecord* first = nullptr;
  for (const auto& r : report.reps) {
    if (!r.knn_curve.grid.empty()) {
      first = &r;
      break;
    }
  }
  write_file(dir / "curves_knn.csv", first != nullptr ? curve_csv(first->knn_curve, "k") : "k,val_crps\n");
  write_file(dir / "curves_drf.csv", first != nullptr ? curve_csv(first->drf_curve, "mtry") : "mtry,val_crps\n");
}

}  // namespace crpslab
