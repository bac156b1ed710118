#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/ensemble.hpp"
#include "crpslab/forest.hpp"

namespace crpslab {

// ---------------------------------------------------------------------------
// Ingestion

struct CsvOptions {
  /// Field separator; ignored when `whitespace` is set.
  char delimiter = ',';
  /// Split on runs of spaces and tabs.
  bool whitespace = false;
  bool header = true;
  /// Column names when the file has no header (defaults to c0, c1, ...).
  std::vector<std::string> column_names;
  /// Target column: a name, a 0-based index, or "last".
  std::string target = "last";
  /// Cells treated as missing; rows containing one are dropped.
  std::vector<std::string> missing = {"", "NA", "NaN", "nan", "?"};
};

/// Parsing presets for the benchmark sources.
///   qsar:    semicolon separated, no header, 8 features then LC50
///   airfoil: whitespace separated, no header, 5 features then sound pressure
CsvOptions csv_preset(const std::string& name);

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

// ---------------------------------------------------------------------------
// Protocol

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Random permutation cut into floor(0.5 n), floor(0.2 n) and the remainder.
SplitPlan make_splits(std::size_t n, std::uint64_t seed, double train_fraction = 0.5, double val_fraction = 0.2);

struct SweepResult {
  std::vector<std::size_t> grid;
  std::vector<double> risks;
  std::size_t best = 0;        // grid value with minimal risk (ties: smallest)
  double best_risk = 0.0;
};

std::vector<std::size_t> default_k_grid(std::size_t n_train, std::size_t kmax = 50);

SweepResult sweep_knn(const Dataset& train, const Dataset& val, const std::vector<std::size_t>& k_grid,
                      bool standardize = false);

/// Every mtry value is fitted with the same seed. The forest of the best value is
/// returned through `best_model` when requested.
SweepResult sweep_drf(const Dataset& train, const Dataset& val, const std::vector<std::size_t>& mtry_grid,
                      const DrfHyper& hyper, std::uint64_t seed, DrfModel* best_model = nullptr);

struct BenchConfig {
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::size_t kmax = 50;
  bool standardize = false;
  DrfHyper drf;
  AggregationConfig aggregation;
  std::size_t threads = 0;
};

inline const std::vector<std::string> kMethods = {"knn", "drf", "ms", "ca"};

struct RepRecord {
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::size_t k_hat = 0;
  std::size_t mtry_hat = 0;
  std::string selected;            // "knn" or "drf"
  std::vector<double> lambda;      // (knn, drf)
  std::vector<double> val_crps;    // per method, kMethods order
  std::vector<double> test_crps;   // per method, kMethods order
  bool flagged = false;
  std::string flag_reason;
  SweepResult knn_curve;
  SweepResult drf_curve;
};

struct MethodSummary {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(count)
  std::size_t count = 0;
};

struct ExperimentReport {
  std::string source;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string target;
  BenchConfig config;
  std::vector<RepRecord> reps;
  std::vector<MethodSummary> summary;  // kMethods order, unflagged reps only
  std::size_t flagged = 0;
};

ExperimentReport run_benchmark(const Dataset& data, const BenchConfig& cfg);

MethodSummary summarize_method(const std::vector<double>& values);

/// Writes report.json, per_rep.csv, curves_knn.csv and curves_drf.csv into `dir`.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Version stamp written into every report.
inline constexpr const char* kVersion = "crpslab 1.0.0";

}  // namespace crpslab
