#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "crpslab/errors.hpp"
#include "crpslab/pipeline.hpp"
#include "crpslab/serialize.hpp"
#include "crpslab/synthetic.hpp"
#include "fixtures.hpp"

using namespace crpslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "crpslab_unit";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset sine_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.preset = SyntheticPreset::sine_drn;
  spec.dim = dim;
  Rng rng(seed);
  return SyntheticGenerator(spec).sample(n, rng);
}

}  // namespace

TEST(LoadCsv, HandcraftedFile) {
  const auto p = write_text("three.csv", "a,b,y\n1,2,3\n4.5,-6,7e-1\n");
  const Dataset d = load_csv(p, {});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.x, Matrix(2, 2, {1.0, 2.0, 4.5, -6.0}));
  EXPECT_EQ(d.y, (std::vector<double>{3.0, 0.7}));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.target_name, "y");
}

TEST(LoadCsv, TargetByName) {
  const auto p = write_text("named.csv", "y,a\n1,2\n3,4\n");
  CsvOptions o;
  o.target = "y";
  const Dataset d = load_csv(p, o);
  EXPECT_EQ(d.y, (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(d.x, Matrix(2, 1, {2.0, 4.0}));
}

TEST(LoadCsv, MissingRowsDropped) {
  const auto p = write_text("missing.csv", "a,y\n1,2\nNA,3\n4,\n5,6\n");
  const Dataset d = load_csv(p, {});
  EXPECT_EQ(d.y, (std::vector<double>{2.0, 6.0}));
}

TEST(LoadCsv, NonNumericCell) {
  const auto p = write_text("bad.csv", "a,y\n1,2\n3,abc\n");
  try {
    load_csv(p, {});
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.col(), 2u);
  }
}

TEST(LoadCsv, RaggedRow) {
  const auto p = write_text("ragged.csv", "a,y\n1,2\n3\n");
  EXPECT_THROW(load_csv(p, {}), ParseError);
}

TEST(LoadCsv, MissingTarget) {
  const auto p = write_text("notarget.csv", "a,b\n1,2\n");
  CsvOptions o;
  o.target = "y";
  EXPECT_THROW(load_csv(p, o), SchemaError);
}

TEST(LoadCsv, Presets) {
  const auto q = write_text("q.csv", "1;2;3;4;5;6;7;8;9\n1;2;3;4;5;6;7;8;10\n");
  const Dataset dq = load_csv(q, csv_preset("qsar"));
  EXPECT_EQ(dq.dim(), 8u);
  EXPECT_EQ(dq.target_name, "LC50");
  EXPECT_EQ(dq.y, (std::vector<double>{9.0, 10.0}));
  const auto a = write_text("a.dat", "800\t0\t0.3048  71.3\t0.00266337\t126.201\n");
  const Dataset da = load_csv(a, csv_preset("airfoil"));
  EXPECT_EQ(da.dim(), 5u);
  EXPECT_DOUBLE_EQ(da.y[0], 126.201);
  EXPECT_THROW(csv_preset("iris"), ConfigError);
}

TEST(Splits, Sizes) {
  const SplitPlan a = make_splits(10, 1);
  EXPECT_EQ(a.train.size(), 5u);
  EXPECT_EQ(a.val.size(), 2u);
  EXPECT_EQ(a.test.size(), 3u);
  const SplitPlan b = make_splits(546, 1);
  EXPECT_EQ(b.train.size(), 273u);
  EXPECT_EQ(b.val.size(), 109u);
  EXPECT_EQ(b.test.size(), 164u);
  const SplitPlan c = make_splits(1503, 1);
  EXPECT_EQ(c.train.size() + c.val.size() + c.test.size(), 1503u);
}

TEST(Splits, DisjointExhaustiveDeterministic) {
  const SplitPlan a = make_splits(97, 5);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 97u);
  const SplitPlan b = make_splits(97, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(make_splits(97, 6).train, a.train);
}

TEST(Sweep, SingleElementGrid) {
  const Dataset d = sine_data(60, 1, 3);
  const SplitPlan p = make_splits(d.size(), 1);
  const SweepResult s = sweep_knn(d.subset(p.train), d.subset(p.val), {7});
  EXPECT_EQ(s.best, 7u);
  EXPECT_EQ(s.risks.size(), 1u);
}

TEST(Sweep, KnnCurveMatchesDirectFits) {
  const Dataset d = sine_data(80, 2, 4);
  const SplitPlan p = make_splits(d.size(), 2);
  const Dataset train = d.subset(p.train);
  const Dataset val = d.subset(p.val);
  const SweepResult s = sweep_knn(train, val, default_k_grid(train.size(), 10));
  ASSERT_EQ(s.grid.size(), 10u);
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    const FittedModel m(knn_fit(train, s.grid[g]));
    double total = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) total += m.score(val.x.row(i), val.y[i]);
    EXPECT_NEAR(s.risks[g], total / static_cast<double>(val.size()), 1e-12);
  }
  EXPECT_EQ(s.best_risk, *std::min_element(s.risks.begin(), s.risks.end()));
}

TEST(Sweep, DrfOneDimension) {
  const Dataset d = sine_data(60, 1, 5);
  const SplitPlan p = make_splits(d.size(), 1);
  DrfHyper h;
  h.num_trees = 20;
  const SweepResult s = sweep_drf(d.subset(p.train), d.subset(p.val), {1}, h, 3);
  EXPECT_EQ(s.best, 1u);
}

TEST(Summary, StandardError) {
  const MethodSummary s = summarize_method({1.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.std_error, 1.0);
  EXPECT_EQ(s.count, 2u);
}

TEST(Benchmark, SmokeRunAndReport) {
  const Dataset d = sine_data(120, 3, 6);
  BenchConfig cfg;
  cfg.reps = 2;
  cfg.seed = 11;
  cfg.kmax = 15;
  cfg.drf.num_trees = 30;
  const ExperimentReport r = run_benchmark(d, cfg);
  ASSERT_EQ(r.reps.size(), 2u);
  ASSERT_EQ(r.summary.size(), 4u);
  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    std::vector<double> col;
    for (const auto& rep : r.reps) {
      if (!rep.flagged) col.push_back(rep.test_crps[m]);
    }
    const MethodSummary s = summarize_method(col);
    EXPECT_NEAR(r.summary[m].mean, s.mean, 1e-12);
    EXPECT_EQ(r.summary[m].count, r.summary[0].count);
  }
  for (const auto& rep : r.reps) {
    if (rep.flagged) continue;
    EXPECT_LE(rep.val_crps[3], rep.val_crps[2] + 1e-9);
    EXPECT_NEAR(rep.lambda[0] + rep.lambda[1], 1.0, 1e-9);
  }

  const fs::path dir = scratch("report");
  fs::remove_all(dir);
  emit_report(r, dir);
  const Json j = read_json_file(dir / "report.json");
  EXPECT_EQ(j.at("version"), kVersion);
  EXPECT_EQ(j.at("per_rep").size(), 2u);
  EXPECT_EQ(j.at("summary").begin().key(), "knn");
  std::ifstream curve(dir / "curves_knn.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(curve, line)) ++rows;
  EXPECT_EQ(rows, r.reps[0].knn_curve.grid.size() + 1);

  // Same seed, same bytes.
  const fs::path again = scratch("report_again");
  fs::remove_all(again);
  emit_report(run_benchmark(d, cfg), again);
  EXPECT_EQ(read_text(dir / "per_rep.csv"), read_text(again / "per_rep.csv"));
}

TEST(Benchmark, RejectsTinyData) {
  EXPECT_THROW(run_benchmark(sine_data(8, 1, 1), {}), InputError);
}

TEST(Serialize, DistributionRoundTrip) {
  const PredictiveDistribution e = WeightedEmpirical({0.1, 2.0}, {0.25, 0.75});
  const PredictiveDistribution g = GaussianLS(-1.0, 0.3);
  const PredictiveDistribution m = MixtureSpec({e, g}, {0.4, 0.6});
  for (const auto& f : {e, g, m}) {
    const PredictiveDistribution back = dist_from_json(Json::parse(dist_to_json(f).dump()));
    EXPECT_DOUBLE_EQ(crps(back, 0.7), crps(f, 0.7));
  }
  EXPECT_THROW(dist_from_json(Json::parse(R"({"type":"beta"})")), SchemaError);
  EXPECT_THROW(dist_from_json(Json::parse(R"({"type":"gaussian","m":0})")), SchemaError);
}

TEST(Serialize, ModelRoundTrip) {
  const Dataset d = sine_data(50, 2, 9);
  DrfHyper h;
  h.num_trees = 5;
  DrnParams drn;
  drn.hidden = 2;
  drn.input_dim = 2;
  drn.activation = Activation::tanh;
  drn.beta = {0.1, 0.2};
  drn.beta_scale = {0.3, -0.1};
  drn.gamma = {0.5, 0.6};
  drn.delta = {1, 2, 3, 4};
  std::vector<FittedModel> models = {FittedModel(EmosParams{1.0, {0.5, -0.5}, 0.2, {0.0, 0.1}}), FittedModel(drn),
                                     FittedModel(knn_fit(d, 4, true)), FittedModel(drf_fit(d, h, 2))};
  MixtureModel mix;
  mix.components = {make_model(models[2]), make_model(models[3])};
  mix.weights = {0.3, 0.7};
  models.emplace_back(mix);
  const std::vector<double> x = {0.2, 0.8};
  for (const auto& m : models) {
    const FittedModel back = model_from_json(Json::parse(model_to_json(m).dump()));
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_DOUBLE_EQ(back.score(x, 0.4), m.score(x, 0.4));
  }
  EXPECT_EQ(*model_from_json(model_to_json(models[3])).as<DrfModel>(), *models[3].as<DrfModel>());
}

TEST(Serialize, BoundInputs) {
  const BoundInputs b = bound_inputs_from_json(Json::parse(R"({"n":100,"K":3,"delta":0.05})"));
  EXPECT_DOUBLE_EQ(b.n, 100.0);
  EXPECT_DOUBLE_EQ(b.K, 3.0);
  EXPECT_DOUBLE_EQ(b.delta, 0.05);
  EXPECT_THROW(bound_inputs_from_json(Json::parse(R"({"nn":1})")), SchemaError);
}
