#include "crpslab/serialize.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>

#include "crpslab/errors.hpp"

namespace crpslab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

template <class T>
std::vector<T> vec(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key).get<std::vector<T>>();
}

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

std::string type_of(const Json& j) {
  if (!j.is_object() || !j.contains("type")) throw SchemaError("object without a 'type' field");
  return j.at("type").get<std::string>();
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json dist_to_json(const PredictiveDistribution& f) {
  return std::visit(Overloaded{[](const WeightedEmpirical& d) {
                                 Json j;
                                 j["type"] = "empirical";
                                 j["atoms"] = std::vector<double>(d.atoms().begin(), d.atoms().end());
                                 j["weights"] = std::vector<double>(d.weights().begin(), d.weights().end());
                                 return j;
                               },
                               [](const GaussianLS& d) {
                                 Json j;
                                 j["type"] = "gaussian";
                                 j["m"] = d.location();
                                 j["sigma"] = d.scale();
                                 return j;
                               },
                               [](const MixtureSpec& d) {
                                 Json j;
                                 j["type"] = "mixture";
                                 j["weights"] = std::vector<double>(d.weights().begin(), d.weights().end());
                                 Json comps = Json::array();
                                 for (const auto& c : d.components()) comps.push_back(dist_to_json(c));
                                 j["components"] = std::move(comps);
                                 return j;
                               }},
                    f.value());
}

PredictiveDistribution dist_from_json(const Json& j) {
  try {
    const std::string type = type_of(j);
    if (type == "empirical") return WeightedEmpirical(vec<double>(j, "atoms"), vec<double>(j, "weights"));
    if (type == "gaussian") {
      const double sigma = field<double>(j, "sigma");
      if (!(sigma > 0.0)) throw InputError("gaussian sigma must be positive");
      return GaussianLS(field<double>(j, "m"), sigma);
    }
    if (type == "mixture") {
      std::vector<PredictiveDistribution> comps;
      for (const auto& c : j.at("components")) comps.push_back(dist_from_json(c));
      return MixtureSpec(std::move(comps), vec<double>(j, "weights"));
    }
    throw SchemaError("unknown distribution type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed distribution: ") + e.what());
  }
}

namespace {

Json tree_to_json(const Tree& t) {
  Json nodes = Json::array();
  for (const TreeNode& n : t.nodes) {
    Json node;
    if (n.feature >= 0) {
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    } else {
      node["leaf"] = t.leaves[n.leaf];
    }
    nodes.push_back(std::move(node));
  }
  Json j;
  j["in_bag"] = t.in_bag;
  j["nodes"] = std::move(nodes);
  return j;
}

Tree tree_from_json(const Json& j, std::size_t n_train) {
  Tree t;
  t.in_bag = vec<std::size_t>(j, "in_bag");
  const auto& nodes = j.at("nodes");
  for (const auto& node : nodes) {
    TreeNode n;
    if (node.contains("leaf")) {
      n.feature = -1;
      n.leaf = static_cast<std::uint32_t>(t.leaves.size());
      auto members = node.at("leaf").get<std::vector<std::size_t>>();
      if (members.empty()) throw SchemaError("empty DRF leaf");
      for (std::size_t i : members) {
        if (i >= n_train) throw SchemaError("DRF leaf index out of range");
      }
      t.leaves.push_back(std::move(members));
    } else {
      n.feature = field<int>(node, "feature");
      n.threshold = field<double>(node, "threshold");
      n.left = field<std::uint32_t>(node, "left");
      n.right = field<std::uint32_t>(node, "right");
      if (n.feature < 0 || n.left >= nodes.size() || n.right >= nodes.size()) throw SchemaError("malformed DRF node");
    }
    t.nodes.push_back(n);
  }
  if (t.nodes.empty()) throw SchemaError("DRF tree without nodes");
  return t;
}

}  // namespace

Json model_to_json(const FittedModel& model) {
  return std::visit(
      Overloaded{[](const EmosParams& p) {
                   Json j;
                   j["type"] = "emos";
                   j["alpha"] = p.alpha;
                   j["beta"] = p.beta;
                   j["alpha_scale"] = p.alpha_scale;
                   j["beta_scale"] = p.beta_scale;
                   return j;
                 },
                 [](const DrnParams& p) {
                   Json j;
                   j["type"] = "drn";
                   j["hidden"] = p.hidden;
                   j["input_dim"] = p.input_dim;
                   j["activation"] = to_string(p.activation);
                   j["alpha"] = p.alpha;
                   j["beta"] = p.beta;
                   j["alpha_scale"] = p.alpha_scale;
                   j["beta_scale"] = p.beta_scale;
                   j["gamma"] = p.gamma;
                   j["delta"] = p.delta;
                   return j;
                 },
                 [](const KnnModel& m) {
                   Json j;
                   j["type"] = "knn";
                   j["k"] = m.k;
                   j["standardize"] = m.standardize;
                   j["center"] = m.center;
                   j["spread"] = m.spread;
                   Json rows = Json::array();
                   for (std::size_t i = 0; i < m.x.rows(); ++i) {
                     const auto r = m.x.row(i);
                     rows.push_back(std::vector<double>(r.begin(), r.end()));
                   }
                   j["x"] = std::move(rows);
                   j["y"] = m.y;
                   return j;
                 },
                 [](const DrfModel& m) {
                   Json j;
                   j["type"] = "drf";
                   j["hyper"] = {{"num_trees", m.hyper.num_trees},
                                 {"mtry", m.hyper.mtry},
                                 {"sample_fraction", m.hyper.sample_fraction},
                                 {"min_node_size", m.hyper.min_node_size}};
                   j["seed"] = m.seed;
                   j["dim"] = m.dim;
                   j["train_y"] = m.train_y;
                   Json trees = Json::array();
                   for (const Tree& t : m.trees) trees.push_back(tree_to_json(t));
                   j["trees"] = std::move(trees);
                   return j;
                 },
                 [](const MixtureModel& m) {
                   Json j;
                   j["type"] = "mixture";
                   j["weights"] = m.weights;
                   Json comps = Json::array();
                   for (const auto& c : m.components) comps.push_back(model_to_json(*c));
                   j["components"] = std::move(comps);
                   return j;
                 },
                 [](const ConditionalModel& m) -> Json {
                   throw CapabilityError("model '" + m.name + "' has no JSON representation");
                 }},
      model.value());
}

FittedModel model_from_json(const Json& j) {
  try {
    const std::string type = type_of(j);
    if (type == "emos") {
      EmosParams p;
      p.alpha = field<double>(j, "alpha");
      p.beta = vec<double>(j, "beta");
      p.alpha_scale = field<double>(j, "alpha_scale");
      p.beta_scale = vec<double>(j, "beta_scale");
      if (p.beta.size() != p.beta_scale.size()) throw SchemaError("EMOS slope vectors differ in length");
      return p;
    }
    if (type == "drn") {
      DrnParams p;
      p.hidden = field<std::size_t>(j, "hidden");
      p.input_dim = field<std::size_t>(j, "input_dim");
      p.activation = activation_from_string(field<std::string>(j, "activation"));
      p.alpha = field<double>(j, "alpha");
      p.beta = vec<double>(j, "beta");
      p.alpha_scale = field<double>(j, "alpha_scale");
      p.beta_scale = vec<double>(j, "beta_scale");
      p.gamma = vec<double>(j, "gamma");
      p.delta = vec<double>(j, "delta");
      p.validate();
      return p;
    }
    if (type == "knn") {
      KnnModel m;
      m.k = field<std::size_t>(j, "k");
      m.standardize = j.value("standardize", false);
      m.y = vec<double>(j, "y");
      const auto rows = j.at("x").get<std::vector<std::vector<double>>>();
      if (rows.size() != m.y.size() || rows.empty()) throw SchemaError("KNN x and y differ in length");
      m.x = Matrix(0, rows.front().size());
      for (const auto& r : rows) {
        if (r.size() != m.x.cols()) throw SchemaError("ragged KNN design matrix");
        m.x.append_row(r);
      }
      m.center = j.contains("center") ? vec<double>(j, "center") : std::vector<double>(m.x.cols(), 0.0);
      m.spread = j.contains("spread") ? vec<double>(j, "spread") : std::vector<double>(m.x.cols(), 1.0);
      if (m.k < 1 || m.k > m.y.size()) throw SchemaError("KNN k outside [1, n]");
      return m;
    }
    if (type == "drf") {
      DrfModel m;
      const auto& h = j.at("hyper");
      m.hyper.num_trees = field<std::size_t>(h, "num_trees");
      m.hyper.mtry = field<std::size_t>(h, "mtry");
      m.hyper.sample_fraction = field<double>(h, "sample_fraction");
      m.hyper.min_node_size = field<std::size_t>(h, "min_node_size");
      m.seed = field<std::uint64_t>(j, "seed");
      m.dim = field<std::size_t>(j, "dim");
      m.train_y = vec<double>(j, "train_y");
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, m.train_y.size()));
      if (m.trees.empty()) throw SchemaError("DRF without trees");
      drf_reindex(m);
      return m;
    }
    if (type == "mixture") {
      MixtureModel m;
      m.weights = vec<double>(j, "weights");
      for (const auto& c : j.at("components")) m.components.push_back(std::make_shared<const FittedModel>(model_from_json(c)));
      return m;
    }
    throw SchemaError("unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model: ") + e.what());
  }
}

Json box_to_json(const ParamBox& box) {
  Json j;
  j["lower"] = std::vector<double>(box.lower().begin(), box.lower().end());
  j["upper"] = std::vector<double>(box.upper().begin(), box.upper().end());
  j["circumradius"] = box.circumradius();
  return j;
}

Json fit_result_to_json(const FitResult& r) {
  Json j;
  j["model"] = model_to_json(*r.model());
  j["risk"] = r.risk;
  j["initial_risk"] = r.initial_risk;
  j["converged"] = r.converged;
  j["seed"] = r.seed;
  j["best_start"] = r.best_start;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["box"] = box_to_json(r.box);
  j["trace"] = r.trace;
  return j;
}

Json aggregation_to_json(const AggregationResult& r) {
  Json j;
  j["weights"] = r.weights;
  j["risk"] = r.risk;
  j["converged"] = r.converged;
  j["start"] = r.start;
  j["evaluations"] = r.evaluations;
  j["seed"] = r.seed;
  j["trace"] = r.trace;
  return j;
}

Json regret_to_json(const RegretResult& r) {
  Json j;
  j["regret"] = r.regret;
  j["std_error"] = r.std_error;
  j["selected"] = r.selected;
  j["chosen_weights"] = r.chosen_weights;
  j["chosen_risk"] = r.chosen_risk;
  j["oracle_weights"] = r.oracle_weights;
  j["oracle_risk"] = r.oracle_risk;
  j["theoretical_risks"] = r.theoretical_risks;
  j["validation_risks"] = r.validation_risks;
  return j;
}

Json sweep_to_json(const SweepResult& s) {
  Json j;
  j["grid"] = s.grid;
  j["val_crps"] = s.risks;
  j["best"] = s.best;
  j["best_val_crps"] = s.best_risk;
  return j;
}

Json bound_to_json(const BoundValue& b) {
  Json j;
  j["value"] = finite_or_null(b.value);
  j["valid"] = b.valid;
  j["condition"] = b.condition;
  return j;
}

BoundInputs bound_inputs_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("bound parameters must be a JSON object");
  BoundInputs b;
  static const char* known[] = {"n",  "N", "K", "M",   "delta", "beta1",   "beta2", "beta_n",
                                "L",  "R", "p", "D",   "D_n",   "c_prime", "max_m1"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
      throw SchemaError("unknown bound parameter '" + it.key() + "'");
    }
    if (!it.value().is_number()) throw SchemaError("bound parameter '" + it.key() + "' must be a number");
  }
  b.n = j.value("n", b.n);
  b.N = j.value("N", b.N);
  b.K = j.value("K", b.K);
  b.M = j.value("M", b.M);
  b.delta = j.value("delta", b.delta);
  b.beta1 = j.value("beta1", b.beta1);
  b.beta2 = j.value("beta2", b.beta2);
  b.beta_n = j.value("beta_n", b.beta_n);
  b.L = j.value("L", b.L);
  b.R = j.value("R", b.R);
  b.p = j.value("p", b.p);
  b.D = j.value("D", b.D);
  b.D_n = j.value("D_n", b.D_n);
  b.c_prime = j.value("c_prime", b.c_prime);
  b.max_m1 = j.value("max_m1", b.max_m1);
  return b;
}

Json coverage_to_json(const CoverageReport& r) {
  const CoverageConfig& c = r.config;
  Json j;
  j["version"] = kVersion;
  j["scenario"] = to_string(c.scenario);
  j["bound"] = r.bound_name;
  j["grid"] = c.grid;
  j["reps"] = c.reps;
  j["delta"] = c.delta;
  j["seed"] = c.seed;
  j["config"] = {{"x_mc", c.x_mc},
                 {"n_train", c.n_train},
                 {"knn_k", c.knn_k},
                 {"drf_num_trees", c.drf.num_trees},
                 {"drf_mtry", c.drf.mtry},
                 {"box_half_width", c.box_half_width},
                 {"grid_step", c.grid_step},
                 {"dim", c.dim}};
  j["constants"] = {{"beta1", r.beta1}, {"beta2", r.beta2}, {"L", r.L}, {"R", r.R}, {"K", r.K}};
  j["slack"] = r.slack;
  j["threshold"] = r.threshold;
  j["slope"] = finite_or_null(r.slope);
  Json points = Json::array();
  for (const auto& p : r.points) {
    Json q;
    q["size"] = p.size;
    q["coverage"] = p.coverage;
    q["median"] = p.median;
    q["values"] = p.values;
    q["std_errors"] = p.std_errors;
    q["bounds"] = p.bounds;
    q["valid"] = p.valid;
    q["flagged"] = p.flagged;
    points.push_back(std::move(q));
  }
  j["points"] = std::move(points);
  return j;
}

Json experiment_to_json(const ExperimentReport& r) {
  const BenchConfig& c = r.config;
  Json j;
  j["version"] = kVersion;
  j["dataset"] = {{"source", r.source}, {"n", r.n}, {"d", r.d}, {"target", r.target}};
  j["config"] = {{"reps", c.reps},
                 {"seed", c.seed},
                 {"kmax", c.kmax},
                 {"standardize", c.standardize},
                 {"num_trees", c.drf.num_trees},
                 {"sample_fraction", c.drf.sample_fraction},
                 {"min_node_size", c.drf.min_node_size}};
  Json summary;
  for (std::size_t m = 0; m < kMethods.size() && m < r.summary.size(); ++m) {
    summary[kMethods[m]] = {{"mean", r.summary[m].mean},
                            {"std_error", r.summary[m].std_error},
                            {"count", r.summary[m].count}};
  }
  j["summary"] = std::move(summary);
  j["flagged_reps"] = r.flagged;
  Json reps = Json::array();
  for (const auto& rep : r.reps) {
    Json q;
    q["rep"] = rep.rep;
    q["seed"] = rep.seed;
    q["flagged"] = rep.flagged;
    if (rep.flagged) q["flag_reason"] = rep.flag_reason;
    if (rep.test_crps.size() == kMethods.size()) {
      q["k_hat"] = rep.k_hat;
      q["mtry_hat"] = rep.mtry_hat;
      q["selected"] = rep.selected;
      q["lambda"] = rep.lambda;
      Json val;
      Json test;
      for (std::size_t m = 0; m < kMethods.size(); ++m) {
        val[kMethods[m]] = rep.val_crps[m];
        test[kMethods[m]] = rep.test_crps[m];
      }
      q["val_crps"] = std::move(val);
      q["test_crps"] = std::move(test);
      q["knn_curve"] = rep.knn_curve.risks;
      q["drf_curve"] = rep.drf_curve.risks;
    }
    reps.push_back(std::move(q));
  }
  for (const auto& rep : r.reps) {
    if (!rep.knn_curve.grid.empty()) {
      j["curves"] = {{"rep", rep.rep}, {"knn", sweep_to_json(rep.knn_curve)}, {"drf", sweep_to_json(rep.drf_curve)}};
      break;
    }
  }
  j["per_rep"] = std::move(reps);
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace crpslab
