#include "crpslab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crpslab/errors.hpp"
#include "crpslab/rng.hpp"

namespace crpslab {

const std::vector<std::size_t>& Tree::leaf_of(std::span<const double> x) const {
  std::uint32_t at = 0;
  while (nodes[at].feature >= 0) {
    const TreeNode& node = nodes[at];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return leaves[nodes[at].leaf];
}

std::size_t resolve_mtry(const DrfHyper& hyper, std::size_t d) {
  if (hyper.mtry == 0) return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  return hyper.mtry;
}

namespace {

// Splits yielding a variance reduction below this fraction of the node's sum of
// squares are treated as rounding noise.
constexpr double kMinRelativeGain = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::size_t mtry, std::size_t min_node_size, Rng& rng)
      : data_(data), mtry_(mtry), min_node_size_(min_node_size), rng_(rng) {}

  Tree build(std::vector<std::size_t> in_bag) {
    tree_ = Tree{};
    std::sort(in_bag.begin(), in_bag.end());
    tree_.in_bag = in_bag;
    grow(std::move(in_bag));
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::size_t> members) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const Split split = members.size() < 2 * min_node_size_ ? Split{} : best_split(members);
    if (split.feature < 0) {
      std::sort(members.begin(), members.end());
      tree_.nodes[id].leaf = static_cast<std::uint32_t>(tree_.leaves.size());
      tree_.leaves.push_back(std::move(members));
      return id;
    }

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    const auto f = static_cast<std::size_t>(split.feature);
    for (std::size_t i : members) (data_.x(i, f) <= split.threshold ? left : right).push_back(i);
    members.clear();
    members.shrink_to_fit();

    const std::uint32_t l = grow(std::move(left));
    const std::uint32_t r = grow(std::move(right));
    TreeNode& node = tree_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& members) {
    const std::size_t n = members.size();
    double mean = 0.0;
    for (std::size_t i : members) mean += data_.y[i];
    mean /= static_cast<double>(n);
    double sse = 0.0;
    bool pure = true;
    const double first = data_.y[members.front()];
    for (std::size_t i : members) {
      const double c = data_.y[i] - mean;
      sse += c * c;
      pure = pure && data_.y[i] == first;
    }
    if (pure) return {};

    std::vector<std::size_t> features = rng_.sample_without_replacement(data_.dim(), mtry_);
    std::sort(features.begin(), features.end());

    Split best;
    best.gain = kMinRelativeGain * sse;
    std::vector<std::pair<double, double>> column(n);  // (x_f, centred y)
    for (std::size_t f : features) {
      for (std::size_t k = 0; k < n; ++k) column[k] = {data_.x(members[k], f), data_.y[members[k]] - mean};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      // With centred responses the reduction in sum of squares is s_L^2 (1/n_L + 1/n_R).
      double s_left = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        s_left += column[k].second;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_node_size_) continue;
        if (n_right < min_node_size_) break;
        if (!(column[k].first < column[k + 1].first)) continue;
        const double gain = s_left * s_left * (1.0 / static_cast<double>(n_left) + 1.0 / static_cast<double>(n_right));
        if (gain > best.gain) {
          double threshold = 0.5 * (column[k].first + column[k + 1].first);
          if (!(threshold < column[k + 1].first)) threshold = column[k].first;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  std::size_t mtry_;
  std::size_t min_node_size_;
  Rng& rng_;
  Tree tree_;
};

}  // namespace

void drf_reindex(DrfModel& m) {
  m.y_order.resize(m.train_y.size());
  std::iota(m.y_order.begin(), m.y_order.end(), std::size_t{0});
  std::stable_sort(m.y_order.begin(), m.y_order.end(),
                   [&](std::size_t a, std::size_t b) { return m.train_y[a] < m.train_y[b]; });
}

DrfModel drf_fit(const Dataset& data, const DrfHyper& hyper, std::uint64_t seed) {
  data.validate();
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  if (d == 0) throw InputError("DRF needs at least one feature");
  if (hyper.num_trees == 0) throw InputError("DRF needs at least one tree");
  if (hyper.min_node_size == 0) throw InputError("min_node_size must be positive");
  if (!(hyper.sample_fraction > 0.0 && hyper.sample_fraction <= 1.0)) {
    throw InputError("sample_fraction must lie in (0, 1]");
  }
  const std::size_t mtry = resolve_mtry(hyper, d);
  if (mtry < 1 || mtry > d) throw InputError("mtry must lie in [1, d]");
  if (n < 2 * hyper.min_node_size) throw InputError("DRF needs n >= 2 * min_node_size");
  const auto n_bag = std::max<std::size_t>(
      1, std::min(n, static_cast<std::size_t>(std::ceil(hyper.sample_fraction * static_cast<double>(n) - 1e-9))));

  DrfModel model;
  model.hyper = hyper;
  model.hyper.mtry = mtry;
  model.seed = seed;
  model.dim = d;
  model.train_y = data.y;
  drf_reindex(model);
  model.trees.reserve(hyper.num_trees);

  const Rng root(seed);
  for (std::size_t b = 0; b < hyper.num_trees; ++b) {
    Rng rng = root.split(b);
    TreeBuilder builder(data, mtry, hyper.min_node_size, rng);
    model.trees.push_back(builder.build(rng.sample_without_replacement(n, n_bag)));
  }
  return model;
}

std::vector<double> drf_weights(const DrfModel& m, std::span<const double> x) {
  if (x.size() != m.dim) throw InputError("covariate dimension mismatch");
  std::vector<double> w(m.train_y.size(), 0.0);
  const double per_tree = 1.0 / static_cast<double>(m.trees.size());
  for (const Tree& tree : m.trees) {
    const auto& leaf = tree.leaf_of(x);
    const double share = per_tree / static_cast<double>(leaf.size());
    for (std::size_t i : leaf) w[i] += share;
  }
  return w;
}

WeightedEmpirical drf_predict(const DrfModel& m, std::span<const double> x) {
  const std::vector<double> w = drf_weights(m, x);
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t i : m.y_order) {
    if (w[i] > 0.0) {
      atoms.push_back(m.train_y[i]);
      weights.push_back(w[i]);
    }
  }
  return {std::move(atoms), std::move(weights)};
}

double drf_crps(const DrfModel& m, std::span<const double> x, double y) {
  const std::vector<double> w = drf_weights(m, x);
  const std::size_t n = m.y_order.size();
  std::vector<double> atoms(n);
  std::vector<double> weights(n);
  for (std::size_t j = 0; j < n; ++j) {
    atoms[j] = m.train_y[m.y_order[j]];
    weights[j] = w[m.y_order[j]];
  }
  return detail::crps_sorted(atoms, weights, y);
}

}  // namespace crpslab
