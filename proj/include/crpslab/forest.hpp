#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crpslab/dataset.hpp"
#include "crpslab/distributions.hpp"

namespace crpslab {

struct DrfHyper {
  std::size_t num_trees = 500;
  /// Candidate features per split; 0 selects max(1, floor(sqrt(d))).
  std::size_t mtry = 0;
  double sample_fraction = 0.9;
  std::size_t min_node_size = 1;

  friend bool operator==(const DrfHyper&, const DrfHyper&) = default;
};

/// Internal nodes have feature >= 0 and route x[feature] <= threshold to `left`.
/// Leaves have feature == -1 and index into Tree::leaves through `leaf`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t leaf = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;                    // nodes[0] is the root
  std::vector<std::vector<std::size_t>> leaves;   // in-bag training indices per leaf
  std::vector<std::size_t> in_bag;                // sorted

  const std::vector<std::size_t>& leaf_of(std::span<const double> x) const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct DrfModel {
  DrfHyper hyper;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::vector<Tree> trees;
  std::vector<double> train_y;
  std::vector<std::size_t> y_order;  // argsort of train_y, stable

  friend bool operator==(const DrfModel&, const DrfModel&) = default;
};

/// Effective mtry for dimension d.
std::size_t resolve_mtry(const DrfHyper& hyper, std::size_t d);

/// Tree b draws its subsample and per-node feature candidates from Rng(seed).split(b).
DrfModel drf_fit(const Dataset& data, const DrfHyper& hyper, std::uint64_t seed);

/// w_i(x) = (1/B) sum_b 1{i in L_b(x)} / |L_b(x)|, indexed like train_y.
std::vector<double> drf_weights(const DrfModel& m, std::span<const double> x);

WeightedEmpirical drf_predict(const DrfModel& m, std::span<const double> x);

/// CRPS of drf_predict(m, x) at y without materializing the distribution.
double drf_crps(const DrfModel& m, std::span<const double> x, double y);

/// Recomputes y_order from train_y (used after deserialization).
void drf_reindex(DrfModel& m);

}  // namespace crpslab
