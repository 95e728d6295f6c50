#pragma once

#include <cstdint>
#include <vector>

#include "gridshap/gbtree.hpp"
#include "gridshap/rng.hpp"
#include "gridshap/shap.hpp"

namespace gridshap::testutil {

// Random regression tree over m features: thresholds uniform on (lo, hi),
// leaf values uniform on [-10, 10), covers kept consistent. Splits may repeat
// features along a path, which is exactly what the SHAP walk must handle.
inline int grow_random(Tree& tree, Rng& rng, int m, double lo, double hi, int depth) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const bool leaf = depth == 0 || rng.below(4) == 0;  // 25% early leaves
  if (leaf) {
    tree.nodes[static_cast<std::size_t>(index)].value = rng.uniform(-10.0, 10.0);
    tree.nodes[static_cast<std::size_t>(index)].cover = 1;
    return index;
  }
  const int feature = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
  const double threshold = rng.uniform(lo, hi);
  const int left = grow_random(tree, rng, m, lo, hi, depth - 1);
  const int right = grow_random(tree, rng, m, lo, hi, depth - 1);
  TreeNode& nd = tree.nodes[static_cast<std::size_t>(index)];
  nd.feature = feature;
  nd.threshold = threshold;
  nd.left = left;
  nd.right = right;
  nd.cover = tree.nodes[static_cast<std::size_t>(left)].cover +
             tree.nodes[static_cast<std::size_t>(right)].cover;
  return index;
}

inline Ensemble random_ensemble(Rng& rng, int m, int n_trees, int max_depth,
                                double lo = 0.0, double hi = 1.0) {
  Ensemble e;
  for (int i = 0; i < m; ++i) e.feature_names.push_back("x" + std::to_string(i));
  e.base_score = rng.uniform(-5.0, 5.0);
  for (int t = 0; t < n_trees; ++t) {
    Tree tree;
    grow_random(tree, rng, m, lo, hi, max_depth);
    e.trees.push_back(std::move(tree));
  }
  return e;
}

inline Eigen::VectorXd random_point(Rng& rng, int m, double lo = 0.0, double hi = 1.0) {
  Eigen::VectorXd x(m);
  for (int i = 0; i < m; ++i) x(i) = rng.uniform(lo, hi);
  return x;
}

inline BackgroundSet random_background(Rng& rng, int m, int rows, double lo = 0.0,
                                       double hi = 1.0) {
  Eigen::MatrixXd b(rows, m);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < m; ++c) b(r, c) = rng.uniform(lo, hi);
  }
  return BackgroundSet::from_rows(std::move(b));
}

}  // namespace gridshap::testutil
