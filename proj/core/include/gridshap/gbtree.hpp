#pragma once

#include <string>
#include <variant>
#include <vector>

#include "gridshap/dataset.hpp"

namespace gridshap {

/// Node of a regression tree, stored flat. feature < 0 marks a leaf. An
/// internal node sends x left when x[feature] < threshold (strict; the SHAP
/// engines rely on the same rule). cover is the number of training rows that
/// reached the node: cover(parent) = cover(left) + cover(right).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf contribution in MW, learning rate folded in
  int cover = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const Eigen::VectorXd& x) const;
  int leaf_for(const Eigen::VectorXd& x) const;
};

/// Defaults tuned on the built-in case: the line-flow targets are additive in
/// the injections, and depth-1 ensembles generalize per-axis instead of
/// falling back to 2-D nearest-cell interpolation (deeper trees plateau near
/// 5 MW test RMSE on line 4-5; stumps reach ~1.5 MW).
struct TrainConfig {
  int n_trees = 6000;
  int max_depth = 1;
  double learning_rate = 1.0;
  int min_samples_leaf = 1;
};

/// Gradient-boosted regression trees for one target line.
struct Ensemble {
  double base_score = 0.0;  // mean of the training target, MW
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;

  double predict(const Eigen::VectorXd& x) const;
};

/// Ordinary least-squares model f(x) = w.x + b with the training feature
/// means kept alongside (they anchor the closed-form SHAP baseline).
struct LinearModel {
  Eigen::VectorXd weights;        // MW per MW
  double intercept = 0.0;         // MW
  Eigen::VectorXd feature_means;  // per-feature mean of the training data
  std::vector<std::string> feature_names;

  double predict(const Eigen::VectorXd& x) const;
};

/// Squared-error gradient boosting: base score is the target mean, every tree
/// fits the current residuals with greedy exact split search (thresholds at
/// midpoints of consecutive sorted unique values, ties broken by lowest
/// feature index then smallest threshold). Fully deterministic.
/// A constant target yields a valid ensemble of zero-valued trees.
Ensemble fit_gbt(const Dataset& train, const std::string& target,
                 const TrainConfig& cfg = {});

/// Least squares on [X | 1]. Throws NumericError if the design matrix is rank
/// deficient.
LinearModel fit_linear(const Dataset& train, const std::string& target);

using Model = std::variant<Ensemble, LinearModel>;

double predict(const Model& model, const Eigen::VectorXd& x);

/// Versioned plain-text model files; doubles are printed with 17 significant
/// digits so save . load is lossless. See README for the exact grammar.
void save_model(const Ensemble& model, const std::string& path);
void save_model(const LinearModel& model, const std::string& path);
Model load_model(const std::string& path);
Ensemble load_gbt(const std::string& path);
LinearModel load_linear(const std::string& path);

std::string serialize_model(const Ensemble& model);
std::string serialize_model(const LinearModel& model);
Model parse_model(const std::string& text);

}  // namespace gridshap
