#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gridshap/gbtree.hpp"

namespace gridshap {

/// Additive explanation of one prediction: base_value is the expected model
/// output over the background, phis[i] the contribution of feature i, and
/// base_value + sum(phis) equals fx (local accuracy).
struct Explanation {
  double base_value = 0.0;  // MW
  Eigen::VectorXd phis;     // per feature, MW
  double fx = 0.0;          // model prediction, MW
  Eigen::VectorXd feature_values;
  std::vector<std::string> feature_names;

  double local_accuracy_residual() const;  // |base_value + sum(phis) - fx|
};

/// Reference sample defining the expectation baseline and the out-of-coalition
/// feature values for the interventional engines.
struct BackgroundSet {
  Eigen::MatrixXd rows;   // B x k injections, MW
  Eigen::VectorXd means;  // per-feature mean of rows

  static BackgroundSet from_rows(Eigen::MatrixXd rows);  // throws if empty
  static BackgroundSet from_dataset(const Dataset& ds);
  /// Seeded subsample without replacement; size >= rows means the full set.
  static BackgroundSet subsample(const Dataset& ds, int size, std::uint64_t seed);
};

struct ExplanationSet {
  std::vector<Explanation> explanations;
  std::string model_id;
  std::string background_id;
};

using PredictFn = std::function<double(const Eigen::VectorXd&)>;

/// Closed-form SHAP for a linear model: phis[i] = w_i * (x_i - E[X_i]),
/// base_value = w.E[X] + b. Exact local accuracy.
Explanation shap_linear(const LinearModel& model, const Eigen::VectorXd& x);

/// Brute-force interventional Shapley values for any predictor. The value of
/// coalition S is the background average of the prediction with the features
/// in S taken from x and the rest from the background row. Enumerates all 2^M
/// coalitions; refuses M > 20.
Explanation shap_exact(const PredictFn& predict, const Eigen::VectorXd& x,
                       const BackgroundSet& bg,
                       std::vector<std::string> feature_names = {});
Explanation shap_exact(const Ensemble& model, const Eigen::VectorXd& x,
                       const BackgroundSet& bg);
Explanation shap_exact(const LinearModel& model, const Eigen::VectorXd& x,
                       const BackgroundSet& bg);

/// Interventional Tree SHAP in polynomial time. For every background row each
/// root-to-leaf path is walked once, recording which split decisions are
/// forced by x (diverging from the row) and which by the row itself; the
/// resulting per-leaf coalition game has a closed-form Shapley value. Averaged
/// over the background and summed over trees this equals shap_exact.
Explanation shap_tree(const Ensemble& model, const Eigen::VectorXd& x,
                      const BackgroundSet& bg);

/// One explanation per dataset row, in row order.
ExplanationSet explain_dataset(const Ensemble& model, const Dataset& ds,
                               const BackgroundSet& bg);
ExplanationSet explain_dataset(const LinearModel& model, const Dataset& ds,
                               const BackgroundSet& bg);

/// Features ranked by global importance (mean |phi| across the set, MW),
/// descending; ties keep feature order. Throws ValidationError on empty sets.
std::vector<std::pair<std::string, double>> feature_importance(const ExplanationSet& es);

/// Forward difference of the i-th SHAP value at step h; equals weights[i]
/// exactly for a linear model.
double shap_derivative(const LinearModel& model, const Eigen::VectorXd& x, int i,
                       double h_mw);

/// CSV persistence: `row,PG2,PG3,fx,base,phi_PG2,phi_PG3`; with
/// include_local_acc an extra `local_acc` column carries the per-row
/// |base + sum(phi) - fx| residual.
std::string explanations_to_csv(const ExplanationSet& es, bool include_local_acc = false);
void write_explanations_csv(const ExplanationSet& es, const std::string& path,
                            bool include_local_acc = false);

}  // namespace gridshap
