#pragma once

#include <string>
#include <vector>

#include "gridshap/dcflow.hpp"
#include "gridshap/shap.hpp"

namespace gridshap {

/// Regression inputs for one line's model: the sampled injections and the
/// per-scenario sum of SHAP values.
struct ShapLibrary {
  Eigen::MatrixXd injections;  // n x k, MW
  Eigen::VectorXd phi_sums;    // n, MW
};

/// Pairs each explanation's phi-sum with its scenario's injections.
/// Throws ValidationError if es and ds are not row-aligned.
ShapLibrary build_library(const ExplanationSet& es, const Dataset& ds);

struct RecoveryResult {
  Eigen::VectorXd d_hat;     // one PTDF row, MW/MW
  double epsilon = 0.0;      // constant offset, MW
  double residual_rms = 0.0; // MW
};

/// Least-squares fit of [P | 1] * (d_hat; epsilon) = phi_sums via a
/// rank-revealing orthogonal decomposition (the pseudoinverse solution).
/// Throws NumericError on rank deficiency, naming a constant column when one
/// exists.
RecoveryResult recover_ptdf(const ShapLibrary& lib);

/// Stacks per-line recoveries into a PTDF matrix; libraries must be in branch
/// order.
PtdfMatrix recover_all(const Network& net, const std::vector<ShapLibrary>& libraries);

struct PtdfComparison {
  PtdfMatrix truth;
  PtdfMatrix recovered;
  Eigen::MatrixXd abs_err;
  Eigen::VectorXd line_rms;
  double max_abs_err = 0.0;
};

/// Entry-wise comparison of two same-shape PTDF matrices.
PtdfComparison compare_ptdf(const PtdfMatrix& truth, const PtdfMatrix& recovered);

/// Aligned text table (4 decimal places): true and recovered entries side by
/// side, per-line RMS and the max absolute error.
std::string comparison_table(const PtdfComparison& cmp);

/// CSV: `line,bus,true,recovered,abs_err`.
std::string comparison_csv(const PtdfComparison& cmp);

/// Aligned text table of one PTDF matrix (4 decimal places).
std::string ptdf_table(const PtdfMatrix& ptdf);

/// CSV: `line,bus,value`.
std::string ptdf_csv(const PtdfMatrix& ptdf);

}  // namespace gridshap
