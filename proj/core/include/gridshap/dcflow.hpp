#pragma once

#include "gridshap/network.hpp"

namespace gridshap {

struct DcSolution {
  Eigen::VectorXd angles_rad;  // per bus, slack pinned to 0
  Eigen::VectorXd flows_mw;    // per branch, positive from->to
};

/// Solves the DC power flow for one operating point. injections_mw holds one
/// MW value per Network::gen_buses entry; the slack generator absorbs the
/// remaining balance (total load minus the given injections).
/// Throws NumericError if the reduced susceptance matrix is singular.
DcSolution solve_dc(const Network& net, const Eigen::VectorXd& injections_mw);

/// Line-flow sensitivities to bus injections, branches x gen_buses, MW/MW.
struct PtdfMatrix {
  Eigen::MatrixXd entries;
  std::vector<std::string> line_labels;
  std::vector<int> gen_buses;
};

/// Closed-form PTDF from the reduced susceptance matrix: column g is the
/// branch flow response to 1 MW injected at gen bus g and withdrawn at the
/// slack.
PtdfMatrix analytical_ptdf(const Network& net);

/// Same matrix by column-wise finite differences of solve_dc. The DC model is
/// exactly linear, so any step works; this is the independent cross-check
/// route for analytical_ptdf.
PtdfMatrix finite_difference_ptdf(const Network& net, double step_mw = 1.0);

/// One database row: sampled injections paired with the resulting flows.
struct Scenario {
  Eigen::VectorXd injections_mw;
  Eigen::VectorXd flows_mw;
};

Scenario run_scenario(const Network& net, const Eigen::VectorXd& injections_mw);

}  // namespace gridshap
