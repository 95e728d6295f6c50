#include "gridshap/dcflow.hpp"

#include <Eigen/LU>

#include "gridshap/errors.hpp"

namespace gridshap {

namespace {

// Bus indices with the slack removed, in bus order.
std::vector<Eigen::Index> reduced_indices(const Network& net) {
  std::vector<Eigen::Index> keep;
  const int slack = net.bus_index(net.slack_bus);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(net.buses.size()); ++i) {
    if (i != slack) keep.push_back(i);
  }
  return keep;
}

Eigen::FullPivLU<Eigen::MatrixXd> factor_reduced(const Eigen::MatrixXd& bbus,
                                                 const std::vector<Eigen::Index>& keep) {
  const auto r = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd reduced(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      reduced(i, j) = bbus(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced);
  if (!lu.isInvertible()) {
    throw NumericError("reduced susceptance matrix is singular (disconnected network?)");
  }
  return lu;
}

// Scatter the reduced angle solution back to full bus order, slack at 0.
Eigen::VectorXd expand_angles(const Eigen::VectorXd& reduced, Eigen::Index n,
                              const std::vector<Eigen::Index>& keep) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    full(keep[i]) = reduced(static_cast<Eigen::Index>(i));
  }
  return full;
}

}  // namespace

DcSolution solve_dc(const Network& net, const Eigen::VectorXd& injections_mw) {
  if (injections_mw.size() != static_cast<Eigen::Index>(net.gen_buses.size())) {
    throw ValidationError("injection vector length does not match gen_buses");
  }
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  const auto sus = susceptance_matrices(net);
  const auto keep = reduced_indices(net);
  const auto lu = factor_reduced(sus.bbus, keep);

  // Net MW injection per bus: generator setpoints minus loads; slack implied.
  Eigen::VectorXd p_mw = Eigen::VectorXd::Zero(n);
  for (std::size_t g = 0; g < net.gen_buses.size(); ++g) {
    p_mw(net.bus_index(net.gen_buses[g])) += injections_mw(static_cast<Eigen::Index>(g));
  }
  for (const Bus& b : net.buses) p_mw(net.bus_index(b.id)) -= b.load_mw;

  Eigen::VectorXd p_red(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    p_red(static_cast<Eigen::Index>(i)) = p_mw(keep[i]) / net.base_mva;
  }

  DcSolution sol;
  sol.angles_rad = expand_angles(lu.solve(p_red), n, keep);
  sol.flows_mw = net.base_mva * (sus.bf * sol.angles_rad);
  return sol;
}

PtdfMatrix analytical_ptdf(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  const auto m = static_cast<Eigen::Index>(net.branches.size());
  const auto k = static_cast<Eigen::Index>(net.gen_buses.size());
  const auto sus = susceptance_matrices(net);
  const auto keep = reduced_indices(net);
  const auto lu = factor_reduced(sus.bbus, keep);

  PtdfMatrix out;
  out.entries.resize(m, k);
  out.gen_buses = net.gen_buses;
  for (const Branch& br : net.branches) out.line_labels.push_back(br.label);

  for (Eigen::Index g = 0; g < k; ++g) {
    // 1 per-unit injected at the gen bus, withdrawn at the (deleted) slack.
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(keep.size()));
    const Eigen::Index bus = net.bus_index(net.gen_buses[static_cast<std::size_t>(g)]);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i] == bus) unit(static_cast<Eigen::Index>(i)) = 1.0;
    }
    const Eigen::VectorXd angles = expand_angles(lu.solve(unit), n, keep);
    out.entries.col(g) = sus.bf * angles;
  }
  return out;
}

PtdfMatrix finite_difference_ptdf(const Network& net, double step_mw) {
  if (step_mw == 0.0) throw ValidationError("finite-difference step must be nonzero");
  const auto k = static_cast<Eigen::Index>(net.gen_buses.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
  const Eigen::VectorXd base_flows = solve_dc(net, zero).flows_mw;

  PtdfMatrix out;
  out.entries.resize(base_flows.size(), k);
  out.gen_buses = net.gen_buses;
  for (const Branch& br : net.branches) out.line_labels.push_back(br.label);

  for (Eigen::Index g = 0; g < k; ++g) {
    Eigen::VectorXd bumped = zero;
    bumped(g) = step_mw;
    out.entries.col(g) = (solve_dc(net, bumped).flows_mw - base_flows) / step_mw;
  }
  return out;
}

Scenario run_scenario(const Network& net, const Eigen::VectorXd& injections_mw) {
  Scenario s;
  s.injections_mw = injections_mw;
  s.flows_mw = solve_dc(net, injections_mw).flows_mw;
  return s;
}

}  // namespace gridshap
