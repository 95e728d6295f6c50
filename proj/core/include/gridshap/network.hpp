#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gridshap {

enum class BusKind { Slack, Generator, Load, Junction };

const char* to_string(BusKind kind);
BusKind bus_kind_from_string(const std::string& text);  // throws ValidationError

struct Bus {
  int id = 0;
  BusKind kind = BusKind::Junction;
  double load_mw = 0.0;
};

/// Reactance-only transmission element. Flow is positive in the from->to
/// direction.
struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance_pu = 0.0;  // per-unit on Network::base_mva
  std::string label;          // e.g. "4-5"
};

/// The physical system under study: buses, branches, one slack bus and the
/// ordered list of non-slack generator buses. The gen_buses order is the
/// canonical feature order used by datasets, SHAP vectors and PTDF columns.
struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  int slack_bus = 0;
  std::vector<int> gen_buses;

  int bus_index(int id) const;     // throws ValidationError on unknown id
  int branch_index(const std::string& label) const;  // throws on unknown label
  double total_load_mw() const;

  /// Checks every structural invariant: unique bus ids and branch labels,
  /// positive reactances, non-negative loads, exactly one slack bus, known
  /// endpoints, known gen buses, connected branch graph. Throws
  /// ValidationError describing the first violation.
  void validate() const;
};

/// The built-in 9-bus 3-generator test network. Loads at buses 5, 7 and 9
/// total 315 MW; slack at bus 1; feature order PG2, PG3.
Network builtin_case9();

/// Parses the plain-text case format (see README: `baseMVA`, `bus`, `branch`,
/// `slack`, `gen` records; `#` starts a comment). The returned network has
/// been validated. Errors carry the offending line number.
Network parse_case(const std::string& text);

/// Inverse of parse_case. Numeric fields round-trip bit-identically for
/// values with at most six decimal places.
std::string serialize_case(const Network& net);

struct SusceptanceMatrices {
  Eigen::MatrixXd bbus;  // n x n weighted Laplacian (A^T diag(1/x) A)
  Eigen::MatrixXd bf;    // m x n: per-unit branch flow = bf * angles
};

SusceptanceMatrices susceptance_matrices(const Network& net);

}  // namespace gridshap
