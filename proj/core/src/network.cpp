#include "gridshap/network.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <vector>

#include "gridshap/errors.hpp"
#include "text_util.hpp"

namespace gridshap {

const char* to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::Generator: return "generator";
    case BusKind::Load: return "load";
    case BusKind::Junction: return "junction";
  }
  return "junction";
}

BusKind bus_kind_from_string(const std::string& text) {
  if (text == "slack") return BusKind::Slack;
  if (text == "generator") return BusKind::Generator;
  if (text == "load") return BusKind::Load;
  if (text == "junction") return BusKind::Junction;
  throw ValidationError("unknown bus kind '" + text + "'");
}

int Network::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  throw ValidationError("unknown bus id " + std::to_string(id));
}

int Network::branch_index(const std::string& label) const {
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (branches[i].label == label) return static_cast<int>(i);
  }
  throw ValidationError("unknown branch label '" + label + "'");
}

double Network::total_load_mw() const {
  double total = 0.0;
  for (const Bus& b : buses) total += b.load_mw;
  return total;
}

void Network::validate() const {
  if (base_mva <= 0.0) throw ValidationError("baseMVA must be positive");
  if (buses.empty()) throw ValidationError("network has no buses");
  if (branches.empty()) throw ValidationError("network has no branches");

  std::set<int> ids;
  int slack_count = 0;
  for (const Bus& b : buses) {
    if (!ids.insert(b.id).second) {
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    }
    if (b.load_mw < 0.0) {
      throw ValidationError("negative load at bus " + std::to_string(b.id));
    }
    if (b.kind == BusKind::Slack) ++slack_count;
  }
  if (slack_count != 1) {
    throw ValidationError("expected exactly one slack bus, found " +
                          std::to_string(slack_count));
  }
  if (!ids.count(slack_bus)) {
    throw ValidationError("slack bus " + std::to_string(slack_bus) + " not in bus list");
  }
  if (buses[static_cast<std::size_t>(bus_index(slack_bus))].kind != BusKind::Slack) {
    throw ValidationError("slack record does not match the bus marked slack");
  }

  std::set<std::string> labels;
  for (const Branch& br : branches) {
    if (br.from_bus == br.to_bus) {
      throw ValidationError("branch '" + br.label + "' connects a bus to itself");
    }
    if (!ids.count(br.from_bus) || !ids.count(br.to_bus)) {
      throw ValidationError("branch '" + br.label + "' references an unknown bus");
    }
    if (!(br.reactance_pu > 0.0)) {
      throw ValidationError("branch '" + br.label + "' has non-positive reactance");
    }
    if (!labels.insert(br.label).second) {
      throw ValidationError("duplicate branch label '" + br.label + "'");
    }
  }

  for (int g : gen_buses) {
    if (!ids.count(g)) {
      throw ValidationError("gen bus " + std::to_string(g) + " not in bus list");
    }
    if (g == slack_bus) {
      throw ValidationError("slack bus cannot be listed as a feature gen bus");
    }
  }

  // Connectivity: breadth-first search over branches from the slack bus.
  std::vector<bool> seen(buses.size(), false);
  std::vector<int> frontier{bus_index(slack_bus)};
  seen[static_cast<std::size_t>(frontier[0])] = true;
  while (!frontier.empty()) {
    const int at = frontier.back();
    frontier.pop_back();
    const int at_id = buses[static_cast<std::size_t>(at)].id;
    for (const Branch& br : branches) {
      int other = -1;
      if (br.from_bus == at_id) other = bus_index(br.to_bus);
      if (br.to_bus == at_id) other = bus_index(br.from_bus);
      if (other >= 0 && !seen[static_cast<std::size_t>(other)]) {
        seen[static_cast<std::size_t>(other)] = true;
        frontier.push_back(other);
      }
    }
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
    throw ValidationError("branch graph is disconnected");
  }
}

Network builtin_case9() {
  // 9-bus 3-generator network; reactances and loads transcribed from the
  // standard case9 data file (100 MVA base).
  Network net;
  net.base_mva = 100.0;
  net.slack_bus = 1;
  net.gen_buses = {2, 3};
  net.buses = {
      {1, BusKind::Slack, 0.0},   {2, BusKind::Generator, 0.0},
      {3, BusKind::Generator, 0.0}, {4, BusKind::Junction, 0.0},
      {5, BusKind::Load, 90.0},   {6, BusKind::Junction, 0.0},
      {7, BusKind::Load, 100.0},  {8, BusKind::Junction, 0.0},
      {9, BusKind::Load, 125.0},
  };
  auto branch = [](int f, int t, double x) {
    return Branch{f, t, x, std::to_string(f) + "-" + std::to_string(t)};
  };
  net.branches = {
      branch(1, 4, 0.0576), branch(4, 5, 0.092),  branch(5, 6, 0.17),
      branch(3, 6, 0.0586), branch(6, 7, 0.1008), branch(7, 8, 0.072),
      branch(8, 2, 0.0625), branch(8, 9, 0.161),  branch(9, 4, 0.085),
  };
  net.validate();
  return net;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') break;
    tokens.push_back(tok);
  }
  return tokens;
}

double parse_real(const std::string& tok, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw ValidationError("case parse error at line " + std::to_string(line_no) +
                          ": bad number '" + tok + "'");
  }
  return v;
}

int parse_int(const std::string& tok, int line_no) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    throw ValidationError("case parse error at line " + std::to_string(line_no) +
                          ": bad integer '" + tok + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

Network parse_case(const std::string& text) {
  Network net;
  net.base_mva = 0.0;
  bool have_base = false;
  bool have_slack = false;
  int slack_records = 0;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    const auto fail = [&](const std::string& msg) {
      throw ValidationError("case parse error at line " + std::to_string(line_no) +
                            ": " + msg);
    };
    if (tok[0] == "baseMVA") {
      if (tok.size() != 2) fail("expected 'baseMVA <real>'");
      net.base_mva = parse_real(tok[1], line_no);
      have_base = true;
    } else if (tok[0] == "bus") {
      if (tok.size() != 4) fail("expected 'bus <id> <kind> <load_MW>'");
      Bus b;
      b.id = parse_int(tok[1], line_no);
      try {
        b.kind = bus_kind_from_string(tok[2]);
      } catch (const ValidationError& e) {
        fail(e.what());
      }
      b.load_mw = parse_real(tok[3], line_no);
      net.buses.push_back(b);
    } else if (tok[0] == "branch") {
      if (tok.size() != 4) fail("expected 'branch <from> <to> <x_pu>'");
      Branch br;
      br.from_bus = parse_int(tok[1], line_no);
      br.to_bus = parse_int(tok[2], line_no);
      br.reactance_pu = parse_real(tok[3], line_no);
      br.label = tok[1] + "-" + tok[2];
      net.branches.push_back(br);
    } else if (tok[0] == "slack") {
      if (tok.size() != 2) fail("expected 'slack <id>'");
      net.slack_bus = parse_int(tok[1], line_no);
      have_slack = true;
      ++slack_records;
    } else if (tok[0] == "gen") {
      if (tok.size() != 2) fail("expected 'gen <bus>'");
      net.gen_buses.push_back(parse_int(tok[1], line_no));
    } else {
      fail("unknown record '" + tok[0] + "'");
    }
  }

  if (!have_base) throw ValidationError("case file has no baseMVA record");
  if (!have_slack) throw ValidationError("case file has no slack record");
  if (slack_records != 1) {
    throw ValidationError("expected exactly one slack record, found " +
                          std::to_string(slack_records));
  }
  net.validate();
  return net;
}

std::string serialize_case(const Network& net) {
  using detail::fmt_case;
  std::string out;
  out += "baseMVA " + fmt_case(net.base_mva) + "\n";
  for (const Bus& b : net.buses) {
    out += "bus " + std::to_string(b.id) + " " + to_string(b.kind) + " " +
           fmt_case(b.load_mw) + "\n";
  }
  for (const Branch& br : net.branches) {
    out += "branch " + std::to_string(br.from_bus) + " " + std::to_string(br.to_bus) +
           " " + fmt_case(br.reactance_pu) + "\n";
  }
  out += "slack " + std::to_string(net.slack_bus) + "\n";
  for (int g : net.gen_buses) out += "gen " + std::to_string(g) + "\n";
  return out;
}

SusceptanceMatrices susceptance_matrices(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  const auto m = static_cast<Eigen::Index>(net.branches.size());
  SusceptanceMatrices out;
  out.bf = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Branch& br = net.branches[static_cast<std::size_t>(l)];
    const double b = 1.0 / br.reactance_pu;
    out.bf(l, net.bus_index(br.from_bus)) = b;
    out.bf(l, net.bus_index(br.to_bus)) = -b;
  }
  // Bbus = A^T diag(1/x) A: incidence rows of bf already carry the weights.
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Branch& br = net.branches[static_cast<std::size_t>(l)];
    incidence(l, net.bus_index(br.from_bus)) = 1.0;
    incidence(l, net.bus_index(br.to_bus)) = -1.0;
  }
  out.bbus = incidence.transpose() * out.bf;
  return out;
}

}  // namespace gridshap
