#include "gridshap/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gridshap/errors.hpp"
#include "gridshap/rng.hpp"
#include "text_util.hpp"

namespace gridshap {

Scenario Dataset::scenario(Eigen::Index row) const {
  if (row < 0 || row >= rows()) {
    throw ValidationError("scenario row " + std::to_string(row) + " out of range");
  }
  Scenario s;
  s.injections_mw = injections.row(row).transpose();
  s.flows_mw = flows.row(row).transpose();
  return s;
}

Eigen::Index Dataset::target_index(const std::string& label) const {
  for (std::size_t i = 0; i < target_names.size(); ++i) {
    if (target_names[i] == label) return static_cast<Eigen::Index>(i);
  }
  throw ValidationError("unknown target line '" + label + "'");
}

Dataset sample_scenarios(const Network& net, int n, double low_mw, double high_mw,
                         std::uint64_t seed) {
  if (n < 1) throw ValidationError("scenario count must be >= 1");
  if (!(low_mw < high_mw)) throw ValidationError("sampling bounds must satisfy low < high");

  const auto k = static_cast<Eigen::Index>(net.gen_buses.size());
  const auto m = static_cast<Eigen::Index>(net.branches.size());

  Dataset ds;
  ds.seed = seed;
  for (int g : net.gen_buses) ds.feature_names.push_back("PG" + std::to_string(g));
  for (const Branch& br : net.branches) ds.target_names.push_back(br.label);
  ds.injections.resize(n, k);
  ds.flows.resize(n, m);

  Rng rng(seed);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index g = 0; g < k; ++g) {
      ds.injections(r, g) = rng.uniform(low_mw, high_mw);
    }
    ds.flows.row(r) = solve_dc(net, ds.injections.row(r).transpose()).flows_mw.transpose();
  }
  return ds;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.target_names = ds.target_names;
  out.seed = ds.seed;
  out.injections.resize(static_cast<Eigen::Index>(rows.size()), ds.injections.cols());
  out.flows.resize(static_cast<Eigen::Index>(rows.size()), ds.flows.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.injections.row(static_cast<Eigen::Index>(i)) = ds.injections.row(rows[i]);
    out.flows.row(static_cast<Eigen::Index>(i)) = ds.flows.row(rows[i]);
  }
  return out;
}

}  // namespace

SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  const auto n = ds.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm);

  const auto n_train =
      static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  std::vector<Eigen::Index> train_rows(perm.begin(), perm.begin() + static_cast<long>(n_train));
  std::vector<Eigen::Index> test_rows(perm.begin() + static_cast<long>(n_train), perm.end());
  return SplitResult{take_rows(ds, train_rows), take_rows(ds, test_rows)};
}

std::string to_csv(const Dataset& ds) {
  using detail::fmt10;
  std::string out;
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
    if (i) out += ',';
    out += ds.feature_names[i];
  }
  for (const std::string& t : ds.target_names) {
    out += ",F" + t;
  }
  out += '\n';
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.injections.cols(); ++c) {
      if (c) out += ',';
      out += fmt10(ds.injections(r, c));
    }
    for (Eigen::Index c = 0; c < ds.flows.cols(); ++c) {
      out += ',';
      out += fmt10(ds.flows(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_cell(const std::string& tok, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw ValidationError("csv row " + std::to_string(row) + ": non-numeric cell '" +
                          tok + "'");
  }
  return v;
}

}  // namespace

Dataset from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw ValidationError("csv is empty");
  }
  Dataset ds;
  const auto header = split_fields(line);
  // Feature columns come first; target columns are the 'F<label>' ones.
  bool targets_started = false;
  for (const std::string& name : header) {
    if (!name.empty() && name[0] == 'F') {
      targets_started = true;
      ds.target_names.push_back(name.substr(1));
    } else {
      if (targets_started) {
        throw ValidationError("csv header mismatch: feature column '" + name +
                              "' after target columns");
      }
      ds.feature_names.push_back(name);
    }
  }
  if (ds.feature_names.empty() || ds.target_names.empty()) {
    throw ValidationError("csv header mismatch: expected feature columns then F<line> columns");
  }

  const std::size_t k = ds.feature_names.size();
  const std::size_t width = header.size();
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw ValidationError("csv row " + std::to_string(row_no) + ": expected " +
                            std::to_string(width) + " columns, got " +
                            std::to_string(fields.size()));
    }
    std::vector<double> vals;
    vals.reserve(width);
    for (const std::string& f : fields) vals.push_back(parse_cell(f, row_no));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ValidationError("csv has a header but no data rows");

  ds.injections.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
  ds.flows.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(width - k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c < k) {
        ds.injections(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      } else {
        ds.flows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - k)) = rows[r][c];
      }
    }
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_csv(ds);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

}  // namespace gridshap
