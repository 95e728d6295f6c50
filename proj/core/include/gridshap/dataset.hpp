#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridshap/dcflow.hpp"

namespace gridshap {

/// Training database: one row per scenario, injections as features and
/// per-line flows as targets. Matrices are row-aligned.
struct Dataset {
  Eigen::MatrixXd injections;              // n x k, MW
  Eigen::MatrixXd flows;                   // n x m, MW
  std::vector<std::string> feature_names;  // e.g. {"PG2", "PG3"}
  std::vector<std::string> target_names;   // branch labels, e.g. {"1-4", ...}
  std::uint64_t seed = 0;                  // sampling seed, 0 if unknown

  Eigen::Index rows() const { return injections.rows(); }
  Scenario scenario(Eigen::Index row) const;
  Eigen::Index target_index(const std::string& label) const;  // throws
};

/// Samples n scenarios with each injection i.i.d. uniform on [low, high) and
/// flows computed by run_scenario. Deterministic given the seed: the mt19937_64
/// stream is consumed row by row, feature by feature.
Dataset sample_scenarios(const Network& net, int n, double low_mw, double high_mw,
                         std::uint64_t seed);

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Disjoint row partition with |train| = round(train_fraction * n). The row
/// permutation is a seeded Fisher-Yates shuffle.
SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// CSV persistence. Header `PG2,PG3,F1-4,...`; one row per scenario; values
/// printed with 10 significant digits (read . write is the identity on the
/// printed values). UTF-8, LF line endings.
void write_csv(const Dataset& ds, const std::string& path);
Dataset read_csv(const std::string& path);

std::string to_csv(const Dataset& ds);
Dataset from_csv(const std::string& text);

}  // namespace gridshap
