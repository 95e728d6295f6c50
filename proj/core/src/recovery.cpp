#include "gridshap/recovery.hpp"

#include <Eigen/QR>
#include <cmath>

#include "gridshap/errors.hpp"
#include "text_util.hpp"

namespace gridshap {

ShapLibrary build_library(const ExplanationSet& es, const Dataset& ds) {
  if (static_cast<Eigen::Index>(es.explanations.size()) != ds.rows()) {
    throw ValidationError("explanation set and dataset are not row-aligned");
  }
  ShapLibrary lib;
  lib.injections = ds.injections;
  lib.phi_sums.resize(ds.rows());
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    lib.phi_sums(r) = es.explanations[static_cast<std::size_t>(r)].phis.sum();
  }
  return lib;
}

RecoveryResult recover_ptdf(const ShapLibrary& lib) {
  const auto n = lib.injections.rows();
  const auto k = lib.injections.cols();
  if (n < k + 1) {
    throw ValidationError("library needs at least k+1 scenarios to recover k sensitivities");
  }
  if (lib.phi_sums.size() != n) {
    throw ValidationError("library injections and phi sums are not row-aligned");
  }

  Eigen::MatrixXd design(n, k + 1);
  design.leftCols(k) = lib.injections;
  design.col(k).setOnes();

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  if (cod.rank() < k + 1) {
    // A constant injection column is the usual culprit; name it if present.
    for (Eigen::Index c = 0; c < k; ++c) {
      if (lib.injections.col(c).maxCoeff() == lib.injections.col(c).minCoeff()) {
        throw NumericError("recovery design matrix is rank deficient: injection column " +
                           std::to_string(c) + " is constant");
      }
    }
    throw NumericError("recovery design matrix is rank deficient");
  }

  const Eigen::VectorXd coef = cod.solve(lib.phi_sums);
  RecoveryResult res;
  res.d_hat = coef.head(k);
  res.epsilon = coef(k);
  res.residual_rms =
      std::sqrt((design * coef - lib.phi_sums).squaredNorm() / static_cast<double>(n));
  return res;
}

PtdfMatrix recover_all(const Network& net, const std::vector<ShapLibrary>& libraries) {
  if (libraries.size() != net.branches.size()) {
    throw ValidationError("expected one library per branch");
  }
  PtdfMatrix out;
  out.gen_buses = net.gen_buses;
  const auto k = static_cast<Eigen::Index>(net.gen_buses.size());
  out.entries.resize(static_cast<Eigen::Index>(libraries.size()), k);
  for (std::size_t l = 0; l < libraries.size(); ++l) {
    out.line_labels.push_back(net.branches[l].label);
    out.entries.row(static_cast<Eigen::Index>(l)) = recover_ptdf(libraries[l]).d_hat.transpose();
  }
  return out;
}

PtdfComparison compare_ptdf(const PtdfMatrix& truth, const PtdfMatrix& recovered) {
  if (truth.entries.rows() != recovered.entries.rows() ||
      truth.entries.cols() != recovered.entries.cols()) {
    throw ValidationError("PTDF comparison shape mismatch");
  }
  if (truth.line_labels != recovered.line_labels || truth.gen_buses != recovered.gen_buses) {
    throw ValidationError("PTDF comparison label mismatch");
  }
  PtdfComparison cmp;
  cmp.truth = truth;
  cmp.recovered = recovered;
  cmp.abs_err = (truth.entries - recovered.entries).cwiseAbs();
  cmp.max_abs_err = cmp.abs_err.size() > 0 ? cmp.abs_err.maxCoeff() : 0.0;
  cmp.line_rms.resize(cmp.abs_err.rows());
  for (Eigen::Index l = 0; l < cmp.abs_err.rows(); ++l) {
    cmp.line_rms(l) =
        std::sqrt(cmp.abs_err.row(l).squaredNorm() / static_cast<double>(cmp.abs_err.cols()));
  }
  return cmp;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string cell(double v) {
  std::string s = detail::fmt4f(v);
  if (s == "-0.0000") s = "0.0000";  // display only; csv keeps full precision
  return s.size() >= 10 ? s + " " : std::string(10 - s.size(), ' ') + s + " ";
}

}  // namespace

std::string ptdf_table(const PtdfMatrix& ptdf) {
  std::string out = pad("Line", 12);
  for (int g : ptdf.gen_buses) out += pad("Bus " + std::to_string(g), 11);
  out += '\n';
  for (Eigen::Index l = 0; l < ptdf.entries.rows(); ++l) {
    out += pad("Line " + ptdf.line_labels[static_cast<std::size_t>(l)], 12);
    for (Eigen::Index g = 0; g < ptdf.entries.cols(); ++g) {
      out += cell(ptdf.entries(l, g));
    }
    out += '\n';
  }
  return out;
}

std::string ptdf_csv(const PtdfMatrix& ptdf) {
  using detail::fmt10;
  std::string out = "line,bus,value\n";
  for (Eigen::Index l = 0; l < ptdf.entries.rows(); ++l) {
    for (Eigen::Index g = 0; g < ptdf.entries.cols(); ++g) {
      out += ptdf.line_labels[static_cast<std::size_t>(l)] + "," +
             std::to_string(ptdf.gen_buses[static_cast<std::size_t>(g)]) + "," +
             fmt10(ptdf.entries(l, g)) + '\n';
    }
  }
  return out;
}

std::string comparison_table(const PtdfComparison& cmp) {
  using detail::fmt4f;
  const auto& gens = cmp.truth.gen_buses;
  std::string out = pad("", 12) + pad("True PTDF D", 11 * gens.size() + 2) +
                    pad("Recovered D_hat", 11 * gens.size() + 2) + "RMS\n";
  out += pad("Line", 12);
  for (int pass = 0; pass < 2; ++pass) {
    for (int g : gens) out += pad("Bus " + std::to_string(g), 11);
    out += "  ";
  }
  out += '\n';
  for (Eigen::Index l = 0; l < cmp.truth.entries.rows(); ++l) {
    out += pad("Line " + cmp.truth.line_labels[static_cast<std::size_t>(l)], 12);
    for (Eigen::Index g = 0; g < cmp.truth.entries.cols(); ++g) {
      out += cell(cmp.truth.entries(l, g));
    }
    out += "  ";
    for (Eigen::Index g = 0; g < cmp.recovered.entries.cols(); ++g) {
      out += cell(cmp.recovered.entries(l, g));
    }
    out += "  " + fmt4f(cmp.line_rms(l)) + '\n';
  }
  out += "max abs error: " + detail::fmt10(cmp.max_abs_err) + '\n';
  return out;
}

std::string comparison_csv(const PtdfComparison& cmp) {
  using detail::fmt10;
  std::string out = "line,bus,true,recovered,abs_err\n";
  for (Eigen::Index l = 0; l < cmp.truth.entries.rows(); ++l) {
    for (Eigen::Index g = 0; g < cmp.truth.entries.cols(); ++g) {
      out += cmp.truth.line_labels[static_cast<std::size_t>(l)] + "," +
             std::to_string(cmp.truth.gen_buses[static_cast<std::size_t>(g)]) + "," +
             fmt10(cmp.truth.entries(l, g)) + "," + fmt10(cmp.recovered.entries(l, g)) +
             "," + fmt10(cmp.abs_err(l, g)) + '\n';
    }
  }
  return out;
}

}  // namespace gridshap
