#include "gridshap/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "gridshap/errors.hpp"
#include "gridshap/rng.hpp"
#include "text_util.hpp"

namespace gridshap {

double Explanation::local_accuracy_residual() const {
  return std::abs(base_value + phis.sum() - fx);
}

BackgroundSet BackgroundSet::from_rows(Eigen::MatrixXd rows) {
  if (rows.rows() == 0) throw ValidationError("background set must be nonempty");
  BackgroundSet bg;
  bg.means = rows.colwise().mean();
  bg.rows = std::move(rows);
  return bg;
}

BackgroundSet BackgroundSet::from_dataset(const Dataset& ds) {
  return from_rows(ds.injections);
}

BackgroundSet BackgroundSet::subsample(const Dataset& ds, int size, std::uint64_t seed) {
  const auto n = ds.rows();
  if (size <= 0 || size >= n) return from_dataset(ds);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm);
  Eigen::MatrixXd rows(size, ds.injections.cols());
  for (int i = 0; i < size; ++i) {
    rows.row(i) = ds.injections.row(perm[static_cast<std::size_t>(i)]);
  }
  return from_rows(std::move(rows));
}

namespace {

std::vector<std::string> default_names(Eigen::Index m) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < m; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

}  // namespace

Explanation shap_linear(const LinearModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size()) {
    throw ValidationError("explanation input has wrong dimension");
  }
  Explanation ex;
  ex.feature_values = x;
  ex.feature_names = model.feature_names;
  ex.phis = model.weights.array() * (x - model.feature_means).array();
  ex.base_value = model.weights.dot(model.feature_means) + model.intercept;
  ex.fx = model.predict(x);
  return ex;
}

// ---------------------------------------------------------------------------
// Brute-force interventional Shapley (the oracle engine).
// ---------------------------------------------------------------------------

namespace {

// |S|! (M-|S|-1)! / M!  ==  1 / (M * C(M-1, |S|)), computed multiplicatively.
double coalition_weight(int subset_size, int m) {
  double binom = 1.0;
  for (int j = 1; j <= subset_size; ++j) {
    binom *= static_cast<double>(m - j) / static_cast<double>(j);
  }
  return 1.0 / (static_cast<double>(m) * binom);
}

}  // namespace

Explanation shap_exact(const PredictFn& predict, const Eigen::VectorXd& x,
                       const BackgroundSet& bg, std::vector<std::string> feature_names) {
  const auto m = static_cast<int>(x.size());
  if (m > 20) {
    throw ValidationError("shap_exact enumerates 2^M coalitions; refusing M = " +
                          std::to_string(m) + " > 20");
  }
  if (bg.rows.cols() != x.size()) {
    throw ValidationError("background feature count does not match input");
  }
  const auto n_bg = bg.rows.rows();
  const std::size_t n_subsets = std::size_t{1} << m;

  // v(S): background-average prediction with S taken from x, rest from the row.
  std::vector<double> value(n_subsets, 0.0);
  Eigen::VectorXd hybrid(m);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < n_bg; ++r) {
      for (int i = 0; i < m; ++i) {
        hybrid(i) = (s >> i) & 1u ? x(i) : bg.rows(r, i);
      }
      acc += predict(hybrid);
    }
    value[s] = acc / static_cast<double>(n_bg);
  }

  Explanation ex;
  ex.feature_values = x;
  ex.feature_names = feature_names.empty() ? default_names(m) : std::move(feature_names);
  ex.phis = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < n_subsets; ++s) {
      if (s & bit) continue;
      const int size = std::popcount(s);
      ex.phis(i) += coalition_weight(size, m) * (value[s | bit] - value[s]);
    }
  }
  ex.base_value = value[0];
  ex.fx = predict(x);
  return ex;
}

Explanation shap_exact(const Ensemble& model, const Eigen::VectorXd& x,
                       const BackgroundSet& bg) {
  return shap_exact([&model](const Eigen::VectorXd& p) { return model.predict(p); }, x,
                    bg, model.feature_names);
}

Explanation shap_exact(const LinearModel& model, const Eigen::VectorXd& x,
                       const BackgroundSet& bg) {
  return shap_exact([&model](const Eigen::VectorXd& p) { return model.predict(p); }, x,
                    bg, model.feature_names);
}

// ---------------------------------------------------------------------------
// Interventional Tree SHAP.
//
// For one background row z, a hybrid point built from coalition S follows a
// deterministic path: at a node testing feature f it goes x's way when f is
// in S and z's way otherwise. Walking a tree once per (x, z) pair while
// recording, per root-to-leaf path, the distinct features forced to x's side
// (set Cx, reachable only if Cx is inside S) and to z's side (set Cz,
// reachable only if S avoids Cz) turns each leaf into the coalition game
//   v_L(S) = value_L * [Cx in S] * [Cz disjoint from S],
// whose Shapley values have the closed form (a = |Cx|, b = |Cz|):
//   phi_i = +value_L * (a-1)! b! / (a+b)!   for i in Cx
//   phi_i = -value_L * a! (b-1)! / (a+b)!   for i in Cz.
// Nodes where x and z agree constrain nothing. Summing the per-leaf games
// over all leaves, trees and background rows reproduces shap_exact.
//
// A background row enters the walk only through its per-node split decisions,
// so rows with identical decision bits are interchangeable. Each tree's
// background is therefore collapsed to its distinct decision patterns with
// multiplicities, and one walk per (x, pattern) is scaled by count/Nz.
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxTreeFeatures = 64;   // feature sets live in one uint64_t mask
constexpr int kMaxCachedNodes = 64;    // decision patterns live in one uint64_t
constexpr int kWeightTableSize = 24;   // covers depths far beyond trained trees

// weight(a, b) = (a-1)! b! / (a+b)! = (1/a) * prod_{j=1..b} j/(a+j)
double unanimity_weight(int a, int b) {
  double w = 1.0 / static_cast<double>(a);
  for (int j = 1; j <= b; ++j) {
    w *= static_cast<double>(j) / static_cast<double>(a + j);
  }
  return w;
}

struct WeightTable {
  double w[kWeightTableSize][kWeightTableSize];
  WeightTable() {
    for (int a = 1; a < kWeightTableSize; ++a) {
      for (int b = 0; b + a < kWeightTableSize; ++b) {
        w[a][b] = unanimity_weight(a, b);
      }
    }
  }
};

const WeightTable& weight_table() {
  static const WeightTable table;
  return table;
}

inline double positive_weight(int a, int b) {
  if (a + b < kWeightTableSize) return weight_table().w[a][b];
  return unanimity_weight(a, b);
}

// Bit i set means the point goes left at node i.
std::uint64_t decision_bits(const Tree& tree, const double* v) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& nd = tree.nodes[i];
    if (nd.feature >= 0 && v[nd.feature] < nd.threshold) {
      bits |= std::uint64_t{1} << i;
    }
  }
  return bits;
}

// One (x-pattern, z-pattern) walk; phi gets `scale` * the per-leaf closed form.
void walk_tree(const std::vector<TreeNode>& nodes, std::uint64_t x_bits,
               std::uint64_t z_bits, double scale, double* phi) {
  struct Frame {
    int node;
    std::uint64_t from_x;  // features forced to x's side on this path
    std::uint64_t from_z;  // features forced to z's side
  };
  Frame stack[kMaxCachedNodes + 2];
  int top = 0;
  stack[top++] = Frame{0, 0, 0};

  while (top > 0) {
    const Frame fr = stack[--top];
    const TreeNode& nd = nodes[static_cast<std::size_t>(fr.node)];
    if (nd.feature < 0) {
      const int a = std::popcount(fr.from_x);
      const int b = std::popcount(fr.from_z);
      if (a == 0 && b == 0) continue;  // x and z share the path: constant game
      if (a > 0) {
        const double wp = positive_weight(a, b) * nd.value * scale;
        std::uint64_t bits = fr.from_x;
        while (bits) {
          const int i = std::countr_zero(bits);
          bits &= bits - 1;
          phi[i] += wp;
        }
      }
      if (b > 0) {
        const double wn = positive_weight(b, a) * nd.value * scale;
        std::uint64_t bits = fr.from_z;
        while (bits) {
          const int i = std::countr_zero(bits);
          bits &= bits - 1;
          phi[i] -= wn;
        }
      }
      continue;
    }

    const std::uint64_t node_bit = std::uint64_t{1} << fr.node;
    const bool x_left = (x_bits & node_bit) != 0;
    const bool z_left = (z_bits & node_bit) != 0;
    if (x_left == z_left) {
      stack[top++] = Frame{x_left ? nd.left : nd.right, fr.from_x, fr.from_z};
      continue;
    }
    const std::uint64_t bit = std::uint64_t{1} << nd.feature;
    // x's side needs the feature in the coalition; dead if already forced to z.
    if (!(fr.from_z & bit)) {
      stack[top++] = Frame{x_left ? nd.left : nd.right, fr.from_x | bit, fr.from_z};
    }
    // z's side needs it out of the coalition; dead if already forced to x.
    if (!(fr.from_x & bit)) {
      stack[top++] = Frame{z_left ? nd.left : nd.right, fr.from_x, fr.from_z | bit};
    }
  }
}

// Background decision patterns for every tree of a model, plus the baseline.
class TreeShapEngine {
 public:
  TreeShapEngine(const Ensemble& model, const BackgroundSet& bg) : model_(model) {
    const auto m = static_cast<Eigen::Index>(model.feature_names.size());
    if (m > kMaxTreeFeatures) {
      throw ValidationError("shap_tree supports at most 64 features");
    }
    if (bg.rows.cols() != m) {
      throw ValidationError("background feature count does not match the model");
    }
    for (const Tree& t : model.trees) {
      if (t.nodes.size() > kMaxCachedNodes) {
        throw ValidationError("shap_tree supports at most 64 nodes per tree");
      }
      for (const TreeNode& nd : t.nodes) {
        if (nd.feature >= static_cast<int>(m)) {
          throw ValidationError("tree references a feature beyond the input dimension");
        }
      }
    }

    const auto n_bg = bg.rows.rows();
    inv_bg_ = 1.0 / static_cast<double>(n_bg);
    patterns_.resize(model.trees.size());
    Eigen::VectorXd z(m);
    double base_acc = 0.0;
    for (Eigen::Index r = 0; r < n_bg; ++r) {
      z = bg.rows.row(r).transpose();
      base_acc += model.predict(z);
      for (std::size_t t = 0; t < model.trees.size(); ++t) {
        patterns_[t].emplace_back(decision_bits(model.trees[t], z.data()), 1.0);
      }
    }
    for (auto& per_tree : patterns_) consolidate(per_tree);
    base_value_ = base_acc * inv_bg_;
  }

  double base_value() const { return base_value_; }

  Explanation explain(const Eigen::VectorXd& x) const {
    const auto m = static_cast<Eigen::Index>(model_.feature_names.size());
    if (x.size() != m) throw ValidationError("explanation input has wrong dimension");
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(m);
    for (std::size_t t = 0; t < model_.trees.size(); ++t) {
      const Tree& tree = model_.trees[t];
      const std::uint64_t x_bits = decision_bits(tree, x.data());
      for (const auto& [z_bits, count] : patterns_[t]) {
        if (z_bits == x_bits) continue;  // identical paths: constant game
        walk_tree(tree.nodes, x_bits, z_bits, count * inv_bg_, phi.data());
      }
    }
    Explanation ex;
    ex.feature_values = x;
    ex.feature_names = model_.feature_names;
    ex.phis = std::move(phi);
    ex.base_value = base_value_;
    ex.fx = model_.predict(x);
    return ex;
  }

 private:
  static void consolidate(std::vector<std::pair<std::uint64_t, double>>& pats) {
    std::sort(pats.begin(), pats.end());
    std::size_t out = 0;
    for (std::size_t i = 0; i < pats.size(); ++i) {
      if (out > 0 && pats[out - 1].first == pats[i].first) {
        pats[out - 1].second += pats[i].second;
      } else {
        pats[out++] = pats[i];
      }
    }
    pats.resize(out);
  }

  const Ensemble& model_;
  std::vector<std::vector<std::pair<std::uint64_t, double>>> patterns_;  // per tree
  double inv_bg_ = 0.0;
  double base_value_ = 0.0;
};

}  // namespace

Explanation shap_tree(const Ensemble& model, const Eigen::VectorXd& x,
                      const BackgroundSet& bg) {
  return TreeShapEngine(model, bg).explain(x);
}

ExplanationSet explain_dataset(const Ensemble& model, const Dataset& ds,
                               const BackgroundSet& bg) {
  ExplanationSet es;
  es.model_id = "gbt";
  es.background_id = std::to_string(bg.rows.rows()) + " rows";
  if (ds.rows() == 0) return es;
  const TreeShapEngine engine(model, bg);  // one pattern scan for all rows
  es.explanations.reserve(static_cast<std::size_t>(ds.rows()));
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    es.explanations.push_back(engine.explain(ds.injections.row(r).transpose()));
  }
  return es;
}

ExplanationSet explain_dataset(const LinearModel& model, const Dataset& ds,
                               const BackgroundSet& bg) {
  (void)bg;  // the closed form centers on the model's stored training means
  ExplanationSet es;
  es.model_id = "linear";
  es.background_id = "training means";
  es.explanations.reserve(static_cast<std::size_t>(ds.rows()));
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    es.explanations.push_back(shap_linear(model, ds.injections.row(r).transpose()));
  }
  return es;
}

std::vector<std::pair<std::string, double>> feature_importance(const ExplanationSet& es) {
  if (es.explanations.empty()) {
    throw ValidationError("feature importance of an empty explanation set");
  }
  const auto m = es.explanations.front().phis.size();
  Eigen::VectorXd mean_abs = Eigen::VectorXd::Zero(m);
  for (const Explanation& ex : es.explanations) {
    mean_abs += ex.phis.cwiseAbs();
  }
  mean_abs /= static_cast<double>(es.explanations.size());

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mean_abs(a) > mean_abs(b); });

  std::vector<std::pair<std::string, double>> ranked;
  for (int i : order) {
    ranked.emplace_back(es.explanations.front().feature_names[static_cast<std::size_t>(i)],
                        mean_abs(i));
  }
  return ranked;
}

double shap_derivative(const LinearModel& model, const Eigen::VectorXd& x, int i,
                       double h_mw) {
  if (h_mw == 0.0) throw ValidationError("shap_derivative step must be nonzero");
  if (i < 0 || i >= x.size()) throw ValidationError("shap_derivative feature out of range");
  Eigen::VectorXd bumped = x;
  bumped(i) += h_mw;
  return (shap_linear(model, bumped).phis(i) - shap_linear(model, x).phis(i)) / h_mw;
}

std::string explanations_to_csv(const ExplanationSet& es, bool include_local_acc) {
  using detail::fmt10;
  std::string out = "row";
  if (!es.explanations.empty()) {
    const auto& names = es.explanations.front().feature_names;
    for (const auto& n : names) out += "," + n;
    out += ",fx,base";
    for (const auto& n : names) out += ",phi_" + n;
  } else {
    out += ",fx,base";
  }
  if (include_local_acc) out += ",local_acc";
  out += '\n';
  for (std::size_t r = 0; r < es.explanations.size(); ++r) {
    const Explanation& ex = es.explanations[r];
    out += std::to_string(r);
    for (Eigen::Index i = 0; i < ex.feature_values.size(); ++i) {
      out += "," + fmt10(ex.feature_values(i));
    }
    out += "," + fmt10(ex.fx) + "," + fmt10(ex.base_value);
    for (Eigen::Index i = 0; i < ex.phis.size(); ++i) {
      out += "," + fmt10(ex.phis(i));
    }
    if (include_local_acc) out += "," + fmt10(ex.local_accuracy_residual());
    out += '\n';
  }
  return out;
}

void write_explanations_csv(const ExplanationSet& es, const std::string& path,
                            bool include_local_acc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << explanations_to_csv(es, include_local_acc);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace gridshap
