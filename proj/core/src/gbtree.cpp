#include "gridshap/gbtree.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "gridshap/errors.hpp"
#include "text_util.hpp"

namespace gridshap {

double Tree::predict(const Eigen::VectorXd& x) const {
  return nodes[static_cast<std::size_t>(leaf_for(x))].value;
}

int Tree::leaf_for(const Eigen::VectorXd& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(at)];
    at = x(nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return at;
}

double Ensemble::predict(const Eigen::VectorXd& x) const {
  if (x.size() != static_cast<Eigen::Index>(feature_names.size())) {
    throw ValidationError("prediction input has wrong dimension");
  }
  double sum = base_score;
  for (const Tree& t : trees) sum += t.predict(x);
  return sum;
}

double LinearModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != weights.size()) {
    throw ValidationError("prediction input has wrong dimension");
  }
  return weights.dot(x) + intercept;
}

double predict(const Model& model, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

// Greedy exact squared-error split: maximizes sum_L^2/n_L + sum_R^2/n_R,
// which equals SSE reduction up to a per-node constant. Candidate thresholds
// are midpoints of consecutive distinct sorted values; ties keep the first
// (lowest feature index, then smallest threshold).
SplitChoice best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual,
                       const std::vector<int>& rows, int min_samples_leaf) {
  const auto n = rows.size();
  SplitChoice best;
  const double parent_sum =
      std::accumulate(rows.begin(), rows.end(), 0.0,
                      [&](double acc, int r) { return acc + residual(r); });
  const double parent_score =
      parent_sum * parent_sum / static_cast<double>(n);

  std::vector<std::pair<double, double>> ordered(n);  // (value, residual)
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      ordered[i] = {x(rows[i], f), residual(rows[i])};
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double left_sum = 0.0;
    for (std::size_t p = 1; p < n; ++p) {
      left_sum += ordered[p - 1].second;
      if (ordered[p - 1].first == ordered[p].first) continue;
      const auto n_left = p;
      const auto n_right = n - p;
      if (n_left < static_cast<std::size_t>(min_samples_leaf) ||
          n_right < static_cast<std::size_t>(min_samples_leaf)) {
        continue;
      }
      const double threshold = 0.5 * (ordered[p - 1].first + ordered[p].first);
      if (!(ordered[p - 1].first < threshold)) continue;  // no representable midpoint
      const double right_sum = parent_sum - left_sum;
      const double score = left_sum * left_sum / static_cast<double>(n_left) +
                           right_sum * right_sum / static_cast<double>(n_right);
      if (score > best.score && score > parent_score) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = threshold;
        best.score = score;
      }
    }
  }
  return best;
}

int grow(Tree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXd& residual,
         std::vector<int> rows, int depth, const TrainConfig& cfg) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes.back().cover = static_cast<int>(rows.size());

  SplitChoice choice;
  if (depth < cfg.max_depth &&
      rows.size() >= 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
    choice = best_split(x, residual, rows, cfg.min_samples_leaf);
  }
  if (!choice.found) {
    double sum = 0.0;
    for (int r : rows) sum += residual(r);
    tree.nodes[static_cast<std::size_t>(index)].value =
        cfg.learning_rate * sum / static_cast<double>(rows.size());
    return index;
  }

  std::vector<int> left_rows, right_rows;
  for (int r : rows) {
    (x(r, choice.feature) < choice.threshold ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();

  const int left = grow(tree, x, residual, std::move(left_rows), depth + 1, cfg);
  const int right = grow(tree, x, residual, std::move(right_rows), depth + 1, cfg);
  TreeNode& nd = tree.nodes[static_cast<std::size_t>(index)];
  nd.feature = choice.feature;
  nd.threshold = choice.threshold;
  nd.left = left;
  nd.right = right;
  return index;
}

}  // namespace

Ensemble fit_gbt(const Dataset& train, const std::string& target, const TrainConfig& cfg) {
  if (cfg.n_trees < 1 || cfg.max_depth < 1 || cfg.min_samples_leaf < 1 ||
      !(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
    throw ValidationError("invalid training configuration");
  }
  const auto n = train.rows();
  if (n < 2 * static_cast<Eigen::Index>(cfg.min_samples_leaf)) {
    throw ValidationError("training set too small for min_samples_leaf");
  }
  const Eigen::VectorXd y = train.flows.col(train.target_index(target));

  Ensemble model;
  model.feature_names = train.feature_names;
  model.base_score = y.mean();

  Eigen::VectorXd residual = y.array() - model.base_score;
  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int t = 0; t < cfg.n_trees; ++t) {
    Tree tree;
    grow(tree, train.injections, residual, all_rows, 0, cfg);
    for (Eigen::Index r = 0; r < n; ++r) {
      residual(r) -= tree.predict(train.injections.row(r).transpose());
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

LinearModel fit_linear(const Dataset& train, const std::string& target) {
  const auto n = train.rows();
  const auto k = train.injections.cols();
  if (n < k + 1) throw ValidationError("too few rows for a linear fit");
  const Eigen::VectorXd y = train.flows.col(train.target_index(target));

  Eigen::MatrixXd design(n, k + 1);
  design.leftCols(k) = train.injections;
  design.col(k).setOnes();

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  if (cod.rank() < k + 1) {
    throw NumericError("linear fit design matrix is rank deficient");
  }
  const Eigen::VectorXd coef = cod.solve(y);

  LinearModel model;
  model.weights = coef.head(k);
  model.intercept = coef(k);
  model.feature_means = train.injections.colwise().mean();
  model.feature_names = train.feature_names;
  return model;
}

// ---------------------------------------------------------------------------
// Model files. Line-oriented text, one header line with a format version:
//
//   gridshap-model v1
//   kind gbt|linear
//   features <k> <name>...
//   ... kind-specific records ...
//   end
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kModelMagic = "gridshap-model v1";

void emit_features(std::string& out, const std::vector<std::string>& names) {
  out += "features " + std::to_string(names.size());
  for (const std::string& n : names) out += " " + n;
  out += "\n";
}

}  // namespace

std::string serialize_model(const Ensemble& model) {
  using detail::fmt17;
  std::string out = std::string(kModelMagic) + "\nkind gbt\n";
  emit_features(out, model.feature_names);
  out += "base_score " + fmt17(model.base_score) + "\n";
  out += "trees " + std::to_string(model.trees.size()) + "\n";
  for (const Tree& t : model.trees) {
    out += "tree " + std::to_string(t.nodes.size()) + "\n";
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& nd = t.nodes[i];
      if (nd.feature >= 0) {
        out += "node " + std::to_string(i) + " split " + std::to_string(nd.feature) +
               " " + fmt17(nd.threshold) + " " + std::to_string(nd.left) + " " +
               std::to_string(nd.right) + " " + std::to_string(nd.cover) + "\n";
      } else {
        out += "node " + std::to_string(i) + " leaf " + fmt17(nd.value) + " " +
               std::to_string(nd.cover) + "\n";
      }
    }
  }
  out += "end\n";
  return out;
}

std::string serialize_model(const LinearModel& model) {
  using detail::fmt17;
  std::string out = std::string(kModelMagic) + "\nkind linear\n";
  emit_features(out, model.feature_names);
  out += "weights";
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
    out += " " + fmt17(model.weights(i));
  }
  out += "\nintercept " + fmt17(model.intercept) + "\nmeans";
  for (Eigen::Index i = 0; i < model.feature_means.size(); ++i) {
    out += " " + fmt17(model.feature_means(i));
  }
  out += "\nend\n";
  return out;
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(const std::string& text) : in_(text) {}

  std::vector<std::string> next_line() {
    std::string line;
    while (std::getline(in_, line)) {
      std::vector<std::string> tok;
      std::istringstream ls(line);
      std::string t;
      while (ls >> t) tok.push_back(t);
      if (!tok.empty()) return tok;
    }
    throw ValidationError("corrupt model file: unexpected end of data");
  }

  std::vector<std::string> expect(const std::string& keyword, std::size_t min_tokens) {
    auto tok = next_line();
    if (tok[0] != keyword || tok.size() < min_tokens) {
      throw ValidationError("corrupt model file: expected '" + keyword + "' record");
    }
    return tok;
  }

  static double to_real(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw ValidationError("corrupt model file: bad number '" + s + "'");
    }
    return v;
  }

  static int to_int(const std::string& s) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
      throw ValidationError("corrupt model file: bad integer '" + s + "'");
    }
    return static_cast<int>(v);
  }

 private:
  std::istringstream in_;
};

void check_tree_structure(const Tree& tree) {
  if (tree.nodes.empty()) throw ValidationError("corrupt model file: empty tree");
  for (const TreeNode& nd : tree.nodes) {
    if (nd.feature >= 0) {
      const auto count = static_cast<int>(tree.nodes.size());
      if (nd.left < 0 || nd.left >= count || nd.right < 0 || nd.right >= count) {
        throw ValidationError("corrupt model file: child index out of range");
      }
      const TreeNode& l = tree.nodes[static_cast<std::size_t>(nd.left)];
      const TreeNode& r = tree.nodes[static_cast<std::size_t>(nd.right)];
      if (nd.cover != l.cover + r.cover) {
        throw ValidationError("corrupt model file: cover(parent) != cover(left) + cover(right)");
      }
    }
    if (nd.cover < 1) throw ValidationError("corrupt model file: cover < 1");
  }
}

}  // namespace

Model parse_model(const std::string& text) {
  {
    std::istringstream probe(text);
    std::string first;
    if (!std::getline(probe, first)) {
      throw ValidationError("corrupt model file: empty");
    }
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first != kModelMagic) {
      throw ValidationError("unsupported model file version: '" + first + "'");
    }
  }
  ModelReader rd(text);
  rd.next_line();  // magic, already checked
  const auto kind_tok = rd.expect("kind", 2);

  const auto feat_tok = rd.expect("features", 2);
  const int k = ModelReader::to_int(feat_tok[1]);
  if (k < 1 || feat_tok.size() != static_cast<std::size_t>(k) + 2) {
    throw ValidationError("corrupt model file: bad features record");
  }
  std::vector<std::string> names(feat_tok.begin() + 2, feat_tok.end());

  if (kind_tok[1] == "linear") {
    LinearModel m;
    m.feature_names = names;
    const auto w_tok = rd.expect("weights", static_cast<std::size_t>(k) + 1);
    m.weights.resize(k);
    for (int i = 0; i < k; ++i) m.weights(i) = ModelReader::to_real(w_tok[static_cast<std::size_t>(i) + 1]);
    m.intercept = ModelReader::to_real(rd.expect("intercept", 2)[1]);
    const auto mean_tok = rd.expect("means", static_cast<std::size_t>(k) + 1);
    m.feature_means.resize(k);
    for (int i = 0; i < k; ++i) m.feature_means(i) = ModelReader::to_real(mean_tok[static_cast<std::size_t>(i) + 1]);
    rd.expect("end", 1);
    return m;
  }
  if (kind_tok[1] != "gbt") {
    throw ValidationError("corrupt model file: unknown kind '" + kind_tok[1] + "'");
  }

  Ensemble m;
  m.feature_names = names;
  m.base_score = ModelReader::to_real(rd.expect("base_score", 2)[1]);
  const int n_trees = ModelReader::to_int(rd.expect("trees", 2)[1]);
  for (int t = 0; t < n_trees; ++t) {
    const int n_nodes = ModelReader::to_int(rd.expect("tree", 2)[1]);
    Tree tree;
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) {
      const auto tok = rd.expect("node", 4);
      if (ModelReader::to_int(tok[1]) != i) {
        throw ValidationError("corrupt model file: node records out of order");
      }
      TreeNode& nd = tree.nodes[static_cast<std::size_t>(i)];
      if (tok[2] == "split" && tok.size() == 8) {
        nd.feature = ModelReader::to_int(tok[3]);
        nd.threshold = ModelReader::to_real(tok[4]);
        nd.left = ModelReader::to_int(tok[5]);
        nd.right = ModelReader::to_int(tok[6]);
        nd.cover = ModelReader::to_int(tok[7]);
        if (nd.feature < 0 || nd.feature >= k) {
          throw ValidationError("corrupt model file: split feature out of range");
        }
      } else if (tok[2] == "leaf" && tok.size() == 5) {
        nd.feature = -1;
        nd.value = ModelReader::to_real(tok[3]);
        nd.cover = ModelReader::to_int(tok[4]);
      } else {
        throw ValidationError("corrupt model file: bad node record");
      }
    }
    check_tree_structure(tree);
    m.trees.push_back(std::move(tree));
  }
  rd.expect("end", 1);
  return m;
}

void save_model(const Ensemble& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << serialize_model(model);
  if (!out) throw IoError("failed writing '" + path + "'");
}

void save_model(const LinearModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << serialize_model(model);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

Ensemble load_gbt(const std::string& path) {
  Model m = load_model(path);
  if (auto* e = std::get_if<Ensemble>(&m)) return std::move(*e);
  throw ValidationError("'" + path + "' is not a gbt model");
}

LinearModel load_linear(const std::string& path) {
  Model m = load_model(path);
  if (auto* l = std::get_if<LinearModel>(&m)) return std::move(*l);
  throw ValidationError("'" + path + "' is not a linear model");
}

}  // namespace gridshap
