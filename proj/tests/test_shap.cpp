#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gridshap/dataset.hpp"
#include "gridshap/errors.hpp"
#include "gridshap/shap.hpp"
#include "testutil.hpp"

using namespace gridshap;
namespace tu = gridshap::testutil;

namespace {

LinearModel toy_linear() {
  LinearModel m;
  m.weights = Eigen::Vector2d(2.0, 3.0);
  m.intercept = 1.0;
  m.feature_means = Eigen::Vector2d(1.0, 1.0);
  m.feature_names = {"PG2", "PG3"};
  return m;
}

struct Case9Fixture {
  Network net = builtin_case9();
  Dataset ds = sample_scenarios(net, 1001, 0.0, 500.0, 83);
  SplitResult parts = split(ds, 0.75, 83);
};

}  // namespace

TEST_CASE("linear SHAP closed form") {
  const LinearModel m = toy_linear();
  const Explanation ex = shap_linear(m, Eigen::Vector2d(2.0, 0.0));
  CHECK(ex.phis(0) == 2.0);
  CHECK(ex.phis(1) == -3.0);
  CHECK(ex.base_value == 6.0);
  CHECK(ex.fx == 5.0);
  CHECK(ex.local_accuracy_residual() <= 1e-10);

  const Explanation at_mean = shap_linear(m, Eigen::Vector2d(1.0, 1.0));
  CHECK(at_mean.phis(0) == 0.0);
  CHECK(at_mean.phis(1) == 0.0);
}

TEST_CASE("linear SHAP at the showcase point with nominal means") {
  // Table-row weights at means (250, 250): phi = w .* (x - mean).
  Case9Fixture f;
  LinearModel m = fit_linear(f.parts.train, "4-5");
  m.feature_means = Eigen::Vector2d(250.0, 250.0);
  const Explanation ex = shap_linear(m, Eigen::Vector2d(15.0, 267.8));
  CHECK(std::abs(ex.phis(0) - 84.9148) < 0.5);
  CHECK(std::abs(ex.phis(1) + 10.9498) < 0.5);
  CHECK(ex.local_accuracy_residual() <= 1e-10);
}

TEST_CASE("brute-force SHAP obeys the dummy axiom exactly") {
  const auto f = [](const Eigen::VectorXd& x) { return 3.0 * x(0) + 1.0; };
  Rng rng(3);
  const BackgroundSet bg = tu::random_background(rng, 2, 6);
  const Explanation ex = shap_exact(f, Eigen::Vector2d(0.7, 0.2), bg);
  CHECK(ex.phis(1) == 0.0);
  CHECK(ex.local_accuracy_residual() <= 1e-9);
}

TEST_CASE("brute-force SHAP obeys the symmetry axiom") {
  const auto f = [](const Eigen::VectorXd& x) { return x(0) + x(1); };
  Eigen::MatrixXd rows(4, 2);
  rows << 0.0, 1.0, 1.0, 0.0, 2.0, 5.0, 5.0, 2.0;  // swap-symmetric background
  const BackgroundSet bg = BackgroundSet::from_rows(rows);
  const Explanation ex = shap_exact(f, Eigen::Vector2d(3.0, 3.0), bg);
  CHECK(std::abs(ex.phis(0) - ex.phis(1)) < 1e-12);
}

TEST_CASE("brute-force SHAP refuses huge feature counts") {
  const auto f = [](const Eigen::VectorXd& x) { return x.sum(); };
  Rng rng(4);
  const BackgroundSet bg = tu::random_background(rng, 21, 2);
  CHECK_THROWS_AS(shap_exact(f, tu::random_point(rng, 21), bg), ValidationError);
}

TEST_CASE("interventional SHAP of a linear model equals the closed form") {
  Case9Fixture f;
  const LinearModel m = fit_linear(f.parts.train, "4-5");
  // Background = the training set itself, so means coincide.
  const BackgroundSet bg = BackgroundSet::from_dataset(f.parts.train);
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Vector2d x(rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0));
    const Explanation closed = shap_linear(m, x);
    const Explanation brute = shap_exact(m, x, bg);
    CHECK((closed.phis - brute.phis).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(closed.base_value - brute.base_value) < 1e-9);
  }
}

TEST_CASE("tree SHAP: a stump ignores the feature it never tests") {
  Ensemble e;
  e.feature_names = {"a", "b"};
  Tree t;
  t.nodes.push_back(TreeNode{0, 0.5, 1, 2, 0.0, 2});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 1.0, 1});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 4.0, 1});
  e.trees.push_back(t);
  Rng rng(8);
  const BackgroundSet bg = tu::random_background(rng, 2, 7);
  const Explanation ex = shap_tree(e, Eigen::Vector2d(0.3, 0.9), bg);
  CHECK(ex.phis(1) == 0.0);
  CHECK(ex.local_accuracy_residual() <= 1e-9);
}

TEST_CASE("tree SHAP equals brute force on 1000 random problems") {
  Rng rng(12345);
  int checked = 0;
  while (checked < 1000) {
    const int m = 1 + static_cast<int>(rng.below(3));          // M in {1,2,3}
    const int n_trees = 1 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(4));      // up to depth 4
    const int n_bg = 1 + static_cast<int>(rng.below(8));
    const Ensemble e = tu::random_ensemble(rng, m, n_trees, depth);
    const BackgroundSet bg = tu::random_background(rng, m, n_bg);
    const Eigen::VectorXd x = tu::random_point(rng, m);

    const Explanation tree = shap_tree(e, x, bg);
    const Explanation brute = shap_exact(e, x, bg);
    REQUIRE((tree.phis - brute.phis).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(std::abs(tree.base_value - brute.base_value) < 1e-9);
    REQUIRE(std::abs(tree.fx - brute.fx) < 1e-9);
    REQUIRE(tree.local_accuracy_residual() < 1e-9);
    ++checked;
  }
}

TEST_CASE("tree SHAP is additive across ensemble members") {
  Rng rng(99);
  const Ensemble both = tu::random_ensemble(rng, 2, 2, 3);
  Ensemble first, second;
  first.feature_names = second.feature_names = both.feature_names;
  first.base_score = second.base_score = 0.0;
  first.trees.push_back(both.trees[0]);
  second.trees.push_back(both.trees[1]);
  const BackgroundSet bg = tu::random_background(rng, 2, 5);
  const Eigen::VectorXd x = tu::random_point(rng, 2);
  const Explanation ea = shap_tree(first, x, bg);
  const Explanation eb = shap_tree(second, x, bg);
  Ensemble sum_model = both;
  const Explanation es = shap_tree(sum_model, x, bg);
  CHECK((es.phis - ea.phis - eb.phis).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trained line 4-5 model explains the showcase point near the table values") {
  Case9Fixture f;
  const Ensemble m = fit_gbt(f.parts.train, "4-5", TrainConfig{});
  const BackgroundSet bg = BackgroundSet::from_dataset(f.parts.train);
  const Explanation ex = shap_tree(m, Eigen::Vector2d(15.0, 267.8), bg);
  CHECK(std::abs(ex.phis(0) - 82.6) < 5.0);
  CHECK(std::abs(ex.phis(1) + 10.2) < 5.0);
  CHECK(ex.local_accuracy_residual() <= 1e-6);

  // Tree engine agrees with brute force on the trained model too.
  const BackgroundSet small = BackgroundSet::subsample(f.parts.train, 50, 83);
  const Explanation tree = shap_tree(m, Eigen::Vector2d(15.0, 267.8), small);
  const Explanation brute = shap_exact(m, Eigen::Vector2d(15.0, 267.8), small);
  CHECK((tree.phis - brute.phis).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("explain_dataset preserves rows and local accuracy") {
  Case9Fixture f;
  const Ensemble m = fit_gbt(f.parts.train, "4-5", TrainConfig{1500, 1, 1.0, 1});
  const BackgroundSet bg = BackgroundSet::subsample(f.parts.train, 100, 83);

  Dataset empty;
  empty.feature_names = f.ds.feature_names;
  empty.target_names = f.ds.target_names;
  empty.injections.resize(0, 2);
  empty.flows.resize(0, 9);
  CHECK(explain_dataset(m, empty, bg).explanations.empty());

  Dataset head;
  head.feature_names = f.ds.feature_names;
  head.target_names = f.ds.target_names;
  head.injections = f.ds.injections.topRows(200);
  head.flows = f.ds.flows.topRows(200);
  const ExplanationSet es = explain_dataset(m, head, bg);
  REQUIRE(es.explanations.size() == 200);
  for (std::size_t r = 0; r < es.explanations.size(); ++r) {
    CHECK(es.explanations[r].local_accuracy_residual() <= 1e-6);
    CHECK(es.explanations[r].base_value == es.explanations.front().base_value);
    CHECK(es.explanations[r].feature_values ==
          head.injections.row(static_cast<Eigen::Index>(r)).transpose());
  }
}

TEST_CASE("feature importance ranks PG3 first on line 4-5") {
  Case9Fixture f;
  const Ensemble m = fit_gbt(f.parts.train, "4-5", TrainConfig{1500, 1, 1.0, 1});
  const BackgroundSet bg = BackgroundSet::subsample(f.parts.train, 100, 83);
  const ExplanationSet es = explain_dataset(m, f.parts.train, bg);
  const auto ranked = feature_importance(es);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].first == "PG3");
  CHECK(ranked[0].second > ranked[1].second);
}

TEST_CASE("feature importance edge cases") {
  ExplanationSet es;
  CHECK_THROWS_AS(feature_importance(es), ValidationError);

  Explanation zero;
  zero.feature_names = {"PG2", "PG3"};
  zero.phis = Eigen::Vector2d(0.0, 0.0);
  zero.feature_values = Eigen::Vector2d(1.0, 2.0);
  es.explanations = {zero, zero};
  const auto ranked = feature_importance(es);
  CHECK(ranked[0].first == "PG2");  // ties keep feature order
  CHECK(ranked[0].second == 0.0);
  CHECK(ranked[1].first == "PG3");
}

TEST_CASE("SHAP derivative of a linear model is its weight") {
  const LinearModel toy = toy_linear();
  Rng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x = tu::random_point(rng, 2, -50.0, 50.0);
    CHECK(std::abs(shap_derivative(toy, x, 0, 1.0) - 2.0) < 1e-12);
    CHECK(std::abs(shap_derivative(toy, x, 1, 0.25) - 3.0) < 1e-12);
  }

  Case9Fixture f;
  const PtdfMatrix d = analytical_ptdf(f.net);
  const LinearModel m45 = fit_linear(f.parts.train, "4-5");
  const double d45_pg3 = shap_derivative(m45, Eigen::Vector2d(100.0, 100.0), 1, 1.0);
  CHECK(std::abs(d45_pg3 - d.entries(f.net.branch_index("4-5"), 1)) < 1e-9);
  CHECK(std::abs(d45_pg3 + 0.6152) < 5e-5);  // table value at print precision

  const LinearModel m36 = fit_linear(f.parts.train, "3-6");
  CHECK(std::abs(shap_derivative(m36, Eigen::Vector2d(10.0, 400.0), 0, 1.0)) < 1e-9);

  CHECK_THROWS_AS(shap_derivative(m45, Eigen::Vector2d(0.0, 0.0), 0, 0.0), ValidationError);
  CHECK_THROWS_AS(shap_derivative(m45, Eigen::Vector2d(0.0, 0.0), 5, 1.0), ValidationError);
}

TEST_CASE("background set construction") {
  CHECK_THROWS_AS(BackgroundSet::from_rows(Eigen::MatrixXd(0, 2)), ValidationError);

  Case9Fixture f;
  const BackgroundSet full = BackgroundSet::from_dataset(f.parts.train);
  CHECK(full.rows.rows() == f.parts.train.rows());
  CHECK((full.means - f.parts.train.injections.colwise().mean().transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const BackgroundSet sub = BackgroundSet::subsample(f.parts.train, 100, 7);
  CHECK(sub.rows.rows() == 100);
  const BackgroundSet sub2 = BackgroundSet::subsample(f.parts.train, 100, 7);
  CHECK(sub.rows == sub2.rows);  // deterministic
  const BackgroundSet all = BackgroundSet::subsample(f.parts.train, 100000, 7);
  CHECK(all.rows.rows() == f.parts.train.rows());
}

TEST_CASE("explanation CSV carries the documented schema") {
  Case9Fixture f;
  const LinearModel m = fit_linear(f.parts.train, "4-5");
  Dataset head;
  head.feature_names = f.ds.feature_names;
  head.target_names = f.ds.target_names;
  head.injections = f.ds.injections.topRows(5);
  head.flows = f.ds.flows.topRows(5);
  const ExplanationSet es =
      explain_dataset(m, head, BackgroundSet::from_dataset(f.parts.train));

  const std::string plain = explanations_to_csv(es);
  CHECK(plain.rfind("row,PG2,PG3,fx,base,phi_PG2,phi_PG3\n", 0) == 0);
  CHECK(std::count(plain.begin(), plain.end(), '\n') == 6);

  const std::string with_acc = explanations_to_csv(es, true);
  CHECK(with_acc.rfind("row,PG2,PG3,fx,base,phi_PG2,phi_PG3,local_acc\n", 0) == 0);
}
