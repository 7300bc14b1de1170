#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <sstream>

#include "epfw/forest.hpp"
#include "epfw/rng.hpp"

using namespace epfw;

namespace {

struct Task {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Task random_task(Rng& rng, int n, int p) {
  Task t;
  t.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) t.X(i, j) = rng.uniform(-3.0, 3.0);
  t.y.resize(n);
  return t;
}

}  // namespace

TEST_CASE("constant target collapses to a single leaf") {
  Rng rng(1);
  auto t = random_task(rng, 40, 3);
  t.y.setConstant(7.5);
  const auto tree = fit_tree(t.X, t.y);
  REQUIRE(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].feature == -1);
  CHECK(tree.predict(t.X.row(5)) == doctest::Approx(7.5));
}

TEST_CASE("depth zero gives the target mean") {
  Rng rng(2);
  auto t = random_task(rng, 30, 2);
  for (int i = 0; i < 30; ++i) t.y(i) = rng.uniform(0.0, 10.0);
  TreeParams params;
  params.max_depth = 0;
  const auto tree = fit_tree(t.X, t.y, params);
  REQUIRE(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].value == doctest::Approx(t.y.mean()));
}

TEST_CASE("depth-1 tree finds a planted step on feature 1") {
  Rng rng(3);
  auto t = random_task(rng, 200, 4);
  for (int i = 0; i < 200; ++i) t.y(i) = t.X(i, 1) > 0.0 ? 1.0 : 0.0;
  TreeParams params;
  params.max_depth = 1;
  params.min_samples_leaf = 1;
  const auto tree = fit_tree(t.X, t.y, params);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 1);
  CHECK(std::abs(tree.nodes[0].threshold) < 0.25);
  const double lo = tree.nodes[tree.nodes[0].left].value;
  const double hi = tree.nodes[tree.nodes[0].right].value;
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("depth-1 split matches a brute-force best-split search") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_task(rng, 60, 3);
    for (int i = 0; i < 60; ++i)
      t.y(i) = std::sin(t.X(i, 0)) + 0.5 * t.X(i, 2) + 0.2 * rng.normal();

    TreeParams params;
    params.max_depth = 1;
    params.min_samples_leaf = 1;
    const auto tree = fit_tree(t.X, t.y, params);
    REQUIRE(tree.nodes[0].feature >= 0);

    // oracle: scan every (feature, midpoint) pair for minimum total SSE
    double best_sse = std::numeric_limits<double>::infinity();
    for (int f = 0; f < 3; ++f) {
      std::vector<double> vals(60);
      for (int i = 0; i < 60; ++i) vals[i] = t.X(i, f);
      std::sort(vals.begin(), vals.end());
      for (int i = 0; i + 1 < 60; ++i) {
        if (vals[i] == vals[i + 1]) continue;
        const double thr = 0.5 * (vals[i] + vals[i + 1]);
        double sl = 0, sl2 = 0, sr = 0, sr2 = 0;
        int nl = 0, nr = 0;
        for (int r = 0; r < 60; ++r) {
          if (t.X(r, f) <= thr) { sl += t.y(r); sl2 += t.y(r) * t.y(r); ++nl; }
          else { sr += t.y(r); sr2 += t.y(r) * t.y(r); ++nr; }
        }
        const double sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr);
        best_sse = std::min(best_sse, sse);
      }
    }
    // SSE achieved by the tree's own split
    const int f = tree.nodes[0].feature;
    const double thr = tree.nodes[0].threshold;
    double sl = 0, sl2 = 0, sr = 0, sr2 = 0;
    int nl = 0, nr = 0;
    for (int r = 0; r < 60; ++r) {
      if (t.X(r, f) <= thr) { sl += t.y(r); sl2 += t.y(r) * t.y(r); ++nl; }
      else { sr += t.y(r); sr2 += t.y(r) * t.y(r); ++nr; }
    }
    const double tree_sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr);
    REQUIRE(tree_sse == doctest::Approx(best_sse).epsilon(1e-9));
  }
}

TEST_CASE("deep unbagged tree memorizes distinct training points") {
  Rng rng(5);
  auto t = random_task(rng, 50, 3);
  for (int i = 0; i < 50; ++i) t.y(i) = rng.uniform(-5.0, 5.0);
  TreeParams params;
  params.max_depth = 50;
  params.min_samples_leaf = 1;
  const auto tree = fit_tree(t.X, t.y, params);
  for (int i = 0; i < 50; ++i)
    CHECK(tree.predict(t.X.row(i)) == doctest::Approx(t.y(i)));
}

TEST_CASE("single-tree forest without bagging equals the plain tree") {
  Rng rng(6);
  auto t = random_task(rng, 80, 4);
  for (int i = 0; i < 80; ++i) t.y(i) = t.X(i, 0) * t.X(i, 1) + rng.normal();
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.tree.features_per_split = 4;  // no subsampling
  const auto forest = fit_forest(t.X, t.y, fp, 9);
  const auto tree = fit_tree(t.X, t.y, fp.tree);
  for (int i = 0; i < 80; ++i)
    REQUIRE(forest.predict(t.X.row(i)) == doctest::Approx(tree.predict(t.X.row(i))));
}

TEST_CASE("forest prediction is exactly the mean of its trees") {
  Rng rng(7);
  auto t = random_task(rng, 100, 5);
  for (int i = 0; i < 100; ++i) t.y(i) = t.X(i, 2) + 0.5 * rng.normal();
  ForestParams fp;
  fp.n_trees = 12;
  const auto forest = fit_forest(t.X, t.y, fp, 3);
  REQUIRE(forest.trees.size() == 12);
  for (int i = 0; i < 100; i += 7) {
    double mean = 0.0;
    for (const auto& tr : forest.trees) mean += tr.predict(t.X.row(i));
    mean /= 12.0;
    REQUIRE(forest.predict(t.X.row(i)) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("same seed reproduces the forest; different seed does not") {
  Rng rng(8);
  auto t = random_task(rng, 60, 4);
  for (int i = 0; i < 60; ++i) t.y(i) = t.X(i, 1) + rng.normal();
  ForestParams fp;
  fp.n_trees = 5;
  const auto f1 = fit_forest(t.X, t.y, fp, 42);
  const auto f2 = fit_forest(t.X, t.y, fp, 42);
  REQUIRE(f1.trees.size() == f2.trees.size());
  for (std::size_t b = 0; b < f1.trees.size(); ++b) {
    REQUIRE(f1.trees[b].nodes.size() == f2.trees[b].nodes.size());
    for (std::size_t k = 0; k < f1.trees[b].nodes.size(); ++k) {
      REQUIRE(f1.trees[b].nodes[k].feature == f2.trees[b].nodes[k].feature);
      REQUIRE(f1.trees[b].nodes[k].threshold == f2.trees[b].nodes[k].threshold);
      REQUIRE(f1.trees[b].nodes[k].value == f2.trees[b].nodes[k].value);
    }
  }
  const auto f3 = fit_forest(t.X, t.y, fp, 43);
  bool differs = false;
  for (int i = 0; i < 60 && !differs; ++i)
    differs = f1.predict(t.X.row(i)) != f3.predict(t.X.row(i));
  CHECK(differs);
}

TEST_CASE("out-of-bag error improves or plateaus with more trees") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    auto t = random_task(rng, 150, 5);
    for (int i = 0; i < 150; ++i)
      t.y(i) = 2.0 * t.X(i, 0) - t.X(i, 3) + 0.5 * rng.normal();
    ForestParams small;
    small.n_trees = 1;
    ForestParams big;
    big.n_trees = 50;
    const double e1 = oob_error(fit_forest(t.X, t.y, small, seed), t.X, t.y);
    const double e50 = oob_error(fit_forest(t.X, t.y, big, seed), t.X, t.y);
    if (e50 <= e1 * 1.05) ++improved;
  }
  CHECK(improved >= 6);  // median over seeds must improve
}

TEST_CASE("importance concentrates on the only informative feature") {
  Rng rng(9);
  auto t = random_task(rng, 200, 5);
  for (int i = 0; i < 200; ++i) t.y(i) = 3.0 * t.X(i, 1);
  ForestParams fp;
  fp.n_trees = 20;
  fp.tree.features_per_split = 5;  // let every split see the signal
  const auto forest = fit_forest(t.X, t.y, fp, 11);
  const auto imp = feature_importance(forest);
  REQUIRE(imp.size() == 5);
  CHECK(imp[0].first == 1);
  CHECK(imp[0].second > 0.95);
  double total = 0.0;
  for (const auto& [f, v] : imp) {
    total += v;
    CHECK(v >= 0.0);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("features a forest never split on get zero importance") {
  Eigen::MatrixXd X(50, 2);
  Eigen::VectorXd y(50);
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    X(i, 1) = 4.2;  // constant, unusable
    y(i) = X(i, 0);
  }
  ForestParams fp;
  fp.n_trees = 10;
  fp.tree.features_per_split = 2;
  const auto forest = fit_forest(X, y, fp, 1);
  const auto imp = feature_importance(forest);
  CHECK(imp[0].first == 0);
  CHECK(imp[1].first == 1);
  CHECK(imp[1].second == 0.0);
}

TEST_CASE("RFE keeps the informative pair for almost every seed") {
  int kept = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    auto t = random_task(rng, 200, 6);
    for (int i = 0; i < 200; ++i)
      t.y(i) = 3.0 * t.X(i, 1) - 2.0 * t.X(i, 2) + 0.3 * rng.normal();
    ForestParams fp;
    fp.n_trees = 25;
    const auto trace =
        rfe_rf(t.X, t.y, {"a", "b", "c", "d", "e", "f"}, fp, seed);
    REQUIRE(trace.size() == 5);  // 6 features -> 5 eliminations
    // the two informative features must survive the first three rounds
    bool ok = true;
    for (int s = 0; s < 3; ++s)
      if (trace[s].dropped_feature == 1 || trace[s].dropped_feature == 2) ok = false;
    if (ok) ++kept;
  }
  CHECK(kept >= 9);
}

TEST_CASE("two features give a single elimination step and a CSV trace") {
  Rng rng(12);
  auto t = random_task(rng, 80, 2);
  for (int i = 0; i < 80; ++i) t.y(i) = t.X(i, 0) + 0.1 * rng.normal();
  ForestParams fp;
  fp.n_trees = 10;
  const auto trace = rfe_rf(t.X, t.y, {"sig", "junk"}, fp, 5);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].dropped_name == "junk");
  std::ostringstream os;
  write_rfe_trace(trace, os);
  CHECK(os.str().find("step,dropped,validation_mae\n0,junk,") == 0);
}

TEST_CASE("input validation") {
  Eigen::MatrixXd X(0, 2);
  Eigen::VectorXd y(0);
  CHECK_THROWS_AS(fit_tree(X, y), EmptyData);
  Eigen::MatrixXd X1 = Eigen::MatrixXd::Random(10, 1);
  Eigen::VectorXd y1 = Eigen::VectorXd::Random(10);
  ForestParams fp;
  fp.n_trees = 0;
  CHECK_THROWS_AS(fit_forest(X1, y1, fp, 1), InvalidConfig);
  CHECK_THROWS_AS(rfe_rf(X1, y1, {"a"}, ForestParams{}, 1), InvalidConfig);
}
