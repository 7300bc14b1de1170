#ifndef EPFW_FOREST_HPP
#define EPFW_FOREST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epfw/core.hpp"
#include "epfw/rng.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(EmptyData);

struct TreeParams {
  int max_depth = 12;        // depth 0 = a single leaf
  int min_samples_leaf = 2;
  /// Features examined per split; 0 means "all" for single trees and
  /// ceil(p/3) inside a forest.
  int features_per_split = 0;
};

/// Binary regression tree stored as a flat node array. Leaves carry the mean
/// of their training targets; internal nodes also record the variance
/// reduction their split achieved (for importances).
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;      // leaf mean (mean of the node's targets)
    double gain = 0.0;       // total squared-error reduction of the split
  };
  std::vector<Node> nodes;

  double predict(const Eigen::VectorXd& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

namespace forest_detail {

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exhaustive best split over `features` by squared-error reduction.
/// Thresholds are midpoints between adjacent distinct sorted values.
inline BestSplit find_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<int>& rows,
                            const std::vector<int>& features, int min_leaf) {
  BestSplit best;
  const int n = static_cast<int>(rows.size());
  double total = 0.0, total_sq = 0.0;
  for (int r : rows) {
    total += y(r);
    total_sq += y(r) * y(r);
  }
  const double sse_parent = total_sq - total * total / n;

  std::vector<int> order(rows);
  for (int f : features) {
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return X(a, f) < X(b, f); });
    double left_sum = 0.0, left_sq = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      const int r = order[i];
      left_sum += y(r);
      left_sq += y(r) * y(r);
      const int nl = i + 1, nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double lo = X(order[i], f), hi = X(order[i + 1], f);
      if (lo == hi) continue;  // no separating threshold here
      const double right_sum = total - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse = (left_sq - left_sum * left_sum / nl) +
                         (right_sq - right_sum * right_sum / nr);
      const double gain = sse_parent - sse;
      if (gain > best.gain + 1e-12) {
        best.feature = f;
        best.threshold = 0.5 * (lo + hi);
        best.gain = gain;
      }
    }
  }
  return best;
}

inline int grow(RegressionTree& tree, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, std::vector<int> rows, int depth,
                const TreeParams& params, int subsample, Rng* rng) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  double mean = 0.0;
  for (int r : rows) mean += y(r);
  mean /= static_cast<double>(rows.size());
  tree.nodes[id].value = mean;

  if (depth >= params.max_depth ||
      static_cast<int>(rows.size()) < 2 * params.min_samples_leaf)
    return id;

  const int p = static_cast<int>(X.cols());
  std::vector<int> features(p);
  std::iota(features.begin(), features.end(), 0);
  if (rng != nullptr && subsample < p) {
    rng->shuffle(features);
    features.resize(subsample);
    std::sort(features.begin(), features.end());
  }

  const auto split = find_split(X, y, rows, features, params.min_samples_leaf);
  if (split.feature < 0) return id;

  std::vector<int> left, right;
  for (int r : rows)
    (X(r, split.feature) <= split.threshold ? left : right).push_back(r);
  if (left.empty() || right.empty()) return id;

  tree.nodes[id].feature = split.feature;
  tree.nodes[id].threshold = split.threshold;
  tree.nodes[id].gain = split.gain;
  tree.nodes[id].left = grow(tree, X, y, std::move(left), depth + 1, params, subsample, rng);
  tree.nodes[id].right = grow(tree, X, y, std::move(right), depth + 1, params, subsample, rng);
  return id;
}

}  // namespace forest_detail

inline RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const TreeParams& params = {}) {
  if (X.rows() < 1 || X.rows() != y.size())
    throw EmptyData("tree: need >= 1 row with matching target");
  RegressionTree tree;
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  forest_detail::grow(tree, X, y, std::move(rows), 0, params,
                      static_cast<int>(X.cols()), nullptr);
  return tree;
}

struct ForestParams {
  int n_trees = 50;
  TreeParams tree;
  bool bootstrap = true;
};

/// Bagged regression forest: B trees on seeded bootstrap resamples with
/// per-split feature subsampling. Prediction is the exact arithmetic mean of
/// the member trees.
struct Forest {
  std::vector<RegressionTree> trees;
  std::vector<std::vector<int>> in_bag;  // rows used by each tree
  int n_features = 0;

  double predict(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }
};

inline Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const ForestParams& params, std::uint64_t seed) {
  if (X.rows() < 1 || X.rows() != y.size())
    throw EmptyData("forest: need >= 1 row with matching target");
  if (params.n_trees < 1) throw InvalidConfig("forest: need >= 1 tree");

  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int subsample = params.tree.features_per_split > 0
                            ? std::min(params.tree.features_per_split, p)
                            : (p + 2) / 3;  // ceil(p/3)
  Rng base(seed);
  Forest forest;
  forest.n_features = p;
  for (int b = 0; b < params.n_trees; ++b) {
    Rng rng = base.fork(static_cast<std::uint64_t>(b));
    std::vector<int> rows;
    if (params.bootstrap) {
      for (std::size_t r : rng.bootstrap_indices(static_cast<std::size_t>(n)))
        rows.push_back(static_cast<int>(r));
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.in_bag.push_back(rows);
    RegressionTree tree;
    forest_detail::grow(tree, X, y, std::move(rows), 0, params.tree, subsample, &rng);
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

/// Out-of-bag mean squared error; rows that every tree saw are skipped.
inline double oob_error(const Forest& forest, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  std::vector<std::vector<char>> seen(forest.trees.size(),
                                      std::vector<char>(n, 0));
  for (std::size_t b = 0; b < forest.trees.size(); ++b)
    for (int r : forest.in_bag[b]) seen[b][r] = 1;
  double sse = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    int k = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b)
      if (!seen[b][i]) {
        s += forest.trees[b].predict(X.row(i));
        ++k;
      }
    if (k == 0) continue;
    const double e = y(i) - s / k;
    sse += e * e;
    ++counted;
  }
  return counted == 0 ? std::numeric_limits<double>::quiet_NaN() : sse / counted;
}

/// Impurity-decrease importances, normalized to sum 1 when any split exists.
/// Sorted descending; ties broken by feature index.
inline std::vector<std::pair<int, double>> feature_importance(const Forest& forest) {
  std::vector<double> raw(static_cast<std::size_t>(forest.n_features), 0.0);
  for (const auto& t : forest.trees)
    for (const auto& node : t.nodes)
      if (node.feature >= 0) raw[static_cast<std::size_t>(node.feature)] += node.gain;
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::vector<std::pair<int, double>> out;
  for (std::size_t j = 0; j < raw.size(); ++j)
    out.emplace_back(static_cast<int>(j), total > 0.0 ? raw[j] / total : 0.0);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

/// One step of the elimination trace: the feature dropped after this round
/// and the held-out MAE of the forest trained on the surviving features.
struct RfeStep {
  int step = 0;
  int dropped_feature = -1;
  std::string dropped_name;
  double validation_mae = 0.0;
  std::vector<int> surviving;  // features in play during this round
};

/// Recursive feature elimination driven by forest importances: train on the
/// survivors, score on a chronological holdout, drop the least important,
/// repeat until one feature remains. Final ranking = reverse elimination
/// order (the last survivor ranks first).
inline std::vector<RfeStep> rfe_rf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const std::vector<std::string>& names,
                                   const ForestParams& params, std::uint64_t seed,
                                   double holdout_frac = 0.25) {
  const int p = static_cast<int>(X.cols());
  if (p < 2) throw InvalidConfig("rfe: need >= 2 features");
  if (names.size() != static_cast<std::size_t>(p))
    throw DimensionMismatch("rfe: name count != feature count");
  const int n = static_cast<int>(X.rows());
  const int n_hold = std::max(1, static_cast<int>(n * holdout_frac));
  const int n_train = n - n_hold;
  if (n_train < 2) throw EmptyData("rfe: too few rows for a holdout split");

  std::vector<int> alive(p);
  std::iota(alive.begin(), alive.end(), 0);
  std::vector<RfeStep> trace;
  int step = 0;
  while (alive.size() >= 2) {
    Eigen::MatrixXd Xs(n, static_cast<Eigen::Index>(alive.size()));
    for (std::size_t j = 0; j < alive.size(); ++j)
      Xs.col(static_cast<Eigen::Index>(j)) = X.col(alive[j]);

    const auto forest = fit_forest(Xs.topRows(n_train), y.head(n_train), params,
                                   seed + static_cast<std::uint64_t>(step));
    double mae = 0.0;
    for (int i = n_train; i < n; ++i)
      mae += std::abs(y(i) - forest.predict(Xs.row(i)));
    mae /= n_hold;

    const auto imp = feature_importance(forest);
    const int local_drop = imp.back().first;  // least important survivor

    RfeStep s;
    s.step = step++;
    s.dropped_feature = alive[static_cast<std::size_t>(local_drop)];
    s.dropped_name = names[static_cast<std::size_t>(s.dropped_feature)];
    s.validation_mae = mae;
    s.surviving = alive;
    trace.push_back(std::move(s));

    alive.erase(alive.begin() + local_drop);
  }
  return trace;
}

/// Trace as CSV: step, dropped feature, validation MAE.
inline void write_rfe_trace(const std::vector<RfeStep>& trace, std::ostream& out) {
  out << "step,dropped,validation_mae\n";
  for (const auto& s : trace)
    out << s.step << ',' << s.dropped_name << ',' << s.validation_mae << '\n';
}

}  // namespace epfw

#endif  // EPFW_FOREST_HPP
