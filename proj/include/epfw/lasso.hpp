#ifndef EPFW_LASSO_HPP
#define EPFW_LASSO_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "epfw/core.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(TooFewRows);

/// Soft-thresholding operator, the closed-form scalar LASSO solution.
inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// L1-penalized least squares fit. The minimized objective on standardized
/// data is (1/2)||y - X b||^2 + lambda * ||b||_1, so the all-zero solution
/// is exact for lambda >= max_j |x_j' y_centered|.
struct LassoFit {
  Eigen::VectorXd coef;  // original (unstandardized) scale
  double intercept = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd col_mean, col_sd;  // scaling metadata
  int iterations = 0;
  double objective = 0.0;  // final value of the standardized objective
  bool converged = true;
  std::vector<char> degenerate;  // zero-variance columns, coefficient forced 0

  double predict(const Eigen::VectorXd& x) const {
    return intercept + coef.dot(x);
  }
};

/// Smallest lambda with an all-zero solution (computed on z-scored columns
/// and centered target, matching lasso_fit's internal scaling).
inline double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const Eigen::VectorXd mean = X.colwise().mean();
  const double ymean = y.mean();
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd xc = X.col(j).array() - mean(j);
    const double sd = std::sqrt(xc.squaredNorm() / n);
    if (sd <= 0.0) continue;
    lmax = std::max(lmax, std::abs(xc.dot((y.array() - ymean).matrix()) / sd));
  }
  return lmax;
}

namespace lasso_detail {

struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd mean, sd;
  double ymean = 0.0;
  std::vector<char> degenerate;
};

inline Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Standardized s;
  const Eigen::Index n = X.rows(), p = X.cols();
  s.mean = X.colwise().mean();
  s.sd.resize(p);
  s.X.resize(n, p);
  s.degenerate.assign(static_cast<std::size_t>(p), 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd xc = X.col(j).array() - s.mean(j);
    double sd = std::sqrt(xc.squaredNorm() / n);
    if (sd <= 0.0) {
      s.degenerate[static_cast<std::size_t>(j)] = 1;
      sd = 1.0;
    }
    s.sd(j) = sd;
    s.X.col(j) = xc / sd;
  }
  s.ymean = y.mean();
  s.y = y.array() - s.ymean;
  return s;
}

/// Cyclic coordinate descent on standardized data, warm-startable.
inline void descend(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const std::vector<char>& degenerate, double lambda,
                    double tol, int max_iter, Eigen::VectorXd& beta,
                    int& iters, bool& converged, double& objective) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const double colnorm = static_cast<double>(n);  // z-scored columns: x'x = n
  Eigen::VectorXd r = y - X * beta;
  converged = false;
  iters = 0;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (degenerate[static_cast<std::size_t>(j)]) continue;
      const double old = beta(j);
      const double z = X.col(j).dot(r) + colnorm * old;
      const double nb = soft_threshold(z, lambda) / colnorm;
      if (nb != old) {
        r -= X.col(j) * (nb - old);
        beta(j) = nb;
        max_delta = std::max(max_delta, std::abs(nb - old));
      }
    }
    ++iters;
    if (max_delta < tol) {
      converged = true;
      break;
    }
  }
  objective = 0.5 * r.squaredNorm() + lambda * beta.lpNorm<1>();
}

}  // namespace lasso_detail

inline LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, double tol = 1e-7, int max_iter = 2000) {
  if (X.rows() != y.size() || X.rows() < 2)
    throw TooFewRows("lasso: need rows(X) == len(y) >= 2");
  if (lambda < 0.0 || tol <= 0.0) throw InvalidConfig("lasso: bad lambda/tol");

  const auto s = lasso_detail::standardize(X, y);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  LassoFit fit;
  lasso_detail::descend(s.X, s.y, s.degenerate, lambda, tol, max_iter, beta,
                        fit.iterations, fit.converged, fit.objective);

  fit.lambda = lambda;
  fit.col_mean = s.mean;
  fit.col_sd = s.sd;
  fit.degenerate = s.degenerate;
  fit.coef.resize(X.cols());
  double icept = s.ymean;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    fit.coef(j) = beta(j) / s.sd(j);
    icept -= fit.coef(j) * s.mean(j);
  }
  fit.intercept = icept;
  return fit;
}

/// Descending log-spaced lambda grid from lambda_max down to ratio*lambda_max.
inline std::vector<double> lambda_grid(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& y, int n_points = 20,
                                       double ratio = 1e-4) {
  const double lmax = lambda_max(X, y);
  std::vector<double> grid;
  if (lmax <= 0.0) return {0.0};
  for (int i = 0; i < n_points; ++i) {
    const double f = n_points == 1 ? 1.0
                                   : std::pow(ratio, static_cast<double>(i) /
                                                         (n_points - 1));
    grid.push_back(lmax * f);
  }
  return grid;
}

/// k-fold cross validation over a lambda grid with contiguous time-block
/// folds (no shuffling). Returns the grid value minimizing mean out-of-fold
/// squared error; ties go to the larger lambda.
inline double cross_validate_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    int k, std::vector<double> grid,
                                    double tol = 1e-6, int max_iter = 1000) {
  if (grid.empty()) throw InvalidConfig("cv: empty lambda grid");
  if (k < 2) throw InvalidConfig("cv: need k >= 2");
  const Eigen::Index n = X.rows();
  if (n < 2 * k) throw TooFewRows("cv: too few rows for " + std::to_string(k) + " folds");
  std::sort(grid.begin(), grid.end(), std::greater<double>());

  std::vector<double> mse(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    const Eigen::Index lo = n * f / k, hi = n * (f + 1) / k;
    const Eigen::Index n_test = hi - lo, n_train = n - n_test;
    Eigen::MatrixXd Xtr(n_train, X.cols());
    Eigen::VectorXd ytr(n_train);
    Xtr.topRows(lo) = X.topRows(lo);
    ytr.head(lo) = y.head(lo);
    Xtr.bottomRows(n - hi) = X.bottomRows(n - hi);
    ytr.tail(n - hi) = y.tail(n - hi);

    // warm-started path along the descending grid
    const auto s = lasso_detail::standardize(Xtr, ytr);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      int iters;
      bool conv;
      double obj;
      lasso_detail::descend(s.X, s.y, s.degenerate, grid[g], tol, max_iter,
                            beta, iters, conv, obj);
      for (Eigen::Index i = lo; i < hi; ++i) {
        double pred = s.ymean;
        for (Eigen::Index j = 0; j < X.cols(); ++j)
          pred += beta(j) / s.sd(j) * (X(i, j) - s.mean(j));
        const double e = y(i) - pred;
        mse[g] += e * e;
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (mse[g] < mse[best]) best = g;
  return grid[best];
}

/// Audit dump: one "column_name coefficient" line per column plus intercept.
inline void write_coefficients(const LassoFit& fit,
                               const std::vector<std::string>& names,
                               std::ostream& out) {
  out << "intercept " << fit.intercept << '\n';
  for (Eigen::Index j = 0; j < fit.coef.size(); ++j)
    out << names[static_cast<std::size_t>(j)] << ' ' << fit.coef(j) << '\n';
}

}  // namespace epfw

#endif  // EPFW_LASSO_HPP
