#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <sstream>

#include "epfw/lasso.hpp"
#include "epfw/rng.hpp"

using namespace epfw;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Problem random_problem(Rng& rng, int n, int p, double noise) {
  Problem pr;
  pr.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) pr.X(i, j) = rng.normal();
  pr.y.resize(n);
  for (int i = 0; i < n; ++i) pr.y(i) = noise * rng.normal();
  return pr;
}

// standardized-scale residual, for KKT checks
Eigen::VectorXd std_residual(const Problem& pr, const LassoFit& fit) {
  Eigen::VectorXd r = pr.y.array() - pr.y.mean();
  for (Eigen::Index j = 0; j < pr.X.cols(); ++j) {
    const Eigen::VectorXd xs =
        (pr.X.col(j).array() - fit.col_mean(j)) / fit.col_sd(j);
    r -= xs * (fit.coef(j) * fit.col_sd(j));
  }
  return r;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(soft_threshold(-3.0, 1.0) == doctest::Approx(-2.0));
  CHECK(soft_threshold(0.5, 1.0) == doctest::Approx(0.0));
  CHECK(soft_threshold(-0.5, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("lambda = 0 reproduces ordinary least squares") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto pr = random_problem(rng, 60, 5, 1.0);
    for (int i = 0; i < 60; ++i)
      pr.y(i) += 2.0 + 1.5 * pr.X(i, 0) - 0.7 * pr.X(i, 3);

    const auto fit = lasso_fit(pr.X, pr.y, 0.0, 1e-10, 50000);

    // normal-equations oracle on [1 X]
    Eigen::MatrixXd Z(60, 6);
    Z.col(0).setOnes();
    Z.rightCols(5) = pr.X;
    const Eigen::VectorXd theta =
        (Z.transpose() * Z).ldlt().solve(Z.transpose() * pr.y);

    REQUIRE(fit.converged);
    CHECK(fit.intercept == doctest::Approx(theta(0)).epsilon(1e-6));
    for (int j = 0; j < 5; ++j)
      CHECK(fit.coef(j) == doctest::Approx(theta(j + 1)).epsilon(1e-6));
  }
}

TEST_CASE("lambda_max zeroes every coefficient and is tight") {
  Rng rng(7);
  auto pr = random_problem(rng, 80, 8, 0.5);
  for (int i = 0; i < 80; ++i) pr.y(i) += 3.0 * pr.X(i, 2);

  const double lmax = lambda_max(pr.X, pr.y);
  const auto at = lasso_fit(pr.X, pr.y, lmax);
  CHECK(at.coef.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(at.intercept == doctest::Approx(pr.y.mean()));

  const auto below = lasso_fit(pr.X, pr.y, 0.95 * lmax);
  CHECK(below.coef.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("solutions satisfy the subgradient optimality conditions") {
  Rng rng(99);
  auto pr = random_problem(rng, 120, 12, 1.0);
  for (int i = 0; i < 120; ++i)
    pr.y(i) += 4.0 * pr.X(i, 1) - 2.5 * pr.X(i, 6) + 1.0 * pr.X(i, 10);

  for (const double frac : {0.5, 0.1, 0.01}) {
    const double lambda = frac * lambda_max(pr.X, pr.y);
    const auto fit = lasso_fit(pr.X, pr.y, lambda, 1e-10, 50000);
    REQUIRE(fit.converged);
    const Eigen::VectorXd r = std_residual(pr, fit);
    for (Eigen::Index j = 0; j < 12; ++j) {
      const Eigen::VectorXd xs =
          (pr.X.col(j).array() - fit.col_mean(j)) / fit.col_sd(j);
      const double grad = xs.dot(r);
      if (fit.coef(j) == 0.0) {
        CHECK(std::abs(grad) <= lambda * (1.0 + 1e-6) + 1e-6);
      } else {
        CHECK(grad == doctest::Approx(lambda * (fit.coef(j) > 0 ? 1.0 : -1.0))
                          .epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("sparse support is recovered under light noise") {
  Rng rng(12);
  auto pr = random_problem(rng, 200, 20, 0.1);
  for (int i = 0; i < 200; ++i)
    pr.y(i) += 5.0 * pr.X(i, 0) - 4.0 * pr.X(i, 7) + 3.0 * pr.X(i, 15);

  const double lambda = 0.05 * lambda_max(pr.X, pr.y);
  const auto fit = lasso_fit(pr.X, pr.y, lambda);
  CHECK(std::abs(fit.coef(0)) > 1.0);
  CHECK(std::abs(fit.coef(7)) > 1.0);
  CHECK(std::abs(fit.coef(15)) > 1.0);
  int spurious = 0;
  for (int j = 0; j < 20; ++j)
    if (j != 0 && j != 7 && j != 15 && std::abs(fit.coef(j)) > 0.1) ++spurious;
  CHECK(spurious == 0);
}

TEST_CASE("constant columns are flagged degenerate and get zero weight") {
  Rng rng(4);
  auto pr = random_problem(rng, 50, 4, 0.2);
  pr.X.col(2).setConstant(7.0);
  for (int i = 0; i < 50; ++i) pr.y(i) += 2.0 * pr.X(i, 0);

  const auto fit = lasso_fit(pr.X, pr.y, 0.01);
  CHECK(fit.degenerate[2] == 1);
  CHECK(fit.coef(2) == 0.0);
  CHECK(std::abs(fit.coef(0)) > 1.0);
}

TEST_CASE("lambda grid is descending and log-spaced") {
  Rng rng(3);
  auto pr = random_problem(rng, 40, 3, 1.0);
  pr.y += pr.X.col(1);
  const auto grid = lambda_grid(pr.X, pr.y);
  REQUIRE(grid.size() == 20);
  CHECK(grid.front() == doctest::Approx(lambda_max(pr.X, pr.y)));
  CHECK(grid.back() == doctest::Approx(1e-4 * grid.front()));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] < grid[i - 1]);
    if (i >= 2)  // constant ratio
      CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[i - 1] / grid[i - 2]));
  }
}

TEST_CASE("cross validation picks a sensible lambda and prefers larger on ties") {
  Rng rng(21);
  auto pr = random_problem(rng, 150, 10, 0.5);
  for (int i = 0; i < 150; ++i) pr.y(i) += 3.0 * pr.X(i, 2) - 2.0 * pr.X(i, 5);

  const auto grid = lambda_grid(pr.X, pr.y);
  const double best = cross_validate_lambda(pr.X, pr.y, 5, grid);
  CHECK(std::count(grid.begin(), grid.end(), best) == 1);
  // strong signal, light noise: heavy shrinkage should not win
  CHECK(best < 0.5 * grid.front());

  // duplicated grid values must not change the answer (tie -> larger first)
  auto doubled = grid;
  doubled.insert(doubled.end(), grid.begin(), grid.end());
  CHECK(cross_validate_lambda(pr.X, pr.y, 5, doubled) == best);
}

TEST_CASE("prediction applies coefficients on the original scale") {
  Rng rng(8);
  auto pr = random_problem(rng, 60, 4, 0.0);
  for (int i = 0; i < 60; ++i) pr.y(i) = 1.0 + 2.0 * pr.X(i, 1);
  const auto fit = lasso_fit(pr.X, pr.y, 1e-8, 1e-12, 100000);
  for (int i = 0; i < 60; ++i)
    CHECK(fit.predict(pr.X.row(i)) == doctest::Approx(pr.y(i)).epsilon(1e-5));
}

TEST_CASE("input validation") {
  Eigen::MatrixXd X(1, 2);
  Eigen::VectorXd y(1);
  CHECK_THROWS_AS(lasso_fit(X, y, 0.1), TooFewRows);
  Eigen::MatrixXd X2 = Eigen::MatrixXd::Random(10, 2);
  Eigen::VectorXd y2 = Eigen::VectorXd::Random(10);
  CHECK_THROWS_AS(lasso_fit(X2, y2, -1.0), InvalidConfig);
  CHECK_THROWS_AS(cross_validate_lambda(X2, y2, 1, {0.1}), InvalidConfig);
  CHECK_THROWS_AS(cross_validate_lambda(X2, y2, 6, {0.1}), TooFewRows);
}

TEST_CASE("coefficient dump lists intercept and named columns") {
  Rng rng(2);
  auto pr = random_problem(rng, 30, 2, 0.1);
  const auto fit = lasso_fit(pr.X, pr.y, 0.5);
  std::ostringstream os;
  write_coefficients(fit, {"a", "b"}, os);
  const std::string s = os.str();
  CHECK(s.find("intercept ") == 0);
  CHECK(s.find("\na ") != std::string::npos);
  CHECK(s.find("\nb ") != std::string::npos);
}
