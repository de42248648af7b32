#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bsheet/errors.hpp"
#include "bsheet/gaussian.hpp"
#include "oracles.hpp"

using namespace bsheet;

namespace {

CovMatrix cov2(double a, double b, double c) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, b, c;
  return CovMatrix(m);
}

}  // namespace

TEST(CovMatrix, RejectsAsymmetry) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(CovMatrix{m}, NotPSD);
}

TEST(CovMatrix, RejectsNegativeDiagonalAndIndefinite) {
  EXPECT_THROW(cov2(-1.0, 0.0, 1.0), NotPSD);
  EXPECT_THROW(cov2(1.0, 2.0, 1.0), NotPSD);
}

TEST(CovMatrix, AcceptsSemidefinite) { EXPECT_NO_THROW(cov2(1.0, 1.0, 1.0)); }

TEST(GaussianVector, MeanLengthMustMatch) {
  EXPECT_THROW(GaussianVector(Eigen::VectorXd::Zero(3), cov2(1, 0, 1)), DimMismatch);
}

TEST(Cholesky, IdentityHasNoJitter) {
  const auto f = cholesky(CovMatrix(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_EQ(f.jitter, 0.0);
  EXPECT_TRUE(f.lower.isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(Cholesky, HandFactor) {
  const auto f = cholesky(cov2(4, 2, 2));
  Eigen::MatrixXd want(2, 2);
  want << 2, 0, 1, 1;
  EXPECT_NEAR((f.lower - want).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR((f.lower * f.lower.transpose() - cov2(4, 2, 2).matrix()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Cholesky, RankOneNeedsJitter) {
  const auto f = cholesky(cov2(1, 1, 1));
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, 1e-8);
  EXPECT_THROW(cholesky(cov2(1, 1, 1), 0.0), NotPSD);
}

TEST(SampleMvn, ZeroCovarianceReturnsMean) {
  Rng rng(3);
  Eigen::VectorXd mean(2);
  mean << 1.5, -2.0;
  const GaussianVector g(mean, CovMatrix(Eigen::MatrixXd::Zero(2, 2)));
  EXPECT_EQ(sample_mvn(g, rng), mean);
}

TEST(SampleMvn, StandardNormalVariance) {
  Rng rng(11);
  const GaussianVector g(Eigen::VectorXd::Zero(1), CovMatrix(Eigen::MatrixXd::Identity(1, 1)));
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_mvn(g, rng)(0);
    s += x;
    s2 += x * x;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
}

TEST(SampleMvn, SeedDeterminism) {
  const GaussianVector g(Eigen::VectorXd::Zero(2), cov2(2, 1, 3));
  Rng a(42), b(42);
  EXPECT_EQ(sample_mvn(g, a), sample_mvn(g, b));
}

TEST(SampleMvn, CorrelationMatchesCovariance) {
  const GaussianVector g(Eigen::VectorXd::Zero(2), cov2(2, 1, 3));
  Rng rng(5);
  const int n = 100000;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto x = sample_mvn(g, rng);
    sxy += x(0) * x(1);
    sxx += x(0) * x(0);
    syy += x(1) * x(1);
  }
  // standard error of the sample covariance: sqrt((s11 s22 + s12^2)/n)
  EXPECT_NEAR(sxy / n, 1.0, 5.0 * std::sqrt((2.0 * 3.0 + 1.0) / n));
  EXPECT_NEAR(sxx / n, 2.0, 5.0 * std::sqrt(2.0 * 4.0 / n));
  EXPECT_NEAR(syy / n, 3.0, 5.0 * std::sqrt(2.0 * 9.0 / n));
}

TEST(Condition, ObserveNothingIsIdentity) {
  const GaussianVector g(Eigen::VectorXd::Ones(2), cov2(2, 1, 3));
  const auto c = condition_gaussian(g, {}, {});
  EXPECT_EQ(c.mean, g.mean);
  EXPECT_EQ(c.cov.matrix(), g.cov.matrix());
}

TEST(Condition, BivariateSchur) {
  for (double rho : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    const GaussianVector g(Eigen::VectorXd::Zero(2), cov2(1, rho, 1));
    const std::vector<std::size_t> idx{1};
    const std::vector<double> val{0.7};
    const auto c = condition_gaussian(g, idx, val);
    EXPECT_NEAR(c.mean(0), rho * 0.7, 1e-14);
    EXPECT_NEAR(c.cov(0, 0), 1.0 - rho * rho, 1e-14);
    EXPECT_EQ(c.mean(1), 0.7);
    EXPECT_EQ(c.cov(1, 1), 0.0);
  }
}

TEST(Condition, ObserveEverything) {
  const GaussianVector g(Eigen::VectorXd::Zero(2), cov2(2, 1, 3));
  const std::vector<std::size_t> idx{0, 1};
  const std::vector<double> val{0.3, -1.2};
  const auto c = condition_gaussian(g, idx, val);
  EXPECT_EQ(c.mean(0), 0.3);
  EXPECT_EQ(c.mean(1), -1.2);
  EXPECT_EQ(c.cov.matrix().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Condition, MatchesLuOracle) {
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 6;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    const Eigen::MatrixXd cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    const std::vector<std::size_t> idx{0, 2, 5};
    const std::vector<double> val{rng.normal(), rng.normal(), rng.normal()};
    const auto c = condition_gaussian(GaussianVector(Eigen::VectorXd::Zero(n), CovMatrix(cov)), idx, val);
    for (int target : {1, 3, 4})
      EXPECT_NEAR(c.mean(target), oracle::conditional_mean(cov, {0, 2, 5}, target, val), 1e-10);
  }
}

TEST(Condition, Idempotent) {
  const GaussianVector g(Eigen::VectorXd::Zero(3), CovMatrix(Eigen::MatrixXd::Identity(3, 3) * 2.0 +
                                                              Eigen::MatrixXd::Ones(3, 3)));
  const std::vector<std::size_t> idx{1};
  const std::vector<double> val{0.4};
  const auto once = condition_gaussian(g, idx, val);
  const auto twice = condition_gaussian(once, idx, val);
  EXPECT_NEAR((once.mean - twice.mean).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR((once.cov.matrix() - twice.cov.matrix()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Condition, Errors) {
  const GaussianVector g(Eigen::VectorXd::Zero(2), cov2(1, 0, 0));
  const std::vector<std::size_t> zero_var{1};
  const std::vector<double> v{1.0};
  EXPECT_THROW(condition_gaussian(g, zero_var, v), SingularObservation);
  const std::vector<std::size_t> out_of_range{4};
  EXPECT_THROW(condition_gaussian(g, out_of_range, v), IndexMismatch);
  const std::vector<std::size_t> repeated{0, 0};
  const std::vector<double> two{1.0, 1.0};
  EXPECT_THROW(condition_gaussian(g, repeated, two), IndexMismatch);
}
