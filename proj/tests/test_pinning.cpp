#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bsheet/errors.hpp"
#include "bsheet/pinning.hpp"
#include "oracles.hpp"

using namespace bsheet;

namespace {

double weight_of(const CornerWeightSet& w, const ParamPoint& corner) {
  for (std::size_t i = 0; i < w.corners.size(); ++i)
    if (w.corners[i] == corner) return w.weights[i];
  ADD_FAILURE() << "corner not found";
  return -1.0;
}

}  // namespace

// Boxes must satisfy 0 < lo, so the unit-box weight examples are checked
// on the translate [1, 2]^N; the weights only see t - lo.
TEST(Box, RejectsZeroLowerBound) { EXPECT_THROW(Box({0.0}, {1.0}), DomainError); }

TEST(CornerWeights, OneDimensionalMidpoint) {
  const auto w = corner_weights(Box({1.0}, {2.0}), {1.5}, CornerMode::full);
  ASSERT_EQ(w.weights.size(), 2u);
  EXPECT_EQ(w.weights[0], 0.5);
  EXPECT_EQ(w.weights[1], 0.5);
}

TEST(CornerWeights, TwoDimensionalFull) {
  const Box r({1.0, 1.0}, {2.0, 2.0});
  const auto w = corner_weights(r, {1.25, 1.75}, CornerMode::full);
  EXPECT_DOUBLE_EQ(weight_of(w, {1.0, 1.0}), 0.1875);
  EXPECT_DOUBLE_EQ(weight_of(w, {2.0, 1.0}), 0.0625);
  EXPECT_DOUBLE_EQ(weight_of(w, {1.0, 2.0}), 0.5625);
  EXPECT_DOUBLE_EQ(weight_of(w, {2.0, 2.0}), 0.1875);
}

TEST(CornerWeights, TwoDimensionalLowerFace) {
  const Box r({1.0, 1.0}, {2.0, 2.0});
  for (double tn : {1.0, 1.3, 2.0}) {
    const auto w = corner_weights(r, {1.25, tn}, CornerMode::lower_face);
    ASSERT_EQ(w.corners.size(), 2u);
    EXPECT_DOUBLE_EQ(weight_of(w, {1.0, 1.0}), 0.75);
    EXPECT_DOUBLE_EQ(weight_of(w, {2.0, 1.0}), 0.25);
  }
}

TEST(CornerWeights, ConvexAndCounted) {
  Rng rng(1);
  for (std::size_t N = 1; N <= 5; ++N) {
    std::vector<double> lo(N), hi(N), t(N);
    for (std::size_t l = 0; l < N; ++l) {
      lo[l] = rng.uniform(0.1, 1.0);
      hi[l] = lo[l] + rng.uniform(0.1, 1.0);
      t[l] = rng.uniform(lo[l], hi[l]);
    }
    const Box r(lo, hi);
    for (auto mode : {CornerMode::full, CornerMode::lower_face}) {
      const auto w = corner_weights(r, ParamPoint(t), mode);
      EXPECT_EQ(w.weights.size(), corner_count(N, mode));
      double sum = 0.0;
      for (double x : w.weights) {
        EXPECT_GE(x, 0.0);
        sum += x;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(CornerWeights, OutOfBox) {
  EXPECT_THROW(corner_weights(Box({1.0}, {2.0}), {2.5}, CornerMode::full), OutOfBox);
}

TEST(BarB, ConstantCornersGiveConstant) {
  const Box r({0.5, 1.0, 2.0}, {1.0, 1.5, 3.0});
  std::vector<double> vals;
  for (int i = 0; i < 8; ++i) vals.insert(vals.end(), {0.3, -1.1});
  const auto out = bar_B(r, {0.7, 1.2, 2.9}, vals, 2);
  EXPECT_NEAR(out[0], 0.3, 1e-15);
  EXPECT_NEAR(out[1], -1.1, 1e-15);
}

TEST(BarB, CornerGivesCornerValueExactly) {
  const Box r({0.5, 1.0}, {1.0, 1.5});
  const std::vector<double> vals{0.1, 0.2, 0.3, 0.4};
  for (std::size_t g = 0; g < 4; ++g) EXPECT_EQ(bar_B(r, box_corner(r, g, CornerMode::full), vals, 1)[0], vals[g]);
}

TEST(BarB, OneDimensionalInterpolation) {
  const double a = 0.8, b = -0.4;
  const std::vector<double> vals{a, b};
  EXPECT_DOUBLE_EQ(bar_B(Box({1.0}, {2.0}), {1.25}, vals, 1)[0], 0.75 * a + 0.25 * b);
}

TEST(BarB, SizeMismatch) {
  const std::vector<double> vals{1.0, 2.0, 3.0};
  EXPECT_THROW(bar_B(Box({1.0}, {2.0}), {1.5}, vals, 1), IndexMismatch);
}

TEST(BarB, MatchesConditioningOnCorners) {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t N = 1 + static_cast<std::size_t>(rep % 4);
    std::vector<double> lo(N), hi(N), t(N);
    for (std::size_t l = 0; l < N; ++l) {
      lo[l] = rng.uniform(0.2, 1.5);
      hi[l] = lo[l] + rng.uniform(0.2, 1.0);
      t[l] = rng.uniform(lo[l], hi[l]);
    }
    const Box r(lo, hi);
    const std::size_t n = std::size_t{1} << N;
    std::vector<std::vector<double>> pts;
    for (std::size_t g = 0; g < n; ++g) pts.push_back(box_corner(r, g, CornerMode::full).coords());
    pts.push_back(t);
    Eigen::MatrixXd cov(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j)
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = oracle::min_cov(pts[i], pts[j]);
    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.normal();
    std::vector<int> obs(n);
    for (std::size_t g = 0; g < n; ++g) obs[g] = static_cast<int>(g);
    EXPECT_NEAR(bar_B(r, ParamPoint(t), vals, 1)[0], oracle::conditional_mean(cov, obs, static_cast<int>(n), vals),
                1e-9);
  }
}

TEST(TildeB, IndependentOfLastCoordinate) {
  const Box r({0.5, 1.0, 1.0}, {1.0, 2.0, 1.5});
  const std::vector<double> face{0.1, -0.3, 0.7, 1.2};
  const double first = tilde_B(r, {0.6, 1.3, 1.0}, face, 1)[0];
  for (double tn : {1.1, 1.25, 1.5}) EXPECT_EQ(tilde_B(r, {0.6, 1.3, tn}, face, 1)[0], first);
}

TEST(TildeB, ConstantFace) {
  const std::vector<double> face{2.5, 2.5};
  EXPECT_NEAR(tilde_B(Box({1.0, 1.0}, {2.0, 2.0}), {1.7, 1.9}, face, 1)[0], 2.5, 1e-15);
}

TEST(TildeB, TwoDimensionalWeights) {
  const double x = 0.9, y = -0.2;
  const std::vector<double> face{y, x};  // corners (lo, lo_N), (hi, lo_N)
  EXPECT_DOUBLE_EQ(tilde_B(Box({1.0, 1.0}, {2.0, 2.0}), {1.25, 1.6}, face, 1)[0], 0.25 * x + 0.75 * y);
}

TEST(ProjectionIdentity, Examples) {
  EXPECT_EQ(projection_identity_residual(2.0, 0.5, 1.0, 0.75), 0.0);
  for (double t : {0.5, 0.6, 0.99, 1.0}) EXPECT_LE(projection_identity_residual(0.2, 0.5, 1.0, t), 1e-16);
  EXPECT_LE(projection_identity_residual(1.0, 0.5, 1.0, 0.7), 1e-16);
  EXPECT_THROW(projection_identity_residual(0.7, 0.5, 1.0, 0.6), DomainError);
}

TEST(Orthogonality, Examples) {
  EXPECT_LE(orthogonality_residual(Box({1.0}, {2.0}), {1.5}, {3.0}, CornerMode::full), 1e-15);
  const Box r2({1.0, 1.0}, {2.0, 2.0});
  EXPECT_LE(orthogonality_residual(r2, {1.5, 1.5}, {0.5, 3.0}, CornerMode::full), 1e-15);
  EXPECT_LE(orthogonality_residual(r2, {1.3, 1.8}, {2.5, 1.0}, CornerMode::lower_face), 1e-15);
}

TEST(Orthogonality, RandomTriples) {
  Rng rng(5);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t N = 1 + static_cast<std::size_t>(rep % 5);
    std::vector<double> lo(N), hi(N), t(N), s(N), u(N);
    for (std::size_t l = 0; l < N; ++l) {
      lo[l] = rng.uniform(0.1, 1.2);
      hi[l] = lo[l] + rng.uniform(0.2, 0.8);
      t[l] = rng.uniform(lo[l], hi[l]);
      s[l] = rng.uniform() < 0.5 ? rng.uniform(0.0, lo[l]) : rng.uniform(hi[l], 3.0);
      u[l] = s[l];
    }
    u[N - 1] = rng.uniform(0.0, lo[N - 1]);
    const Box r(lo, hi);
    EXPECT_LE(orthogonality_residual(r, ParamPoint(t), ParamPoint(s), CornerMode::full), 1e-12);
    EXPECT_LE(orthogonality_residual(r, ParamPoint(t), ParamPoint(u), CornerMode::lower_face), 1e-12);
  }
}

TEST(Orthogonality, RejectsInteriorS) {
  const Box r({1.0, 1.0}, {2.0, 2.0});
  EXPECT_THROW(orthogonality_residual(r, {1.5, 1.5}, {1.5, 3.0}, CornerMode::full), SNotAdmissible);
  EXPECT_THROW(orthogonality_residual(r, {1.5, 1.5}, {3.0, 1.2}, CornerMode::lower_face), SNotAdmissible);
}
