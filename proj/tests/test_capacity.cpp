#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include <fftw3.h>

#include "bsheet/capacity.hpp"
#include "bsheet/errors.hpp"
#include "bsheet/field_io.hpp"
#include "oracles.hpp"

using namespace bsheet;

namespace {

PointCloud cloud(int dim, std::vector<double> atoms, double h) {
  PointCloud c;
  c.dim = dim;
  c.atoms = std::move(atoms);
  c.h = h;
  return c;
}

// Riesz kernel K on an m^3 cell grid applied by zero-padded FFT convolution
// over a (2m)^3 torus. The diagonal is the cell self-energy `self`.
class GridKernel {
 public:
  GridKernel(int m, double h, double beta, double self) : m_(m), p_(2 * m) {
    const std::size_t real = static_cast<std::size_t>(p_) * p_ * p_;
    const std::size_t half = static_cast<std::size_t>(p_) * p_ * (p_ / 2 + 1);
    buf_ = fftw_alloc_real(real);
    spec_ = fftw_alloc_complex(half);
    kernel_.resize(half);
    fwd_ = fftw_plan_dft_r2c_3d(p_, p_, p_, buf_, spec_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_3d(p_, p_, p_, spec_, buf_, FFTW_ESTIMATE);
    for (int a = 0; a < p_; ++a)
      for (int b = 0; b < p_; ++b)
        for (int c = 0; c < p_; ++c) {
          const int x = a < m ? a : a - p_, y = b < m ? b : b - p_, z = c < m ? c : c - p_;
          const double r = h * std::sqrt(static_cast<double>(x * x + y * y + z * z));
          buf_[(static_cast<std::size_t>(a) * p_ + b) * p_ + c] = (x == 0 && y == 0 && z == 0) ? self : std::pow(r, -beta);
        }
    fftw_execute(fwd_);
    for (std::size_t i = 0; i < half; ++i) kernel_[i] = {spec_[i][0], spec_[i][1]};
  }
  ~GridKernel() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
    fftw_free(spec_);
  }
  GridKernel(const GridKernel&) = delete;
  GridKernel& operator=(const GridKernel&) = delete;

  Eigen::VectorXd apply(const Eigen::VectorXd& w) {
    const std::size_t real = static_cast<std::size_t>(p_) * p_ * p_;
    std::fill(buf_, buf_ + real, 0.0);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c)
          buf_[(static_cast<std::size_t>(a) * p_ + b) * p_ + c] = w((a * m_ + b) * m_ + c);
    fftw_execute(fwd_);
    for (std::size_t i = 0; i < kernel_.size(); ++i) {
      const std::complex<double> z = std::complex<double>(spec_[i][0], spec_[i][1]) * kernel_[i];
      spec_[i][0] = z.real();
      spec_[i][1] = z.imag();
    }
    fftw_execute(inv_);
    Eigen::VectorXd out(w.size());
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c)
          out((a * m_ + b) * m_ + c) = buf_[(static_cast<std::size_t>(a) * p_ + b) * p_ + c] / static_cast<double>(real);
    return out;
  }

 private:
  int m_, p_;
  double* buf_;
  fftw_complex* spec_;
  std::vector<std::complex<double>> kernel_;
  fftw_plan fwd_, inv_;
};

}  // namespace

TEST(Kappa, Examples) {
  const std::vector<double> half{0.3, 0.4};
  EXPECT_DOUBLE_EQ(kappa(KernelOrder{2.0}, half), 4.0);
  const std::vector<double> one{1.0, 0.0, 0.0};
  EXPECT_EQ(kappa(KernelOrder{0.0}, one), 1.0);
  EXPECT_DOUBLE_EQ(kappa(KernelOrder{0.0}, std::vector<double>{0.1}), std::log(10.0));
  EXPECT_EQ(kappa(KernelOrder{-1.0}, one), 1.0);
  EXPECT_TRUE(std::isinf(kappa_of_distance(KernelOrder{1.0}, 0.0)));
  EXPECT_DOUBLE_EQ(kappa_of_distance(KernelOrder{1.5}, 4.0), 0.125);
}

TEST(Energy, NegativeOrderIsOne) {
  const auto mu = DiscreteMeasure::uniform(cube_cloud(2, 0.0, 1.0, 0.25));
  EXPECT_EQ(energy(KernelOrder{-0.5}, mu), 1.0);
}

TEST(Energy, TwoAtoms) {
  DiscreteMeasure mu{cloud(3, {0.0, 0.0, 0.0, 1.0, 0.0, 0.0}, 0.1), {0.5, 0.5}};
  const double self = cell_self_energy(KernelOrder{1.0}, 3, 0.1);
  EXPECT_NEAR(energy(KernelOrder{1.0}, mu), 0.5 + 0.5 * self, 1e-12);
}

TEST(Energy, SelfEnergyScalesAsPower) {
  // same seeded pairs at every h, so the scaling is exact up to rounding
  for (double beta : {0.5, 1.0, 2.0}) {
    const double a = cell_self_energy(KernelOrder{beta}, 3, 0.2);
    const double b = cell_self_energy(KernelOrder{beta}, 3, 0.1);
    EXPECT_NEAR(std::log2(b / a), beta, 1e-9);
  }
}

TEST(Energy, SelfEnergyMatchesIndependentMonteCarlo) {
  const double got = cell_self_energy(KernelOrder{1.0}, 3, 0.1, EnergyOptions{200000, 7});
  const double want = oracle::self_energy_mc(1.0, 3, 0.1, 200000, 99);
  EXPECT_NEAR(got / want, 1.0, 0.02);
}

TEST(Energy, InvalidMeasure) {
  DiscreteMeasure mu{cloud(1, {0.0, 1.0}, 0.1), {0.7, 0.7}};
  EXPECT_THROW(energy(KernelOrder{1.0}, mu), DomainError);
  EXPECT_THROW(cloud(1, {0.5, 0.5}, 0.1).validate(), DomainError);
}

TEST(Capacity, EmptyAndNegativeOrder) {
  EXPECT_EQ(capacity_estimate(KernelOrder{1.0}, PointCloud{}).capacity, 0.0);
  EXPECT_EQ(capacity_estimate(KernelOrder{-1.0}, cube_cloud(2, 0.0, 1.0, 0.5)).capacity, 1.0);
}

TEST(Capacity, NewtonianBallIsItsRadius) {
  const std::vector<double> center{0.0, 0.0, 0.0};
  const PointCloud ball = ball_cloud(center, 1.0, 0.1);
  const auto res = capacity_estimate(KernelOrder{1.0}, ball);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.capacity, 1.0, 0.05);
}

TEST(Capacity, MatchesDenseProjectedGradient) {
  const PointCloud c = cube_cloud(2, 0.0, 1.0, 0.125);
  const EnergyOptions eo;
  const double self = cell_self_energy(KernelOrder{1.0}, 2, c.h, eo);
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < 2; ++a) {
        const double t = c.atom(static_cast<std::size_t>(i))[static_cast<std::size_t>(a)] -
                         c.atom(static_cast<std::size_t>(j))[static_cast<std::size_t>(a)];
        r2 += t * t;
      }
      K(i, j) = i == j ? self : 1.0 / std::sqrt(r2);
    }
  const double emin = oracle::min_energy_fista([&](const Eigen::VectorXd& w) -> Eigen::VectorXd { return K * w; }, n,
                                               5000);
  const auto res = capacity_estimate(KernelOrder{1.0}, c);
  EXPECT_NEAR(res.energy, emin, 1e-5 * emin);
}

TEST(Capacity, UnitCubeAgainstFinerFftOracle) {
  const auto res = capacity_estimate(KernelOrder{1.0}, cube_cloud(3, 0.0, 1.0, 0.05));
  EXPECT_TRUE(res.converged);
  const int m = 40;
  const double h = 1.0 / m;
  GridKernel k(m, h, 1.0, oracle::self_energy_mc(1.0, 3, h, 200000, 3));
  const double emin =
      oracle::min_energy_fista([&](const Eigen::VectorXd& w) { return k.apply(w); }, m * m * m, 400);
  EXPECT_NEAR(res.capacity * emin, 1.0, 0.1);
}

TEST(Capacity, OpenLoopAgrees) {
  const PointCloud c = cube_cloud(2, 0.0, 1.0, 0.125);
  CapacityOptions ol;
  ol.step = StepRule::open_loop;
  ol.max_iterations = 20000;
  EXPECT_NEAR(capacity_estimate(KernelOrder{1.0}, c, ol).capacity, capacity_estimate(KernelOrder{1.0}, c).capacity,
              0.01);
}

TEST(MeasureIo, RoundTrip) {
  DiscreteMeasure mu{cloud(2, {0.1, 0.2, 0.3, 0.4}, 0.05), {0.25, 0.75}};
  const DiscreteMeasure back = measure_from_json(measure_to_json(mu));
  EXPECT_EQ(back.support.atoms, mu.support.atoms);
  EXPECT_EQ(back.support.dim, 2);
  EXPECT_EQ(back.support.h, 0.05);
  EXPECT_EQ(back.weights, mu.weights);
  EXPECT_THROW(measure_from_json(R"({"atoms":[[0.1],[0.2,0.3]],"weights":[0.5,0.5],"h":1})"), InvalidConfig);
}

TEST(Regime, Examples) {
  const auto crit = classify_regime({2, 8, 2});
  EXPECT_EQ(crit.regime, Regime::critical);
  EXPECT_EQ(crit.beta_star, 8);
  EXPECT_TRUE(crit.capacity_vanishes);
  const auto sub = classify_regime({2, 6, 2});
  EXPECT_EQ(sub.regime, Regime::subcritical);
  EXPECT_EQ(sub.gap, -2);
  EXPECT_TRUE(sub.multiple_points_exist);
  const auto sup = classify_regime({1, 5, 2});
  EXPECT_EQ(sup.regime, Regime::supercritical);
  EXPECT_EQ(sup.gap, 1);
  EXPECT_FALSE(sup.multiple_points_exist);
  EXPECT_THROW(classify_regime({1, 1, 1}), DomainError);
}

TEST(Capacity, MonotoneOnNestedClouds) {
  const auto inner = capacity_estimate(KernelOrder{1.0}, cube_cloud(2, 0.0, 0.5, 0.125));
  const auto outer = capacity_estimate(KernelOrder{1.0}, cube_cloud(2, 0.0, 1.0, 0.125));
  EXPECT_LE(inner.capacity, outer.capacity);
}
