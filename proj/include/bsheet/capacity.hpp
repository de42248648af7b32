#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bsheet {

struct KernelOrder {
  double beta = 0.0;
};

// Bessel-Riesz kernel: |x|^-beta for beta > 0, max(1, log(1/|x|)) for
// beta = 0, 1 for beta < 0. Infinity at the origin when beta >= 0.
double kappa(KernelOrder order, std::span<const double> x);
double kappa_of_distance(KernelOrder order, double r);

// Atoms of a regular cell grid in R^dim, stored flat (dim values per atom).
// Each atom stands for the cube of side h centered on it.
struct PointCloud {
  int dim = 1;
  std::vector<double> atoms;
  double h = 1.0;

  std::size_t size() const { return dim > 0 ? atoms.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const double> atom(std::size_t i) const {
    return {atoms.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  // Throws DomainError on bad shape, repeated atoms, or h <= 0.
  void validate() const;
};

// Centers of the h-cells of [lo, hi]^dim.
PointCloud cube_cloud(int dim, double lo, double hi, double h);
// Centers of the h-cells of a grid anchored at `center - radius` that fall in
// the closed ball.
PointCloud ball_cloud(std::span<const double> center, double radius, double h);

struct DiscreteMeasure {
  PointCloud support;
  std::vector<double> weights;

  static DiscreteMeasure uniform(PointCloud support);
  // Throws DomainError unless weights are nonnegative and sum to 1 (1e-12).
  void validate() const;
};

struct EnergyOptions {
  std::size_t self_energy_samples = 10000;
  std::uint64_t seed = 0x5eed;
};

// Mean of kappa(X - Y) for X, Y independent uniform on a cube of side h,
// estimated from `samples` seeded pairs.
double cell_self_energy(KernelOrder order, int dim, double h, const EnergyOptions& opts = {});

// Discrete energy: off-diagonal double sum plus sum_i w_i^2 * cell self-energy.
// Exactly 1 for beta < 0.
double energy(KernelOrder order, const DiscreteMeasure& mu, const EnergyOptions& opts = {});

enum class StepRule {
  // Move mass from the heaviest-potential active atom to the lightest, with
  // exact line search on the quadratic.
  pairwise_line_search,
  // Classic open-loop step 2/(iter+2) towards the lightest-potential atom.
  open_loop,
};

struct CapacityOptions {
  StepRule step = StepRule::pairwise_line_search;
  std::size_t max_iterations = 200000;
  // Stop once the Frank-Wolfe duality gap is below gap_tol * energy.
  double gap_tol = 1e-6;
  // Open-loop rule only: also stop on relative energy change below this.
  double rel_change_tol = 1e-8;
  EnergyOptions energy;
};

struct CapacityResult {
  double capacity = 0.0;
  double energy = 0.0;  // energy of the returned measure
  double duality_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> weights;
};

// 1 / min energy over probability weights on the support, by Frank-Wolfe.
// Empty support gives capacity 0; beta < 0 gives exactly 1.
CapacityResult capacity_estimate(KernelOrder order, const PointCloud& support, const CapacityOptions& opts = {});

enum class Regime { subcritical, critical, supercritical };
std::string to_string(Regime r);

struct RegimeConfig {
  int N = 1;
  int d = 1;
  int k = 2;

  void validate() const;  // N, d >= 1, k >= 2
  int gap() const { return (k - 1) * d - 2 * k * N; }
  int beta_star() const { return k * (d - 2 * N); }
};

struct RegimeVerdict {
  Regime regime;
  int gap;
  int beta_star;
  bool multiple_points_exist;
  // Cap_{beta*}(R^d) = 0, which holds iff beta* >= d.
  bool capacity_vanishes;
};

RegimeVerdict classify_regime(const RegimeConfig& cfg);

}  // namespace bsheet
