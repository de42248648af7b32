#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsheet/capacity.hpp"
#include "bsheet/pinning.hpp"
#include "bsheet/sheet.hpp"

namespace bsheet {

enum class SearchMode { self, independent };

// distinct: no two points of the tuple share any coordinate.
// shared: points i and j (1-based) share coordinate l (1-based).
struct CoordinateConstraint {
  enum class Kind { distinct, shared } kind = Kind::distinct;
  int i = 1;
  int j = 2;
  int l = 1;

  static CoordinateConstraint distinct() { return {}; }
  static CoordinateConstraint shared(int i, int j, int l) { return {Kind::shared, i, j, l}; }
};

struct SearchConfig {
  RegimeConfig cfg;
  double window_lo = 1.0;  // parameters searched in [window_lo, window_hi]^N
  double window_hi = 2.0;
  double delta = 0.1;      // Euclidean separation between tuple points
  double eps = 0.1;        // bound on the max pairwise distance of values
  SearchMode mode = SearchMode::self;
  CoordinateConstraint constraint;

  // Throws InvalidConfig naming the violated invariant.
  void validate() const;
};

struct MultiPointHit {
  std::vector<std::size_t> nodes;  // point index in the producing field(s)
  std::vector<ParamPoint> tuple;
  double spread = 0.0;
  std::vector<double> witness;     // k value vectors, d each
};

// Every admissible tuple of grid points whose values lie within eps of each
// other. Self mode takes one field and lists tuples with increasing point
// index; independent mode takes k fields with position i drawn from field i.
// Candidates come from value buckets of width eps probed over the 3^d
// neighbourhood. Results are sorted by node tuple. Throws
// ResolutionTooCoarse when a grid is coarser than delta / (3 sqrt(N)).
std::vector<MultiPointHit> find_near_multiples(std::span<const FieldSample> fields, const SearchConfig& sc);

// Same search, stopping at the first hit.
bool has_near_multiple(std::span<const FieldSample> fields, const SearchConfig& sc);

// Tuple admissibility (separation and coordinate constraint), exposed for
// post-hoc checks.
bool tuple_admissible(std::span<const ParamPoint> tuple, const SearchConfig& sc);

struct CoveringCount {
  std::optional<std::uint64_t> count;  // empty when it exceeds the cap
  double log2_count = 0.0;
  double analytic = 0.0;                // (K - lo)^(kN-1) 2^(2n(kN-1))
  std::uint64_t boxes_per_axis = 0;
  bool overflow = false;
};

// Dyadic boxes of side 2^-2n in (R^N)^k covering the shared-coordinate
// slice {t^i_l = t^j_l} with every coordinate in [max(delta, window_lo),
// window_hi]. Requires a shared constraint.
CoveringCount covering_count(int n, const SearchConfig& sc, std::uint64_t cap = std::uint64_t{1} << 62);

struct DensityReport {
  double min_det_values = 0.0;      // det Cov(B(t^1), ..., B(t^k)), d = 1
  double min_det_increments = 0.0;  // det Cov(B(t^1)-B(t^2), ..., B(t^{k-1})-B(t^k))
  std::size_t trials = 0;
  std::vector<ParamPoint> worst_values_tuple;
};

// Minimum determinants over random delta-separated k-tuples in
// [max(delta, window_lo), window_hi]^(Nk). k = 1 is allowed; its increment
// determinant is the empty one, 1.
DensityReport density_lower_bound(const SearchConfig& sc, std::size_t trials, Rng& rng);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

struct PhaseRow {
  RegimeConfig cfg;
  Regime regime;
  double eps;
  std::size_t trials;
  std::size_t hits;
  double estimate;
  WilsonInterval wilson;
  std::uint64_t seed;
};

struct PhaseOptions {
  std::size_t cells_per_axis = 40;  // grid over [0, window_hi]^N
  unsigned jobs = 1;
};

// P{near multiple point at tolerance eps} for each eps, with one grid
// realization per trial drawn from substream (seed, trial).
std::vector<PhaseRow> mc_phase_probability(const SearchConfig& sc, std::span<const double> eps_ladder,
                                           std::size_t trials, std::uint64_t seed, const PhaseOptions& opts = {});

std::string phase_csv_header();
std::string phase_csv_row(const PhaseRow& row);

struct HittingOptions {
  std::size_t cells_per_axis = 64;  // grid over [0, hi(R)]^N
  unsigned jobs = 1;
  CapacityOptions capacity;
};

struct HittingReport {
  double probability = 0.0;
  WilsonInterval wilson;
  std::size_t hits = 0;
  std::size_t trials = 0;
  double capacity = 0.0;  // Cap_{d-2N}(A)
  double ratio = 0.0;     // NaN when both vanish
  bool undefined_ratio = false;
};

// Hitting probability of the cells of A by one sheet over the grid nodes of
// R, against the capacity of A of order d - 2N. Requires d > 2N.
HittingReport hitting_capacity_comparison(const RegimeConfig& cfg, const Box& r, const PointCloud& target,
                                   std::size_t trials, std::uint64_t seed, const HittingOptions& opts = {});

}  // namespace bsheet
