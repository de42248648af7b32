#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bsheet/gaussian.hpp"
#include "bsheet/rng.hpp"

namespace bsheet {

// A point of the parameter space R_+^N.
class ParamPoint {
 public:
  ParamPoint() = default;
  explicit ParamPoint(std::vector<double> coords);
  ParamPoint(std::initializer_list<double> coords) : ParamPoint(std::vector<double>(coords)) {}

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t l) const { return coords_[l]; }
  const std::vector<double>& coords() const { return coords_; }

  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;

 private:
  std::vector<double> coords_;
};

struct SheetSpec {
  int N = 1;  // parameters
  int d = 1;  // state dimension

  void validate() const;
  friend bool operator==(const SheetSpec&, const SheetSpec&) = default;
};

inline constexpr std::size_t kDefaultMaxGridNodes = std::size_t{1} << 24;

// Regular grid of (cells+1) nodes per axis. Nodes are indexed row-major,
// axis 0 slowest.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> cells;

  static GridSpec from_origin(std::vector<double> upper, std::vector<std::size_t> cells);
  static GridSpec cube(std::size_t N, double upper, std::size_t cells);

  std::size_t dim() const { return cells.size(); }
  std::size_t node_count() const;
  double width(std::size_t axis) const { return (upper[axis] - lower[axis]) / static_cast<double>(cells[axis]); }
  double cell_volume() const;
  // Throws DomainError on malformed specs, GridTooLarge above max_nodes.
  void validate(std::size_t max_nodes = kDefaultMaxGridNodes) const;

  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> multi) const;
  ParamPoint node(std::size_t flat) const;
  // Node whose coordinates match p within tol per axis, if any.
  std::optional<std::size_t> find_node(const ParamPoint& p, double tol = 1e-9) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class Provenance { exact, grid };

struct SeedRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  friend bool operator==(const SeedRecord&, const SeedRecord&) = default;
};

// Realized values of a d-dimensional sheet at a point list or at every
// node of a grid. Values are stored point-major, d per point.
class FieldSample {
 public:
  using Layout = std::variant<std::vector<ParamPoint>, GridSpec>;

  FieldSample(SheetSpec spec, Layout layout, std::vector<double> values, Provenance provenance,
              SeedRecord seed);

  const SheetSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }
  bool on_grid() const { return std::holds_alternative<GridSpec>(layout_); }
  const GridSpec& grid() const { return std::get<GridSpec>(layout_); }
  const std::vector<ParamPoint>& points() const { return std::get<std::vector<ParamPoint>>(layout_); }
  Provenance provenance() const { return provenance_; }
  const SeedRecord& seed() const { return seed_; }

  std::size_t point_count() const;
  ParamPoint point(std::size_t i) const;
  std::span<const double> value(std::size_t i) const {
    return {values_.data() + i * static_cast<std::size_t>(spec_.d), static_cast<std::size_t>(spec_.d)};
  }
  std::span<double> value(std::size_t i) {
    return {values_.data() + i * static_cast<std::size_t>(spec_.d), static_cast<std::size_t>(spec_.d)};
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FieldSample&, const FieldSample&) = default;

 private:
  SheetSpec spec_;
  Layout layout_;
  std::vector<double> values_;
  Provenance provenance_;
  SeedRecord seed_;
};

// prod_l min(s_l, t_l). Throws DimMismatch.
double sheet_covariance(const ParamPoint& s, const ParamPoint& t);

// Covariance matrix [sheet_covariance(p_i, p_j)].
CovMatrix sheet_covariance_matrix(std::span<const ParamPoint> pts);

// Exact sampler for a fixed point set; factors the covariance once so
// repeated draws cost O(n^2).
class ExactSampler {
 public:
  ExactSampler(SheetSpec spec, std::vector<ParamPoint> pts);

  FieldSample sample(Rng& rng) const;
  double jitter() const { return factor_.jitter; }

 private:
  SheetSpec spec_;
  std::vector<ParamPoint> pts_;
  CholeskyFactor factor_;
};

FieldSample exact_sample(const SheetSpec& spec, std::span<const ParamPoint> pts, Rng& rng);

// White-noise partial-sum sampler. Requires grid lower bounds of zero.
// Throws DomainError, GridTooLarge.
FieldSample grid_sample(const SheetSpec& spec, const GridSpec& grid, Rng& rng,
                        std::size_t max_nodes = kDefaultMaxGridNodes);

// Var(B(t) - B(base)) for t >= base, computed directly and as the sum over
// nonempty axis subsets of the independent-sheet decomposition. Throws
// ContractViolation if the two disagree beyond 1e-12.
double increment_decomposition_cov(const ParamPoint& base, const ParamPoint& t);

// max_ij |Cov(B(c p_i), B(c p_j)) - prod(c) Cov(B(p_i), B(p_j))|.
double scaling_check(std::span<const double> c, std::span<const ParamPoint> pts);

}  // namespace bsheet
