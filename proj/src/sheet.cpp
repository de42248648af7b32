#include "bsheet/sheet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bsheet/errors.hpp"

namespace bsheet {

ParamPoint::ParamPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw DomainError("parameter point needs N >= 1 coordinates");
  for (double c : coords_)
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("parameter coordinates must be finite and >= 0");
}

void SheetSpec::validate() const {
  if (N < 1 || d < 1) throw DomainError("sheet needs N >= 1 and d >= 1");
}

GridSpec GridSpec::from_origin(std::vector<double> up, std::vector<std::size_t> n) {
  GridSpec g;
  g.lower.assign(up.size(), 0.0);
  g.upper = std::move(up);
  g.cells = std::move(n);
  return g;
}

GridSpec GridSpec::cube(std::size_t N, double up, std::size_t n) {
  return from_origin(std::vector<double>(N, up), std::vector<std::size_t>(N, n));
}

std::size_t GridSpec::node_count() const {
  std::size_t total = 1;
  for (std::size_t c : cells) {
    if (total > std::numeric_limits<std::size_t>::max() / (c + 1)) return std::numeric_limits<std::size_t>::max();
    total *= c + 1;
  }
  return total;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t l = 0; l < dim(); ++l) v *= width(l);
  return v;
}

void GridSpec::validate(std::size_t max_nodes) const {
  if (cells.empty() || lower.size() != cells.size() || upper.size() != cells.size())
    throw DomainError("grid bounds and cell counts must have the same positive length");
  for (std::size_t l = 0; l < cells.size(); ++l) {
    if (!(lower[l] >= 0.0) || !(lower[l] < upper[l]) || !std::isfinite(upper[l]))
      throw DomainError("grid axis " + std::to_string(l) + " needs 0 <= lower < upper");
    if (cells[l] == 0) throw DomainError("grid axis " + std::to_string(l) + " needs at least one cell");
  }
  if (node_count() > max_nodes)
    throw GridTooLarge("grid has more than " + std::to_string(max_nodes) + " nodes");
}

std::vector<std::size_t> GridSpec::multi_index(std::size_t flat) const {
  std::vector<std::size_t> m(dim());
  for (std::size_t l = dim(); l-- > 0;) {
    m[l] = flat % (cells[l] + 1);
    flat /= cells[l] + 1;
  }
  return m;
}

std::size_t GridSpec::flat_index(std::span<const std::size_t> multi) const {
  std::size_t flat = 0;
  for (std::size_t l = 0; l < dim(); ++l) flat = flat * (cells[l] + 1) + multi[l];
  return flat;
}

ParamPoint GridSpec::node(std::size_t flat) const {
  std::vector<double> c(dim());
  for (std::size_t l = dim(); l-- > 0;) {
    const std::size_t i = flat % (cells[l] + 1);
    flat /= cells[l] + 1;
    // exact at both ends of the axis
    c[l] = i == cells[l] ? upper[l] : lower[l] + static_cast<double>(i) * width(l);
  }
  return ParamPoint(std::move(c));
}

std::optional<std::size_t> GridSpec::find_node(const ParamPoint& p, double tol) const {
  if (p.dim() != dim()) return std::nullopt;
  std::vector<std::size_t> m(dim());
  for (std::size_t l = 0; l < dim(); ++l) {
    const double r = (p[l] - lower[l]) / width(l);
    const double i = std::round(r);
    if (i < 0.0 || i > static_cast<double>(cells[l])) return std::nullopt;
    if (std::abs(lower[l] + i * width(l) - p[l]) > tol) return std::nullopt;
    m[l] = static_cast<std::size_t>(i);
  }
  return flat_index(m);
}

FieldSample::FieldSample(SheetSpec spec, Layout layout, std::vector<double> values, Provenance provenance,
                         SeedRecord seed)
    : spec_(spec), layout_(std::move(layout)), values_(std::move(values)), provenance_(provenance), seed_(seed) {
  spec_.validate();
  if (values_.size() != point_count() * static_cast<std::size_t>(spec_.d))
    throw DimMismatch("field values do not match point count times d");
}

std::size_t FieldSample::point_count() const {
  if (on_grid()) return grid().node_count();
  return points().size();
}

ParamPoint FieldSample::point(std::size_t i) const {
  if (on_grid()) return grid().node(i);
  return points()[i];
}

double sheet_covariance(const ParamPoint& s, const ParamPoint& t) {
  if (s.dim() != t.dim())
    throw DimMismatch("points have " + std::to_string(s.dim()) + " and " + std::to_string(t.dim()) + " coordinates");
  double c = 1.0;
  for (std::size_t l = 0; l < s.dim(); ++l) c *= std::min(s[l], t[l]);
  return c;
}

CovMatrix sheet_covariance_matrix(std::span<const ParamPoint> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = sheet_covariance(pts[i], pts[j]);
  return CovMatrix(std::move(m));
}

ExactSampler::ExactSampler(SheetSpec spec, std::vector<ParamPoint> pts) : spec_(spec), pts_(std::move(pts)) {
  spec_.validate();
  if (pts_.size() > kMaxCovDim)
    throw GridTooLarge("exact sampling is capped at " + std::to_string(kMaxCovDim) + " points");
  for (const auto& p : pts_)
    if (p.dim() != static_cast<std::size_t>(spec_.N)) throw DimMismatch("point dimension differs from N");
  factor_ = cholesky(sheet_covariance_matrix(pts_));
}

FieldSample ExactSampler::sample(Rng& rng) const {
  const std::size_t n = pts_.size();
  const auto d = static_cast<std::size_t>(spec_.d);
  std::vector<double> values(n * d, 0.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < d; ++j) {
    for (auto& zi : z) zi = rng.normal();
    const Eigen::VectorXd x = factor_.lower.triangularView<Eigen::Lower>() * z;
    for (std::size_t i = 0; i < n; ++i) values[i * d + j] = x[static_cast<Eigen::Index>(i)];
  }
  return FieldSample(spec_, pts_, std::move(values), Provenance::exact, {rng.seed(), rng.stream()});
}

FieldSample exact_sample(const SheetSpec& spec, std::span<const ParamPoint> pts, Rng& rng) {
  return ExactSampler(spec, std::vector<ParamPoint>(pts.begin(), pts.end())).sample(rng);
}

namespace {

// In-place prefix sums along one axis of a node array with d interleaved
// components.
void prefix_sum_axis(std::vector<double>& v, const GridSpec& g, std::size_t axis, std::size_t d, bool compensated) {
  std::size_t stride = d;
  for (std::size_t l = g.dim(); l-- > axis + 1;) stride *= g.cells[l] + 1;
  const std::size_t len = g.cells[axis] + 1;
  const std::size_t block = stride * len;
  const std::size_t total = v.size();
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      double* line = v.data() + base + off;
      if (compensated) {
        double sum = 0.0, comp = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const double y = line[i * stride] - comp;
          const double t = sum + y;
          comp = (t - sum) - y;
          sum = t;
          line[i * stride] = sum;
        }
      } else {
        for (std::size_t i = 1; i < len; ++i) line[i * stride] += line[(i - 1) * stride];
      }
    }
  }
}

}  // namespace

FieldSample grid_sample(const SheetSpec& spec, const GridSpec& grid, Rng& rng, std::size_t max_nodes) {
  spec.validate();
  grid.validate(max_nodes);
  if (grid.dim() != static_cast<std::size_t>(spec.N)) throw DimMismatch("grid dimension differs from N");
  for (double lo : grid.lower)
    if (lo != 0.0) throw DomainError("grid sampler needs every axis anchored at 0");

  const std::size_t d = static_cast<std::size_t>(spec.d);
  const std::size_t nodes = grid.node_count();
  std::vector<double> values(nodes * d, 0.0);
  const double sd = std::sqrt(grid.cell_volume());
  bool compensated = false;
  for (std::size_t c : grid.cells) compensated = compensated || c > (std::size_t{1} << 12);

  // Cell with lower corner index m carries its white-noise mass at node m+1,
  // so nodes on a coordinate hyperplane stay exactly zero.
  std::vector<std::size_t> m(grid.dim(), 1);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(m.begin(), m.end(), 1);
    bool done = false;
    while (!done) {
      values[grid.flat_index(m) * d + j] = sd * rng.normal();
      for (std::size_t l = grid.dim();;) {
        if (l == 0) {
          done = true;
          break;
        }
        --l;
        if (++m[l] <= grid.cells[l]) break;
        m[l] = 1;
      }
    }
  }
  for (std::size_t axis = 0; axis < grid.dim(); ++axis) prefix_sum_axis(values, grid, axis, d, compensated);
  return FieldSample(spec, grid, std::move(values), Provenance::grid, {rng.seed(), rng.stream()});
}

double increment_decomposition_cov(const ParamPoint& base, const ParamPoint& t) {
  if (base.dim() != t.dim()) throw DimMismatch("base and t differ in dimension");
  const std::size_t N = t.dim();
  for (std::size_t l = 0; l < N; ++l)
    if (t[l] < base[l]) throw DomainError("t must dominate base componentwise");
  if (N > 30) throw DomainError("subset decomposition limited to N <= 30");

  double prod_t = 1.0, prod_base = 1.0;
  for (std::size_t l = 0; l < N; ++l) {
    prod_t *= t[l];
    prod_base *= base[l];
  }
  // Var(B(t)) - 2 Cov(B(t), B(base)) + Var(B(base)) with Cov = prod(base)
  const double direct = prod_t - prod_base;

  double subsets = 0.0;
  const std::uint64_t count = std::uint64_t{1} << N;
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    double term = 1.0;
    for (std::size_t l = 0; l < N; ++l) term *= (mask >> l) & 1u ? t[l] - base[l] : base[l];
    subsets += term;
  }
  if (std::abs(direct - subsets) > 1e-12 * std::max(1.0, prod_t))
    throw ContractViolation("increment decomposition disagrees: direct " + std::to_string(direct) + " vs subsets " +
                            std::to_string(subsets));
  return direct;
}

double scaling_check(std::span<const double> c, std::span<const ParamPoint> pts) {
  double scale = 1.0;
  for (double cl : c) {
    if (!(cl > 0.0)) throw DomainError("scaling factors must be positive");
    scale *= cl;
  }
  std::vector<ParamPoint> scaled;
  scaled.reserve(pts.size());
  for (const auto& p : pts) {
    if (p.dim() != c.size()) throw DimMismatch("scaling vector length differs from N");
    std::vector<double> q(p.dim());
    for (std::size_t l = 0; l < p.dim(); ++l) q[l] = c[l] * p[l];
    scaled.emplace_back(std::move(q));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      worst = std::max(worst, std::abs(sheet_covariance(scaled[i], scaled[j]) - scale * sheet_covariance(pts[i], pts[j])));
  return worst;
}

}  // namespace bsheet
