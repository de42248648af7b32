#include "bsheet/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsheet/errors.hpp"

namespace bsheet {

DisjointBoxFamily::DisjointBoxFamily(std::vector<Box> boxes, double M) : boxes_(std::move(boxes)), M_(M) {
  if (boxes_.size() < 2) throw DomainError("need at least two boxes");
  if (!(M > 0.0)) throw DomainError("bound M must be positive");
  const std::size_t N = boxes_.front().dim();
  for (const auto& b : boxes_) {
    if (b.dim() != N) throw DimMismatch("boxes differ in dimension");
    for (std::size_t l = 0; l < N; ++l)
      if (b.lo(l) < 1.0 / M || b.hi(l) > M) throw DomainError("box leaves [1/M, M]^N");
  }
  for (std::size_t l = 0; l < N; ++l)
    for (std::size_t i = 0; i < boxes_.size(); ++i)
      for (std::size_t j = i + 1; j < boxes_.size(); ++j)
        if (!(boxes_[i].hi(l) < boxes_[j].lo(l) || boxes_[j].hi(l) < boxes_[i].lo(l)))
          throw DomainError("projections on axis " + std::to_string(l) + " overlap");
  for (std::size_t j = 1; j < boxes_.size(); ++j)
    if (!(boxes_[j - 1].hi(N - 1) < boxes_[j].lo(N - 1)))
      throw DomainError("boxes must increase along axis N");
}

namespace {

Box make_R(const DisjointBoxFamily& f) {
  const std::size_t N = f.dim();
  const Box& last = f.box(f.k() - 1);
  std::vector<double> lo(last.lower()), hi(last.upper());
  lo[N - 1] = f.box(f.k() - 2).hi(N - 1);
  return Box(std::move(lo), std::move(hi));
}

}  // namespace

DriftSpec::DriftSpec(DisjointBoxFamily family)
    : family_(std::move(family)),
      level_(family_.box(family_.k() - 2).hi(family_.dim() - 1)),
      top_(family_.box(family_.k() - 1).lo(family_.dim() - 1)),
      R_(make_R(family_)) {}

bool DriftSpec::in_U(const ParamPoint& t) const {
  const std::size_t N = dim();
  if (t.dim() != N) return false;
  for (std::size_t l = 0; l + 1 < N; ++l)
    if (t[l] > last().hi(l)) return false;
  return t[N - 1] >= level_ && t[N - 1] <= top_;
}

bool DriftSpec::in_S(const ParamPoint& s) const {
  const std::size_t N = dim();
  if (s.dim() != N) return false;
  for (std::size_t l = 0; l + 1 < N; ++l)
    if (s[l] > last().lo(l) && s[l] < last().hi(l)) return false;
  return s[N - 1] <= level_;
}

std::vector<ParamPoint> DriftSpec::face_corners() const {
  const std::size_t n = corner_count(dim(), CornerMode::lower_face);
  std::vector<ParamPoint> out;
  out.reserve(n);
  for (std::size_t g = 0; g < n; ++g) out.push_back(box_corner(R_, g, CornerMode::lower_face));
  return out;
}

ParamPoint projection_p(const DriftSpec& spec, const ParamPoint& t) {
  if (!spec.in_U(t) && !spec.in_R(t)) throw DomainError("projection p is defined on U u R only");
  const std::size_t N = spec.dim();
  std::vector<double> p(N);
  for (std::size_t l = 0; l + 1 < N; ++l) p[l] = std::max(spec.last().lo(l), t[l]);
  p[N - 1] = spec.level();
  return ParamPoint(std::move(p));
}

std::vector<double> drift_F(const DriftSpec& spec, const ParamPoint& t, std::span<const double> face_values, int d) {
  if (t.dim() != spec.dim()) throw DimMismatch("point and drift differ in dimension");
  const auto dd = static_cast<std::size_t>(d);
  if (d < 1 || face_values.size() != corner_count(spec.dim(), CornerMode::lower_face) * dd)
    throw IndexMismatch("face values must hold d values per lower-face corner");
  if (!spec.in_U(t)) return std::vector<double>(dd, 0.0);

  const std::size_t N = spec.dim();
  double factor = (t[N - 1] - spec.level()) / (spec.top() - spec.level());
  for (std::size_t l = 0; l + 1 < N; ++l) {
    const double s0 = spec.last().lo(l);
    factor *= std::min(t[l], s0) / s0;
  }
  std::vector<double> out = tilde_B(spec.region_R(), projection_p(spec, t), face_values, d);
  for (double& v : out) v *= factor;
  return out;
}

namespace {

std::vector<double> drift_integral_unchecked(const DriftSpec& spec, const ParamPoint& t,
                                             std::span<const double> face_values, int d) {
  const std::size_t N = spec.dim();
  const auto dd = static_cast<std::size_t>(d);
  std::vector<double> out(dd, 0.0);
  if (t[N - 1] <= spec.level()) return out;

  // [0, t] intersected with U; Z vanishes off U.
  std::vector<double> lo(N, 0.0), hi(N);
  for (std::size_t l = 0; l + 1 < N; ++l) hi[l] = std::min(t[l], spec.last().hi(l));
  lo[N - 1] = spec.level();
  hi[N - 1] = std::min(t[N - 1], spec.top());

  const std::size_t corners = std::size_t{1} << N;
  std::vector<double> c(N);
  for (std::size_t mask = 0; mask < corners; ++mask) {
    int lows = 0;
    for (std::size_t l = 0; l < N; ++l) {
      const bool upper = (mask >> l) & 1u;
      c[l] = upper ? hi[l] : lo[l];
      lows += upper ? 0 : 1;
    }
    const std::vector<double> f = drift_F(spec, ParamPoint(c), face_values, d);
    const double sign = lows % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < dd; ++j) out[j] += sign * f[j];
  }
  return out;
}

}  // namespace

std::vector<double> drift_integral(const DriftSpec& spec, const ParamPoint& t, std::span<const double> face_values,
                                   int d) {
  if (t.dim() != spec.dim()) throw DimMismatch("point and drift differ in dimension");
  const double M = spec.family().bound();
  for (std::size_t l = 0; l < t.dim(); ++l)
    if (t[l] > M) throw DomainError("drift integral is defined on [0, M]^N");
  return drift_integral_unchecked(spec, t, face_values, d);
}

std::vector<double> face_values_from(const DriftSpec& spec, const FieldSample& field) {
  if (!field.on_grid()) throw GridMissingCorners("decoupling needs a grid field");
  if (field.spec().N != static_cast<int>(spec.dim())) throw DimMismatch("field and drift differ in N");
  std::vector<double> out;
  for (const auto& corner : spec.face_corners()) {
    const auto node = field.grid().find_node(corner);
    if (!node) throw GridMissingCorners("grid lacks a lower-face corner of the last box");
    const auto v = field.value(*node);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

FieldSample decouple(const DriftSpec& spec, const FieldSample& field) {
  const std::vector<double> face = face_values_from(spec, field);
  const int d = field.spec().d;
  const auto dd = static_cast<std::size_t>(d);
  std::vector<double> values = field.values();
  const GridSpec& g = field.grid();
  const std::size_t N = spec.dim();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const ParamPoint t = g.node(i);
    if (t[N - 1] <= spec.level()) continue;  // unchanged below the level
    const std::vector<double> drift = drift_integral_unchecked(spec, t, face, d);
    for (std::size_t j = 0; j < dd; ++j) values[i * dd + j] -= drift[j];
  }
  return FieldSample(field.spec(), g, std::move(values), field.provenance(), field.seed());
}

double drift_energy(const DriftSpec& spec, std::span<const double> face_values, int d, std::size_t refine) {
  if (refine == 0) throw DomainError("refine must be positive");
  const std::size_t N = spec.dim();
  const auto dd = static_cast<std::size_t>(d);

  // Per-axis cell edges: breakpoints refined uniformly within each piece.
  std::vector<std::vector<double>> edges(N);
  auto split = [refine](std::vector<double>& e, double a, double b) {
    for (std::size_t i = 0; i < refine; ++i) e.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(refine));
  };
  for (std::size_t l = 0; l + 1 < N; ++l) {
    split(edges[l], 0.0, spec.last().lo(l));
    split(edges[l], spec.last().lo(l), spec.last().hi(l));
    edges[l].push_back(spec.last().hi(l));
  }
  split(edges[N - 1], spec.level(), spec.top());
  edges[N - 1].push_back(spec.top());

  std::vector<std::size_t> idx(N, 0);
  std::vector<double> c(N);
  double energy = 0.0;
  const std::size_t corners = std::size_t{1} << N;
  while (true) {
    double volume = 1.0;
    for (std::size_t l = 0; l < N; ++l) volume *= edges[l][idx[l] + 1] - edges[l][idx[l]];
    std::vector<double> diff(dd, 0.0);
    for (std::size_t mask = 0; mask < corners; ++mask) {
      int lows = 0;
      for (std::size_t l = 0; l < N; ++l) {
        const bool upper = (mask >> l) & 1u;
        c[l] = edges[l][idx[l] + (upper ? 1 : 0)];
        lows += upper ? 0 : 1;
      }
      const std::vector<double> f = drift_F(spec, ParamPoint(c), face_values, d);
      const double sign = lows % 2 == 0 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < dd; ++j) diff[j] += sign * f[j];
    }
    double sq = 0.0;
    for (double v : diff) sq += v * v;
    energy += sq / volume;  // (diff/volume)^2 * volume

    std::size_t l = N;
    while (l > 0) {
      --l;
      if (++idx[l] + 1 < edges[l].size()) break;
      idx[l] = 0;
      if (l == 0) return energy;
    }
  }
}

double drift_energy(const DriftSpec& spec, const FieldSample& field, std::size_t refine) {
  return drift_energy(spec, face_values_from(spec, field), field.spec().d, refine);
}

}  // namespace bsheet
