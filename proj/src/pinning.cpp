#include "bsheet/pinning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsheet/errors.hpp"

namespace bsheet {

Box::Box(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty() || lo_.size() != hi_.size()) throw DomainError("box bounds must have equal positive length");
  for (std::size_t l = 0; l < lo_.size(); ++l)
    if (!(lo_[l] > 0.0) || !(lo_[l] < hi_[l]) || !std::isfinite(hi_[l]))
      throw DomainError("box axis " + std::to_string(l) + " needs 0 < lo < hi");
}

bool Box::contains(const ParamPoint& t) const {
  if (t.dim() != dim()) return false;
  for (std::size_t l = 0; l < dim(); ++l)
    if (t[l] < lo_[l] || t[l] > hi_[l]) return false;
  return true;
}

std::size_t corner_count(std::size_t N, CornerMode mode) {
  return std::size_t{1} << (mode == CornerMode::full ? N : N - 1);
}

ParamPoint box_corner(const Box& r, std::size_t index, CornerMode mode) {
  const std::size_t N = r.dim();
  std::vector<double> c(N);
  const std::size_t free_axes = mode == CornerMode::full ? N : N - 1;
  for (std::size_t l = 0; l < free_axes; ++l) c[l] = (index >> l) & 1u ? r.hi(l) : r.lo(l);
  if (mode == CornerMode::lower_face) c[N - 1] = r.lo(N - 1);
  return ParamPoint(std::move(c));
}

namespace {

void require_inside(const Box& r, const ParamPoint& t) {
  if (t.dim() != r.dim()) throw DimMismatch("point and box differ in dimension");
  if (!r.contains(t)) throw OutOfBox("target point lies outside the box");
}

std::vector<double> weights_only(const Box& r, const ParamPoint& t, CornerMode mode) {
  const std::size_t N = r.dim();
  const std::size_t axes = mode == CornerMode::full ? N : N - 1;
  std::vector<double> up(axes), down(axes);
  for (std::size_t l = 0; l < axes; ++l) {
    const double w = r.hi(l) - r.lo(l);
    up[l] = (t[l] - r.lo(l)) / w;
    down[l] = (r.hi(l) - t[l]) / w;
  }
  std::vector<double> weights(std::size_t{1} << axes);
  for (std::size_t g = 0; g < weights.size(); ++g) {
    double p = 1.0;
    for (std::size_t l = 0; l < axes; ++l) p *= (g >> l) & 1u ? up[l] : down[l];
    weights[g] = p;
  }
  return weights;
}

std::vector<double> interpolate(const Box& r, const ParamPoint& t, std::span<const double> values, int d,
                                CornerMode mode) {
  require_inside(r, t);
  if (d < 1) throw IndexMismatch("state dimension must be positive");
  const std::vector<double> w = weights_only(r, t, mode);
  const auto dd = static_cast<std::size_t>(d);
  if (values.size() != w.size() * dd)
    throw IndexMismatch("expected " + std::to_string(w.size() * dd) + " corner values, got " +
                        std::to_string(values.size()));
  std::vector<double> out(dd, 0.0);
  for (std::size_t g = 0; g < w.size(); ++g)
    for (std::size_t j = 0; j < dd; ++j) out[j] += w[g] * values[g * dd + j];
  return out;
}

}  // namespace

CornerWeightSet corner_weights(const Box& r, const ParamPoint& t, CornerMode mode) {
  require_inside(r, t);
  CornerWeightSet out{mode, {}, weights_only(r, t, mode), t};
  out.corners.reserve(out.weights.size());
  for (std::size_t g = 0; g < out.weights.size(); ++g) out.corners.push_back(box_corner(r, g, mode));
  return out;
}

std::vector<double> bar_B(const Box& r, const ParamPoint& t, std::span<const double> corner_values, int d) {
  return interpolate(r, t, corner_values, d, CornerMode::full);
}

std::vector<double> tilde_B(const Box& r, const ParamPoint& t, std::span<const double> lower_face_values, int d) {
  return interpolate(r, t, lower_face_values, d, CornerMode::lower_face);
}

double projection_identity_residual(double s, double s0, double s1, double t) {
  if (!(0.0 < s0 && s0 < s1)) throw DomainError("need 0 < s0 < s1");
  if (t < s0 || t > s1) throw DomainError("t must lie in [s0, s1]");
  if (s > s0 && s < s1) throw DomainError("s lies inside the open interval ]s0, s1[");
  const double w = s1 - s0;
  const double rhs = std::min(s1, s) * (t - s0) / w + std::min(s0, s) * (s1 - t) / w;
  return std::abs(std::min(t, s) - rhs);
}

bool admissible_for(const Box& r, const ParamPoint& s, CornerMode mode) {
  if (s.dim() != r.dim()) return false;
  const std::size_t N = r.dim();
  const std::size_t axes = mode == CornerMode::full ? N : N - 1;
  for (std::size_t l = 0; l < axes; ++l)
    if (s[l] > r.lo(l) && s[l] < r.hi(l)) return false;
  if (mode == CornerMode::lower_face && s[N - 1] > r.lo(N - 1)) return false;
  return true;
}

double orthogonality_residual(const Box& r, const ParamPoint& t, const ParamPoint& s, CornerMode mode) {
  require_inside(r, t);
  if (!admissible_for(r, s, mode)) throw SNotAdmissible("s is not in the conditioning set of the box");
  const std::vector<double> w = weights_only(r, t, mode);
  double pinned = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g) pinned += w[g] * sheet_covariance(box_corner(r, g, mode), s);
  return std::abs(pinned - sheet_covariance(t, s));
}

}  // namespace bsheet
