#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsheet/pinning.hpp"
#include "bsheet/sheet.hpp"

namespace bsheet {

// Boxes R_1..R_k inside [1/M, M]^N whose projections on every axis are
// pairwise disjoint, ordered so the projections on axis N increase.
class DisjointBoxFamily {
 public:
  DisjointBoxFamily(std::vector<Box> boxes, double M);

  std::size_t k() const { return boxes_.size(); }
  std::size_t dim() const { return boxes_.front().dim(); }
  double bound() const { return M_; }
  const Box& box(std::size_t j) const { return boxes_[j]; }
  const std::vector<Box>& boxes() const { return boxes_; }

 private:
  std::vector<Box> boxes_;
  double M_;
};

// Geometry of the drift that decouples the last box from the earlier ones.
//   level = s1_{k-1,N}   (top of the previous box on axis N)
//   top   = s0_{k,N}     (bottom of the last box on axis N)
//   U = prod_{l<N} [0, s1_{k,l}] x [level, top]
//   R = prod_{l<N} [s0_{k,l}, s1_{k,l}] x [level, s1_{k,N}]
class DriftSpec {
 public:
  explicit DriftSpec(DisjointBoxFamily family);

  const DisjointBoxFamily& family() const { return family_; }
  const Box& last() const { return family_.box(family_.k() - 1); }
  const Box& region_R() const { return R_; }
  std::size_t dim() const { return family_.dim(); }
  double level() const { return level_; }
  double top() const { return top_; }

  bool in_U(const ParamPoint& t) const;
  bool in_R(const ParamPoint& t) const { return R_.contains(t); }
  // S = prod_{l<N} ]s0_{k,l}, s1_{k,l}[^c x [0, level]
  bool in_S(const ParamPoint& s) const;

  // The 2^(N-1) lower-face corners of R (axis N at level), in corner order.
  std::vector<ParamPoint> face_corners() const;

 private:
  DisjointBoxFamily family_;
  double level_;
  double top_;
  Box R_;
};

// p_l(t) = max(s0_{k,l}, t_l) for l < N, p_N(t) = level. Throws DomainError
// outside U u R.
ParamPoint projection_p(const DriftSpec& spec, const ParamPoint& t);

// The drift primitive F: ramp(t_N) * prod_{l<N} min(t_l, s0_{k,l})/s0_{k,l}
// * tilde_B(p(t)) on U, zero elsewhere. face_values are the sheet values at
// face_corners(), d per corner.
std::vector<double> drift_F(const DriftSpec& spec, const ParamPoint& t, std::span<const double> face_values, int d);

// Integral of the mixed derivative of F over [0, t]: the inclusion-exclusion
// increment of F over the rectangle [0, t] clipped to U. Zero for
// t_N <= level, equal to tilde_B(t) on the last box. Throws DomainError if t
// leaves [0, M]^N.
std::vector<double> drift_integral(const DriftSpec& spec, const ParamPoint& t, std::span<const double> face_values,
                                   int d);

// Face values read off a grid field. Throws GridMissingCorners.
std::vector<double> face_values_from(const DriftSpec& spec, const FieldSample& field);

// B_hat = B - drift_integral at every node of a grid field.
FieldSample decouple(const DriftSpec& spec, const FieldSample& field);

// Integral of |Z|^2 over U with Z the mixed derivative of F, from cell-wise
// mixed differences on the partition of U at the breakpoints s0_{k,l}, each
// piece split into `refine` cells per axis.
double drift_energy(const DriftSpec& spec, std::span<const double> face_values, int d, std::size_t refine = 1);
double drift_energy(const DriftSpec& spec, const FieldSample& field, std::size_t refine = 1);

}  // namespace bsheet
