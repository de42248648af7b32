#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsheet/sheet.hpp"

namespace bsheet {

// Closed axis-aligned box prod_l [lo_l, hi_l] with 0 < lo_l < hi_l.
class Box {
 public:
  Box(std::vector<double> lo, std::vector<double> hi);

  std::size_t dim() const { return lo_.size(); }
  double lo(std::size_t l) const { return lo_[l]; }
  double hi(std::size_t l) const { return hi_[l]; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  bool contains(const ParamPoint& t) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

// full: conditioning on the complement of the box in every axis, 2^N corners.
// lower_face: complement in axes 1..N-1 and the past [0, lo_N] in axis N,
// 2^(N-1) corners all at level lo_N.
enum class CornerMode { full, lower_face };

// Corner gamma is listed at index sum_l gamma(l) 2^(l-1); gamma(l) = 1 picks hi_l.
struct CornerWeightSet {
  CornerMode mode;
  std::vector<ParamPoint> corners;
  std::vector<double> weights;
  ParamPoint target;
};

std::size_t corner_count(std::size_t N, CornerMode mode);
ParamPoint box_corner(const Box& r, std::size_t index, CornerMode mode);

// Multilinear interpolation weights. Throws OutOfBox.
CornerWeightSet corner_weights(const Box& r, const ParamPoint& t, CornerMode mode);

// E(B(t) | outside of r): weighted sum of the d-vectors at the 2^N corners.
// corner_values holds d values per corner in corner order. Throws OutOfBox,
// IndexMismatch.
std::vector<double> bar_B(const Box& r, const ParamPoint& t, std::span<const double> corner_values, int d);

// E(B(t) | past of r): the lower-face analogue, independent of t_N.
std::vector<double> tilde_B(const Box& r, const ParamPoint& t, std::span<const double> lower_face_values, int d);

// |t^s - [(s1^s)(t-s0) + (s0^s)(s1-t)]/(s1-s0)| for s outside ]s0, s1[.
// Throws DomainError.
double projection_identity_residual(double s, double s0, double s1, double t);

// |E(pinned(t) B(s)) - E(B(t) B(s))| evaluated from sheet covariances.
// Throws SNotAdmissible when s is not in the conditioning set of mode.
double orthogonality_residual(const Box& r, const ParamPoint& t, const ParamPoint& s, CornerMode mode);

bool admissible_for(const Box& r, const ParamPoint& s, CornerMode mode);

}  // namespace bsheet
