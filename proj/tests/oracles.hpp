#pragma once

// Reference computations used by the tests. They share no code with the
// library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bsheet/multipoints.hpp"
#include "bsheet/sheet.hpp"

namespace oracle {

inline double min_cov(const std::vector<double>& s, const std::vector<double>& t) {
  double c = 1.0;
  for (std::size_t l = 0; l < s.size(); ++l) c *= std::min(s[l], t[l]);
  return c;
}

// E[X_target | X_obs = x] for a centered Gaussian with covariance cov, by a
// full-pivot LU solve.
inline double conditional_mean(const Eigen::MatrixXd& cov, const std::vector<int>& obs, int target,
                               const std::vector<double>& x) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd soo(n, n);
  Eigen::VectorXd sto(n), xv(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    xv(a) = x[static_cast<std::size_t>(a)];
    sto(a) = cov(target, obs[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < n; ++b) soo(a, b) = cov(obs[static_cast<std::size_t>(a)], obs[static_cast<std::size_t>(b)]);
  }
  return sto.dot(soo.fullPivLu().solve(xv));
}

// Every tuple accepted by the search definition, by scanning all index
// combinations. Self mode lists increasing indices.
inline std::vector<std::vector<std::size_t>> brute_force_tuples(std::span<const bsheet::FieldSample> fields,
                                                               const bsheet::SearchConfig& sc) {
  const auto k = static_cast<std::size_t>(sc.cfg.k);
  const bool self = sc.mode == bsheet::SearchMode::self;
  const std::size_t n = fields[0].point_count();
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> idx(k);
  auto field = [&](std::size_t pos) -> const bsheet::FieldSample& { return fields[self ? 0 : pos]; };
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == k) {
      for (std::size_t a = 0; a < k; ++a) {
        const auto pa = field(a).point(idx[a]);
        for (std::size_t l = 0; l < pa.dim(); ++l)
          if (pa[l] < sc.window_lo || pa[l] > sc.window_hi) return;
        for (std::size_t b = a + 1; b < k; ++b) {
          const auto pb = field(b).point(idx[b]);
          double sep = 0.0;
          bool shares = false;
          for (std::size_t l = 0; l < pa.dim(); ++l) {
            sep += (pa[l] - pb[l]) * (pa[l] - pb[l]);
            shares = shares || pa[l] == pb[l];
          }
          if (sep < sc.delta * sc.delta) return;
          if (sc.constraint.kind == bsheet::CoordinateConstraint::Kind::distinct && shares) return;
          double spread = 0.0;
          const auto va = field(a).value(idx[a]), vb = field(b).value(idx[b]);
          for (std::size_t c = 0; c < va.size(); ++c) spread += (va[c] - vb[c]) * (va[c] - vb[c]);
          if (spread > sc.eps * sc.eps) return;
        }
      }
      if (sc.constraint.kind == bsheet::CoordinateConstraint::Kind::shared) {
        const auto i = static_cast<std::size_t>(sc.constraint.i - 1), j = static_cast<std::size_t>(sc.constraint.j - 1);
        const auto l = static_cast<std::size_t>(sc.constraint.l - 1);
        if (field(i).point(idx[i])[l] != field(j).point(idx[j])[l]) return;
      }
      out.push_back(idx);
      return;
    }
    for (std::size_t i = (self && pos > 0) ? idx[pos - 1] + 1 : 0; i < n; ++i) {
      idx[pos] = i;
      rec(pos + 1);
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

// Number of half-open dyadic boxes of side 2^-2n in (R^N)^k that meet
// {x in [lo, K]^(kN) : x_a = x_b}, a and b flat coordinate positions, by
// enumerating every box that meets the cube.
inline std::uint64_t enumerate_slice_boxes(int n, int kN, int a, int b, double lo, double K) {
  const double side = std::ldexp(1.0, -2 * n);
  std::vector<std::int64_t> first, last;
  const auto j0 = static_cast<std::int64_t>(std::floor(lo / side));
  const auto j1 = static_cast<std::int64_t>(std::floor(K / side));
  std::vector<std::int64_t> j(static_cast<std::size_t>(kN), j0);
  std::uint64_t count = 0;
  while (true) {
    // boxes [j side, (j+1) side) on axes a and b overlap iff the indices agree
    const double alo = std::max({static_cast<double>(j[static_cast<std::size_t>(a)]) * side,
                                 static_cast<double>(j[static_cast<std::size_t>(b)]) * side, lo});
    const double ahi = std::min({static_cast<double>(j[static_cast<std::size_t>(a)] + 1) * side,
                                 static_cast<double>(j[static_cast<std::size_t>(b)] + 1) * side});
    if (alo < ahi && alo <= K) ++count;
    std::size_t c = 0;
    while (c < j.size() && j[c] == j1) j[c++] = j0;
    if (c == j.size()) break;
    ++j[c];
  }
  return count;
}

// Mean of 1/|X - Y|^beta for X, Y uniform on a cube of side h, by plain
// Monte Carlo with its own generator.
inline double self_energy_mc(double beta, int dim, double h, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double r2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double t = u(gen) - u(gen);
      r2 += t * t;
    }
    sum += std::pow(r2, -0.5 * beta);
  }
  return sum / static_cast<double>(samples);
}

// Euclidean projection onto the probability simplex.
inline void project_simplex(Eigen::VectorXd& w) {
  std::vector<double> s(w.data(), w.data() + w.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) theta = t;
  }
  w = (w.array() - theta).max(0.0);
}

// min over the simplex of w' K w by accelerated projected gradient, with
// K applied through `apply`. Returns the smallest energy seen.
inline double min_energy_fista(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, Eigen::Index n,
                               int iterations) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  double lambda = 0.0;
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd kv = apply(v);
    lambda = kv.norm();
    v = kv / lambda;
  }
  const double step = 1.0 / (2.0 * lambda * 1.01);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), y = w, prev = w;
  double tk = 1.0, best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd ky = apply(y);
    Eigen::VectorXd next = y - step * 2.0 * ky;
    project_simplex(next);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = next + ((tk - 1.0) / tn) * (next - prev);
    prev = next;
    tk = tn;
    if (it % 10 == 9 || it + 1 == iterations) best = std::min(best, next.dot(apply(next)));
  }
  return best;
}

}  // namespace oracle
