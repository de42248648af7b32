#include "bsheet/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsheet/errors.hpp"
#include "bsheet/rng.hpp"

namespace bsheet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kernel from the squared distance; the common integer orders avoid pow.
inline double kernel_r2(double beta, double r2) {
  if (beta < 0.0) return 1.0;
  if (r2 == 0.0) return kInf;
  if (beta == 0.0) return std::max(1.0, -0.5 * std::log(r2));
  if (beta == 1.0) return 1.0 / std::sqrt(r2);
  if (beta == 2.0) return 1.0 / r2;
  if (beta == 3.0) return 1.0 / (r2 * std::sqrt(r2));
  return std::pow(r2, -0.5 * beta);
}

inline double dist2(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double t = a[c] - b[c];
    s += t * t;
  }
  return s;
}

}  // namespace

double kappa_of_distance(KernelOrder order, double r) { return kernel_r2(order.beta, r * r); }

double kappa(KernelOrder order, std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return kernel_r2(order.beta, r2);
}

void PointCloud::validate() const {
  if (dim < 1) throw DomainError("point cloud dimension must be positive");
  if (!(h > 0.0)) throw DomainError("cell width h must be positive");
  if (atoms.size() % static_cast<std::size_t>(dim) != 0) throw DomainError("atom array is not a multiple of dim");
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto x = atom(a), y = atom(b);
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto x = atom(order[i - 1]), y = atom(order[i]);
    if (std::equal(x.begin(), x.end(), y.begin())) throw DomainError("atoms must be pairwise distinct");
  }
}

PointCloud cube_cloud(int dim, double lo, double hi, double h) {
  if (dim < 1 || !(hi > lo) || !(h > 0.0)) throw DomainError("bad cube cloud parameters");
  const auto m = static_cast<std::size_t>(std::llround((hi - lo) / h));
  if (m == 0) throw DomainError("cell width exceeds the cube");
  const double step = (hi - lo) / static_cast<double>(m);
  PointCloud cloud{dim, {}, step};
  std::size_t total = 1;
  for (int c = 0; c < dim; ++c) total *= m;
  cloud.atoms.reserve(total * static_cast<std::size_t>(dim));
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t r = n;
    for (int c = dim - 1; c >= 0; --c) {
      idx[static_cast<std::size_t>(c)] = r % m;
      r /= m;
    }
    for (int c = 0; c < dim; ++c) cloud.atoms.push_back(lo + (static_cast<double>(idx[static_cast<std::size_t>(c)]) + 0.5) * step);
  }
  return cloud;
}

PointCloud ball_cloud(std::span<const double> center, double radius, double h) {
  const int dim = static_cast<int>(center.size());
  if (dim < 1 || !(radius > 0.0) || !(h > 0.0)) throw DomainError("bad ball cloud parameters");
  const auto m = static_cast<std::size_t>(std::ceil(2.0 * radius / h));
  PointCloud cloud{dim, {}, h};
  std::size_t total = 1;
  for (int c = 0; c < dim; ++c) total *= m;
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t r = n;
    double r2 = 0.0;
    for (int c = dim - 1; c >= 0; --c) {
      const auto uc = static_cast<std::size_t>(c);
      p[uc] = center[uc] - radius + (static_cast<double>(r % m) + 0.5) * h;
      r /= m;
      r2 += (p[uc] - center[uc]) * (p[uc] - center[uc]);
    }
    if (r2 <= radius * radius) cloud.atoms.insert(cloud.atoms.end(), p.begin(), p.end());
  }
  return cloud;
}

DiscreteMeasure DiscreteMeasure::uniform(PointCloud support) {
  const std::size_t n = support.size();
  DiscreteMeasure mu{std::move(support), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0)};
  return mu;
}

void DiscreteMeasure::validate() const {
  support.validate();
  if (weights.size() != support.size()) throw DomainError("one weight per atom required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("weights must sum to 1");
}

double cell_self_energy(KernelOrder order, int dim, double h, const EnergyOptions& opts) {
  if (order.beta < 0.0) return 1.0;
  if (opts.self_energy_samples == 0) throw DomainError("self-energy needs at least one sample");
  Rng rng(opts.seed, 0x5e1f);
  double sum = 0.0;
  for (std::size_t i = 0; i < opts.self_energy_samples; ++i) {
    double r2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double t = h * (rng.uniform() - rng.uniform());
      r2 += t * t;
    }
    sum += kernel_r2(order.beta, r2);
  }
  return sum / static_cast<double>(opts.self_energy_samples);
}

double energy(KernelOrder order, const DiscreteMeasure& mu, const EnergyOptions& opts) {
  mu.validate();
  if (order.beta < 0.0) return 1.0;
  const PointCloud& s = mu.support;
  const std::size_t n = s.size();
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mu.weights[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j)
      row += mu.weights[j] * kernel_r2(order.beta, dist2(s.atom(i).data(), s.atom(j).data(), s.dim));
    off += mu.weights[i] * row;
  }
  double diag = 0.0;
  for (double w : mu.weights) diag += w * w;
  return 2.0 * off + diag * cell_self_energy(order, s.dim, s.h, opts);
}

namespace {

// Kernel matrix of the support with the cell self-energy on the diagonal,
// accessed one column at a time.
class KernelColumns {
 public:
  KernelColumns(KernelOrder order, const PointCloud& s, double self)
      : beta_(order.beta), s_(s), self_(self) {}

  std::size_t size() const { return s_.size(); }
  double diag() const { return self_; }
  double at(std::size_t i, std::size_t j) const {
    if (i == j) return self_;
    return kernel_r2(beta_, dist2(s_.atom(i).data(), s_.atom(j).data(), s_.dim));
  }
  // out += scale * K[:, j]
  void axpy(std::size_t j, double scale, std::vector<double>& out) const {
    const double* xj = s_.atom(j).data();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += scale * (i == j ? self_ : kernel_r2(beta_, dist2(s_.atom(i).data(), xj, s_.dim)));
  }

 private:
  double beta_;
  const PointCloud& s_;
  double self_;
};

}  // namespace

CapacityResult capacity_estimate(KernelOrder order, const PointCloud& support, const CapacityOptions& opts) {
  CapacityResult out;
  if (support.size() == 0) return out;  // inf over no measures is +inf
  support.validate();
  const std::size_t n = support.size();
  if (order.beta < 0.0) {
    out.capacity = 1.0;
    out.energy = 1.0;
    out.converged = true;
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }

  const KernelColumns K(order, support, cell_self_energy(order, support.dim, support.h, opts.energy));
  std::vector<double>& w = out.weights;
  w.assign(n, 1.0 / static_cast<double>(n));
  // Potential u = K w; energy = w.u; gradient of the energy is 2u.
  std::vector<double> u(n, 0.0);
  auto recompute = [&] {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (w[j] > 0.0) K.axpy(j, w[j], u);
    return std::inner_product(w.begin(), w.end(), u.begin(), 0.0);
  };
  double e = recompute();

  std::size_t it = 0;
  for (; it < opts.max_iterations; ++it) {
    const auto best = static_cast<std::size_t>(std::min_element(u.begin(), u.end()) - u.begin());
    const double gap = 2.0 * (e - u[best]);
    out.duality_gap = gap;
    if (gap <= opts.gap_tol * e) {
      out.converged = true;
      break;
    }
    if (opts.step == StepRule::open_loop) {
      const double gamma = 2.0 / (static_cast<double>(it) + 2.0);
      for (std::size_t i = 0; i < n; ++i) {
        w[i] *= 1.0 - gamma;
        u[i] *= 1.0 - gamma;
      }
      w[best] += gamma;
      K.axpy(best, gamma, u);
      const double next = std::inner_product(w.begin(), w.end(), u.begin(), 0.0);
      const double change = std::abs(next - e) / next;
      e = next;
      if (change < opts.rel_change_tol) {
        out.converged = true;
        ++it;
        break;
      }
      continue;
    }
    std::size_t away = n;
    for (std::size_t i = 0; i < n; ++i)
      if (w[i] > 0.0 && (away == n || u[i] > u[away])) away = i;
    const double slope = u[away] - u[best];
    if (away == best || !(slope > 0.0)) {
      out.converged = true;
      break;
    }
    const double curvature = 2.0 * K.diag() - 2.0 * K.at(best, away);
    double gamma = curvature > 0.0 ? slope / curvature : w[away];
    gamma = std::min(gamma, w[away]);
    w[best] += gamma;
    w[away] -= gamma;
    // f(w + gamma (e_best - e_away)) - f(w)
    e += -2.0 * gamma * slope + gamma * gamma * curvature;
    K.axpy(best, gamma, u);
    K.axpy(away, -gamma, u);
    if ((it + 1) % 2000 == 0) e = recompute();
  }
  out.iterations = it;
  out.energy = recompute();
  out.capacity = 1.0 / out.energy;
  return out;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

void RegimeConfig::validate() const {
  if (N < 1 || d < 1 || k < 2) throw DomainError("regime needs N >= 1, d >= 1, k >= 2");
}

RegimeVerdict classify_regime(const RegimeConfig& cfg) {
  cfg.validate();
  RegimeVerdict v{};
  v.gap = cfg.gap();
  v.beta_star = cfg.beta_star();
  v.regime = v.gap < 0 ? Regime::subcritical : v.gap == 0 ? Regime::critical : Regime::supercritical;
  v.multiple_points_exist = v.gap < 0;
  v.capacity_vanishes = v.beta_star >= cfg.d;
  return v;
}

}  // namespace bsheet
