#include "bsheet/multipoints.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "bsheet/errors.hpp"
#include "bsheet/parallel.hpp"

namespace bsheet {

void SearchConfig::validate() const {
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw InvalidConfig(e.what());
  }
  if (!(window_lo > 0.0) || !(window_lo < window_hi))
    throw InvalidConfig("window needs 0 < window_lo < window_hi");
  if (!(delta > 0.0)) throw InvalidConfig("delta must be positive");
  const double diameter = (window_hi - window_lo) * std::sqrt(static_cast<double>(cfg.N));
  if (!(delta < diameter)) throw InvalidConfig("delta must be smaller than the window diameter");
  if (!(eps >= 0.0)) throw InvalidConfig("eps must be nonnegative");
  if (constraint.kind == CoordinateConstraint::Kind::shared) {
    const auto& c = constraint;
    if (c.i < 1 || c.j < 1 || c.i > cfg.k || c.j > cfg.k || c.i == c.j || c.l < 1 || c.l > cfg.N)
      throw InvalidConfig("shared constraint needs distinct i, j in 1..k and l in 1..N");
  }
}

bool tuple_admissible(std::span<const ParamPoint> tuple, const SearchConfig& sc) {
  const double d2min = sc.delta * sc.delta;
  for (std::size_t a = 0; a < tuple.size(); ++a) {
    for (std::size_t b = a + 1; b < tuple.size(); ++b) {
      double d2 = 0.0;
      bool some_shared = false;
      for (std::size_t l = 0; l < tuple[a].dim(); ++l) {
        const double diff = tuple[a][l] - tuple[b][l];
        d2 += diff * diff;
        some_shared = some_shared || diff == 0.0;
      }
      if (d2 < d2min) return false;
      if (sc.constraint.kind == CoordinateConstraint::Kind::distinct && some_shared) return false;
    }
  }
  if (sc.constraint.kind == CoordinateConstraint::Kind::shared) {
    const auto i = static_cast<std::size_t>(sc.constraint.i - 1);
    const auto j = static_cast<std::size_t>(sc.constraint.j - 1);
    const auto l = static_cast<std::size_t>(sc.constraint.l - 1);
    if (tuple[i][l] != tuple[j][l]) return false;
  }
  return true;
}

namespace {

struct FieldView {
  std::vector<std::size_t> nodes;  // candidate point indices, increasing
  std::vector<double> coords;      // N per candidate
  std::vector<double> values;      // d per candidate
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& k) const {
    std::size_t h = 0x9E3779B97F4A7C15ull;
    for (auto v : k) h ^= std::hash<std::int64_t>{}(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
  }
};

// Candidate lookup by value proximity: eps-buckets for finite positive eps,
// a sorted sweep on the first value coordinate otherwise.
class ValueIndex {
 public:
  ValueIndex(const FieldView& f, int d, double eps) : f_(f), d_(d), eps_(eps) {
    double vmax = 0.0;
    for (double v : f.values) vmax = std::max(vmax, std::abs(v));
    width_ = eps * (1.0 + 1e-9);
    bucketed_ = std::isfinite(eps) && eps > 0.0 && vmax / width_ < 1e15;
    const std::size_t n = f.nodes.size();
    if (bucketed_) {
      for (std::size_t c = 0; c < n; ++c) buckets_[key(value(c))].push_back(c);
    } else {
      order_.resize(n);
      for (std::size_t c = 0; c < n; ++c) order_[c] = c;
      std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return value(a)[0] < value(b)[0]; });
    }
  }

  const double* value(std::size_t c) const { return f_.values.data() + c * static_cast<std::size_t>(d_); }

  // Candidates whose values may lie within eps of v, increasing.
  std::vector<std::size_t> near(const double* v) const {
    std::vector<std::size_t> out;
    if (bucketed_) {
      const std::vector<std::int64_t> center = key(v);
      std::vector<std::int64_t> probe(center);
      std::vector<int> offset(static_cast<std::size_t>(d_), -1);
      while (true) {
        for (std::size_t c = 0; c < offset.size(); ++c) probe[c] = center[c] + offset[c];
        if (auto it = buckets_.find(probe); it != buckets_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        std::size_t c = 0;
        while (c < offset.size() && offset[c] == 1) offset[c++] = -1;
        if (c == offset.size()) break;
        ++offset[c];
      }
    } else {
      auto lo = std::lower_bound(order_.begin(), order_.end(), v[0] - eps_,
                                 [&](std::size_t a, double x) { return value(a)[0] < x; });
      for (auto it = lo; it != order_.end() && value(*it)[0] <= v[0] + eps_; ++it) out.push_back(*it);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::int64_t> key(const double* v) const {
    std::vector<std::int64_t> k(static_cast<std::size_t>(d_));
    for (int c = 0; c < d_; ++c) k[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(std::floor(v[c] / width_));
    return k;
  }

  const FieldView& f_;
  int d_;
  double eps_;
  double width_ = 0.0;
  bool bucketed_ = false;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> buckets_;
  std::vector<std::size_t> order_;
};

FieldView window_view(const FieldSample& field, const SearchConfig& sc) {
  FieldView v;
  const auto N = static_cast<std::size_t>(field.spec().N);
  for (std::size_t i = 0; i < field.point_count(); ++i) {
    const ParamPoint p = field.point(i);
    bool inside = true;
    for (std::size_t l = 0; l < N; ++l) inside = inside && p[l] >= sc.window_lo && p[l] <= sc.window_hi;
    if (!inside) continue;
    v.nodes.push_back(i);
    v.coords.insert(v.coords.end(), p.coords().begin(), p.coords().end());
    const auto val = field.value(i);
    v.values.insert(v.values.end(), val.begin(), val.end());
  }
  return v;
}

void check_inputs(std::span<const FieldSample> fields, const SearchConfig& sc) {
  sc.validate();
  const std::size_t expected = sc.mode == SearchMode::self ? 1 : static_cast<std::size_t>(sc.cfg.k);
  if (fields.size() != expected)
    throw InvalidConfig("search expects " + std::to_string(expected) + " field(s), got " + std::to_string(fields.size()));
  for (const auto& f : fields) {
    if (f.spec().N != sc.cfg.N || f.spec().d != sc.cfg.d) throw DimMismatch("field spec differs from (N, d)");
    if (!(f.spec() == fields.front().spec()) || f.layout() != fields.front().layout())
      throw DimMismatch("independent fields must share spec and layout");
    if (f.on_grid()) {
      const double limit = sc.delta / (3.0 * std::sqrt(static_cast<double>(sc.cfg.N)));
      for (std::size_t l = 0; l < f.grid().dim(); ++l)
        if (f.grid().width(l) > limit * (1.0 + 1e-12))
          throw ResolutionTooCoarse("grid width " + std::to_string(f.grid().width(l)) + " exceeds delta/(3 sqrt N) = " +
                                    std::to_string(limit));
    }
  }
}

// Depth-first tuple enumeration; emit returns false to stop.
class TupleSearch {
 public:
  TupleSearch(std::span<const FieldSample> fields, const SearchConfig& sc) : sc_(sc), k_(static_cast<std::size_t>(sc.cfg.k)) {
    N_ = static_cast<std::size_t>(sc.cfg.N);
    d_ = sc.cfg.d;
    views_.reserve(fields.size());
    for (const auto& f : fields) views_.push_back(window_view(f, sc));
    for (const auto& v : views_) index_.emplace_back(v, d_, sc.eps);
  }

  void run(const std::function<bool(const std::vector<std::size_t>&)>& emit) {
    emit_ = &emit;
    chosen_.assign(k_, 0);
    const FieldView& first = views_[0];
    for (std::size_t a = 0; a < first.nodes.size() && !stop_; ++a) {
      chosen_[0] = a;
      near_.assign(views_.size(), {});
      for (std::size_t f = 0; f < views_.size(); ++f) near_[f] = index_[f].near(index_[0].value(a));
      extend(1);
    }
  }

  const FieldView& view(std::size_t pos) const { return views_[field_of(pos)]; }
  const ValueIndex& index(std::size_t pos) const { return index_[field_of(pos)]; }
  std::size_t field_of(std::size_t pos) const { return sc_.mode == SearchMode::self ? 0 : pos; }

 private:
  bool pair_ok(std::size_t q, std::size_t p, std::size_t cq, std::size_t cp) const {
    const double* xq = view(q).coords.data() + cq * N_;
    const double* xp = view(p).coords.data() + cp * N_;
    double d2 = 0.0;
    bool some_shared = false;
    for (std::size_t l = 0; l < N_; ++l) {
      const double diff = xq[l] - xp[l];
      d2 += diff * diff;
      some_shared = some_shared || diff == 0.0;
    }
    if (d2 < sc_.delta * sc_.delta) return false;
    const auto& con = sc_.constraint;
    if (con.kind == CoordinateConstraint::Kind::distinct) return !some_shared;
    const auto i = static_cast<std::size_t>(con.i - 1), j = static_cast<std::size_t>(con.j - 1);
    if ((q == i && p == j) || (q == j && p == i)) return xq[con.l - 1] == xp[con.l - 1];
    return true;
  }

  bool values_close(std::size_t q, std::size_t p, std::size_t cq, std::size_t cp) const {
    const double* vq = index(q).value(cq);
    const double* vp = index(p).value(cp);
    double d2 = 0.0;
    for (int c = 0; c < d_; ++c) d2 += (vq[c] - vp[c]) * (vq[c] - vp[c]);
    return d2 <= sc_.eps * sc_.eps;
  }

  void extend(std::size_t p) {
    if (stop_) return;
    if (p == k_) {
      if (!(*emit_)(chosen_)) stop_ = true;
      return;
    }
    for (std::size_t c : near_[field_of(p)]) {
      if (sc_.mode == SearchMode::self && c <= chosen_[p - 1]) continue;
      bool ok = true;
      for (std::size_t q = 0; q < p && ok; ++q) ok = values_close(q, p, chosen_[q], c) && pair_ok(q, p, chosen_[q], c);
      if (!ok) continue;
      chosen_[p] = c;
      extend(p + 1);
      if (stop_) return;
    }
  }

  const SearchConfig& sc_;
  std::size_t k_;
  std::size_t N_ = 1;
  int d_ = 1;
  std::vector<FieldView> views_;
  std::vector<ValueIndex> index_;
  std::vector<std::vector<std::size_t>> near_;
  std::vector<std::size_t> chosen_;
  const std::function<bool(const std::vector<std::size_t>&)>* emit_ = nullptr;
  bool stop_ = false;
};

}  // namespace

std::vector<MultiPointHit> find_near_multiples(std::span<const FieldSample> fields, const SearchConfig& sc) {
  check_inputs(fields, sc);
  TupleSearch search(fields, sc);
  std::vector<MultiPointHit> hits;
  const auto N = static_cast<std::size_t>(sc.cfg.N);
  const auto d = static_cast<std::size_t>(sc.cfg.d);
  search.run([&](const std::vector<std::size_t>& chosen) {
    MultiPointHit hit;
    for (std::size_t p = 0; p < chosen.size(); ++p) {
      const auto& v = search.view(p);
      hit.nodes.push_back(v.nodes[chosen[p]]);
      hit.tuple.emplace_back(std::vector<double>(v.coords.begin() + static_cast<std::ptrdiff_t>(chosen[p] * N),
                                                 v.coords.begin() + static_cast<std::ptrdiff_t>((chosen[p] + 1) * N)));
      const double* val = search.index(p).value(chosen[p]);
      hit.witness.insert(hit.witness.end(), val, val + d);
    }
    for (std::size_t a = 0; a < chosen.size(); ++a)
      for (std::size_t b = a + 1; b < chosen.size(); ++b) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = hit.witness[a * d + c] - hit.witness[b * d + c];
          d2 += diff * diff;
        }
        hit.spread = std::max(hit.spread, std::sqrt(d2));
      }
    hits.push_back(std::move(hit));
    return true;
  });
  std::sort(hits.begin(), hits.end(), [](const MultiPointHit& a, const MultiPointHit& b) { return a.nodes < b.nodes; });
  return hits;
}

bool has_near_multiple(std::span<const FieldSample> fields, const SearchConfig& sc) {
  check_inputs(fields, sc);
  TupleSearch search(fields, sc);
  bool found = false;
  search.run([&](const std::vector<std::size_t>&) {
    found = true;
    return false;
  });
  return found;
}

CoveringCount covering_count(int n, const SearchConfig& sc, std::uint64_t cap) {
  sc.validate();
  if (n < 1) throw InvalidConfig("covering level n must be positive");
  if (sc.constraint.kind != CoordinateConstraint::Kind::shared)
    throw InvalidConfig("covering count needs a shared-coordinate constraint");
  const double side = std::ldexp(1.0, -2 * n);
  const double lo = std::max(sc.delta, sc.window_lo);
  const double K = sc.window_hi;
  // half-open dyadic intervals [j side, (j+1) side) meeting [lo, K]
  const auto first = static_cast<std::uint64_t>(std::floor(lo / side));
  const auto last = static_cast<std::uint64_t>(std::floor(K / side));
  CoveringCount out;
  out.boxes_per_axis = last - first + 1;
  const int free_dims = sc.cfg.k * sc.cfg.N - 1;
  out.log2_count = free_dims * std::log2(static_cast<double>(out.boxes_per_axis));
  out.analytic = std::pow(K - lo, free_dims) * std::ldexp(1.0, 2 * n * free_dims);
  std::uint64_t count = 1;
  for (int i = 0; i < free_dims; ++i) {
    if (__builtin_mul_overflow(count, out.boxes_per_axis, &count) || count > cap) {
      out.overflow = true;
      return out;
    }
  }
  out.count = count;
  return out;
}

namespace {

double det_of(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  return m.determinant();
}

}  // namespace

DensityReport density_lower_bound(const SearchConfig& sc, std::size_t trials, Rng& rng) {
  if (sc.cfg.k == 1) {
    SearchConfig pair = sc;  // a single point has no separation to check
    pair.cfg.k = 2;
    pair.validate();
  } else {
    sc.validate();
  }
  const auto k = static_cast<std::size_t>(sc.cfg.k);
  const auto N = static_cast<std::size_t>(sc.cfg.N);
  const double lo = std::max(sc.delta, sc.window_lo);
  const double hi = sc.window_hi;
  DensityReport rep;
  rep.min_det_values = std::numeric_limits<double>::infinity();
  rep.min_det_increments = std::numeric_limits<double>::infinity();
  std::vector<ParamPoint> tuple(k);
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k ? k - 1 : 0), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i + 1 < k; ++i) {
    diff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    diff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = -1.0;
  }
  const std::size_t max_attempts = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t attempts = 0;
    while (true) {
      if (++attempts > max_attempts) throw InvalidConfig("could not draw a delta-separated tuple in the window");
      for (auto& p : tuple) {
        std::vector<double> c(N);
        for (auto& x : c) x = rng.uniform(lo, hi);
        p = ParamPoint(std::move(c));
      }
      bool separated = true;
      for (std::size_t a = 0; a < k && separated; ++a)
        for (std::size_t b = a + 1; b < k && separated; ++b) {
          double d2 = 0.0;
          for (std::size_t l = 0; l < N; ++l) d2 += (tuple[a][l] - tuple[b][l]) * (tuple[a][l] - tuple[b][l]);
          separated = d2 >= sc.delta * sc.delta;
        }
      if (separated) break;
    }
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = sheet_covariance(tuple[a], tuple[b]);
    const double dv = det_of(cov);
    const double di = det_of(diff * cov * diff.transpose());
    if (dv < rep.min_det_values) {
      rep.min_det_values = dv;
      rep.worst_values_tuple = tuple;
    }
    rep.min_det_increments = std::min(rep.min_det_increments, di);
  }
  rep.trials = trials;
  return rep;
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {hits == 0 ? 0.0 : std::max(0.0, center - half), hits == trials ? 1.0 : std::min(1.0, center + half)};
}

std::vector<PhaseRow> mc_phase_probability(const SearchConfig& sc, std::span<const double> eps_ladder,
                                           std::size_t trials, std::uint64_t seed, const PhaseOptions& opts) {
  sc.validate();
  const SheetSpec spec{sc.cfg.N, sc.cfg.d};
  const GridSpec grid = GridSpec::cube(static_cast<std::size_t>(sc.cfg.N), sc.window_hi, opts.cells_per_axis);
  const std::size_t sheets = sc.mode == SearchMode::self ? 1 : static_cast<std::size_t>(sc.cfg.k);
  const std::size_t rungs = eps_ladder.size();
  std::vector<char> hit(trials * rungs, 0);

  parallel_for(trials, opts.jobs, [&](std::size_t t) {
    Rng rng = Rng::substream(seed, t);
    std::vector<FieldSample> fields;
    fields.reserve(sheets);
    for (std::size_t s = 0; s < sheets; ++s) fields.push_back(grid_sample(spec, grid, rng));
    for (std::size_t e = 0; e < rungs; ++e) {
      SearchConfig local = sc;
      local.eps = eps_ladder[e];
      hit[t * rungs + e] = has_near_multiple(fields, local) ? 1 : 0;
    }
  });

  const RegimeVerdict verdict = classify_regime(sc.cfg);
  std::vector<PhaseRow> rows;
  for (std::size_t e = 0; e < rungs; ++e) {
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) hits += static_cast<std::size_t>(hit[t * rungs + e]);
    rows.push_back({sc.cfg, verdict.regime, eps_ladder[e], trials, hits,
                    trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0,
                    wilson_interval(hits, trials), seed});
  }
  return rows;
}

std::string phase_csv_header() { return "N,d,k,regime,eps,trials,hits,estimate,wilson_lo,wilson_hi,seed"; }

std::string phase_csv_row(const PhaseRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.cfg.N << ',' << r.cfg.d << ',' << r.cfg.k << ',' << to_string(r.regime) << ',' << r.eps << ',' << r.trials
     << ',' << r.hits << ',' << r.estimate << ',' << r.wilson.lo << ',' << r.wilson.hi << ',' << r.seed;
  return os.str();
}

namespace {

// Membership in the union of the h-cells of a point cloud.
class CellSet {
 public:
  explicit CellSet(const PointCloud& cloud) : dim_(cloud.dim), h_(cloud.h) {
    if (cloud.size() == 0) return;
    origin_.assign(cloud.atom(0).begin(), cloud.atom(0).end());
    for (double& o : origin_) o -= 0.5 * h_;
    for (std::size_t i = 0; i < cloud.size(); ++i) cells_[key(cloud.atom(i).data())] = 1;
  }

  bool contains(const double* x) const { return !cells_.empty() && cells_.count(key(x)) > 0; }

 private:
  std::vector<std::int64_t> key(const double* x) const {
    std::vector<std::int64_t> k(static_cast<std::size_t>(dim_));
    for (int c = 0; c < dim_; ++c)
      k[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(std::floor((x[c] - origin_[static_cast<std::size_t>(c)]) / h_));
    return k;
  }

  int dim_;
  double h_;
  std::vector<double> origin_;
  std::unordered_map<std::vector<std::int64_t>, char, KeyHash> cells_;
};

}  // namespace

HittingReport hitting_capacity_comparison(const RegimeConfig& cfg, const Box& r, const PointCloud& target,
                                   std::size_t trials, std::uint64_t seed, const HittingOptions& opts) {
  if (cfg.N < 1 || cfg.d < 1) throw InvalidConfig("need N >= 1 and d >= 1");
  if (!(cfg.d > 2 * cfg.N)) throw InvalidConfig("hitting comparison needs d > 2N");
  if (r.dim() != static_cast<std::size_t>(cfg.N)) throw DimMismatch("box dimension differs from N");
  if (target.size() > 0 && target.dim != cfg.d) throw DimMismatch("target dimension differs from d");

  HittingReport rep;
  rep.trials = trials;
  if (target.size() == 0) {
    rep.wilson = wilson_interval(0, trials);
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    rep.undefined_ratio = true;
    return rep;
  }

  const SheetSpec spec{cfg.N, cfg.d};
  const GridSpec grid = GridSpec::from_origin(r.upper(), std::vector<std::size_t>(r.dim(), opts.cells_per_axis));
  std::vector<std::size_t> in_box;
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    if (r.contains(grid.node(i))) in_box.push_back(i);
  const CellSet cells(target);

  std::vector<char> hit(trials, 0);
  parallel_for(trials, opts.jobs, [&](std::size_t t) {
    Rng rng = Rng::substream(seed, t);
    const FieldSample f = grid_sample(spec, grid, rng);
    for (std::size_t i : in_box)
      if (cells.contains(f.value(i).data())) {
        hit[t] = 1;
        break;
      }
  });
  for (char c : hit) rep.hits += static_cast<std::size_t>(c);
  rep.probability = trials ? static_cast<double>(rep.hits) / static_cast<double>(trials) : 0.0;
  rep.wilson = wilson_interval(rep.hits, trials);
  rep.capacity = capacity_estimate(KernelOrder{static_cast<double>(cfg.d - 2 * cfg.N)}, target, opts.capacity).capacity;
  if (rep.capacity == 0.0) {
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    rep.undefined_ratio = true;
  } else {
    rep.ratio = rep.probability / rep.capacity;
  }
  return rep;
}

}  // namespace bsheet
