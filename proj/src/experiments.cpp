#include "bsheet/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "bsheet/capacity.hpp"
#include "bsheet/errors.hpp"
#include "bsheet/gaussian.hpp"
#include "bsheet/girsanov.hpp"
#include "bsheet/multipoints.hpp"
#include "bsheet/parallel.hpp"
#include "bsheet/pinning.hpp"
#include "bsheet/sheet.hpp"

namespace bsheet {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct OutputFile {
  std::string name;
  std::string content;
};
using Checks = std::vector<CheckResult>;
using Runner = std::function<std::vector<OutputFile>(const ExperimentConfig&, Checks&)>;
using Precheck = std::function<void(const json&)>;

struct ParamDesc {
  std::string name;
  std::string type;  // integer, number, string, array
  json fallback;
  std::string help;
};

struct KindDesc {
  std::string name;
  std::string description;
  std::string backs;
  std::vector<ParamDesc> params;
  Precheck precheck;
  Runner run;
};

// ---------------------------------------------------------------- helpers

class Csv {
 public:
  explicit Csv(const std::string& header) { os_ << header << '\n'; }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << fmt(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
  }
  static std::string fmt(const std::string& v) { return v; }
  static std::string fmt(const char* v) { return v; }
  template <typename T>
  static std::string fmt(const T& v) {
    return std::to_string(v);
  }

  std::ostringstream os_;
};

CheckResult at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

CheckResult at_least(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value >= threshold, value, threshold, std::move(detail)};
}

template <typename T>
T get(const ExperimentConfig& c, const std::string& key) {
  return c.params.at(key).get<T>();
}

std::string point_str(const ParamPoint& p) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t l = 0; l < p.dim(); ++l) s << (l ? " " : "") << p[l];
  return s.str();
}

Box random_box(std::size_t N, Rng& rng) {
  std::vector<double> lo(N), hi(N);
  for (std::size_t l = 0; l < N; ++l) {
    lo[l] = rng.uniform(0.1, 1.2);
    hi[l] = lo[l] + rng.uniform(0.2, 0.8);
  }
  return Box(lo, hi);
}

ParamPoint random_in(const Box& r, Rng& rng) {
  std::vector<double> t(r.dim());
  for (std::size_t l = 0; l < r.dim(); ++l) t[l] = rng.uniform(r.lo(l), r.hi(l));
  return ParamPoint(t);
}

ParamPoint random_admissible(const Box& r, CornerMode mode, Rng& rng) {
  const std::size_t N = r.dim();
  std::vector<double> s(N);
  for (std::size_t l = 0; l < N; ++l) {
    const bool past_only = mode == CornerMode::lower_face && l + 1 == N;
    if (past_only || rng.uniform() < 0.5)
      s[l] = rng.uniform(0.0, r.lo(l));
    else
      s[l] = rng.uniform(r.hi(l), r.hi(l) + 1.0);
  }
  return ParamPoint(s);
}

// k boxes in [1/M, M]^N with disjoint projections on every axis, increasing
// on the last axis.
DisjointBoxFamily random_family(std::size_t N, std::size_t k, double M, Rng& rng) {
  std::vector<std::vector<double>> lo(k, std::vector<double>(N)), hi(k, std::vector<double>(N));
  const double a = 1.0 / M, slot = (M - a) / static_cast<double>(2 * k);
  for (std::size_t l = 0; l < N; ++l) {
    std::vector<std::size_t> perm(k);
    for (std::size_t j = 0; j < k; ++j) perm[j] = j;
    if (l + 1 < N)
      for (std::size_t j = k - 1; j > 0; --j) {
        const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(j + 1));
        std::swap(perm[j], perm[std::min(pick, j)]);
      }
    for (std::size_t j = 0; j < k; ++j) {
      const auto s = static_cast<double>(2 * perm[j]);
      lo[j][l] = a + (s + rng.uniform(0.05, 0.95)) * slot;
      hi[j][l] = a + (s + 1.0 + rng.uniform(0.05, 0.95)) * slot;
    }
  }
  std::vector<Box> boxes;
  for (std::size_t j = 0; j < k; ++j) boxes.emplace_back(lo[j], hi[j]);
  return DisjointBoxFamily(std::move(boxes), M);
}

SearchMode parse_mode(const std::string& m) {
  if (m == "self") return SearchMode::self;
  if (m == "independent") return SearchMode::independent;
  throw InvalidConfig("mode must be self or independent, got " + m);
}

void require_check(const json& p, std::initializer_list<const char*> allowed) {
  const auto c = p.at("check").get<std::string>();
  for (const char* a : allowed)
    if (c == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw InvalidConfig("check must be one of {" + list + "}, got " + c);
}

void require_positive(const json& p, std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (!(p.at(k).get<double>() > 0.0)) throw InvalidConfig(std::string(k) + " must be positive");
}

// ---------------------------------------------------------------- pinning

std::vector<OutputFile> run_pinning(const ExperimentConfig& c, Checks& checks) {
  const auto check = get<std::string>(c, "check");
  const std::uint64_t seed = c.seed;

  if (check == "identities") {
    const auto triples = get<std::size_t>(c, "triples");
    const auto max_N = get<std::size_t>(c, "max_N");
    const auto tol = get<double>(c, "residual_tol");
    struct Row {
      std::size_t N;
      double res[2], sum_err[2], min_w[2];
    };
    std::vector<Row> rows(triples);
    parallel_for(triples, c.effective_jobs(), [&](std::size_t i) {
      Rng rng = Rng::substream(seed, i);
      const std::size_t N = 1 + i % max_N;
      const Box r = random_box(N, rng);
      const ParamPoint t = random_in(r, rng);
      Row row{N, {}, {}, {}};
      for (int m = 0; m < 2; ++m) {
        const CornerMode mode = m == 0 ? CornerMode::full : CornerMode::lower_face;
        const ParamPoint s = random_admissible(r, mode, rng);
        row.res[m] = orthogonality_residual(r, t, s, mode);
        const auto w = corner_weights(r, t, mode);
        double sum = 0.0, mn = std::numeric_limits<double>::infinity();
        for (double x : w.weights) {
          sum += x;
          mn = std::min(mn, x);
        }
        row.sum_err[m] = std::abs(sum - 1.0);
        row.min_w[m] = mn;
      }
      rows[i] = row;
    });
    Csv csv("triple,N,mode,residual,weight_sum_error,min_weight");
    double max_res = 0.0, max_sum = 0.0, min_w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < triples; ++i)
      for (int m = 0; m < 2; ++m) {
        csv.row(i, rows[i].N, m == 0 ? "full" : "lower_face", rows[i].res[m], rows[i].sum_err[m], rows[i].min_w[m]);
        max_res = std::max(max_res, rows[i].res[m]);
        max_sum = std::max(max_sum, rows[i].sum_err[m]);
        min_w = std::min(min_w, rows[i].min_w[m]);
      }
    checks.push_back(at_most("max orthogonality residual", max_res, tol));
    checks.push_back(at_most("max |sum of corner weights - 1|", max_sum, tol));
    checks.push_back(at_least("min corner weight", min_w, 0.0));
    return {{"pinning_identities.csv", csv.str()}};
  }

  if (check == "oracle") {
    const auto instances = get<std::size_t>(c, "instances");
    const auto max_N = get<std::size_t>(c, "oracle_max_N");
    const auto tol = get<double>(c, "oracle_tol");
    std::vector<std::pair<std::size_t, double>> rows(instances);
    parallel_for(instances, c.effective_jobs(), [&](std::size_t i) {
      Rng rng = Rng::substream(seed, i);
      const std::size_t N = 1 + i % max_N;
      const Box r = random_box(N, rng);
      const ParamPoint t = random_in(r, rng);
      const std::size_t nc = corner_count(N, CornerMode::full);
      std::vector<ParamPoint> pts;
      for (std::size_t q = 0; q < nc; ++q) pts.push_back(box_corner(r, q, CornerMode::full));
      const FieldSample corners = exact_sample(SheetSpec{static_cast<int>(N), 1}, pts, rng);
      pts.push_back(t);
      const CovMatrix cov = sheet_covariance_matrix(pts);
      std::vector<std::size_t> idx(nc);
      for (std::size_t q = 0; q < nc; ++q) idx[q] = q;
      const GaussianVector cond =
          condition_gaussian(GaussianVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc + 1)), cov), idx,
                             corners.values());
      const double pinned = bar_B(r, t, corners.values(), 1)[0];
      rows[i] = {N, std::abs(pinned - cond.mean(static_cast<Eigen::Index>(nc)))};
    });
    Csv csv("instance,N,abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
      csv.row(i, rows[i].first, rows[i].second);
      worst = std::max(worst, rows[i].second);
    }
    checks.push_back(at_most("max |bar_B - conditional mean|", worst, tol));
    return {{"pinning_oracle.csv", csv.str()}};
  }

  // sampler: grid vs exact covariance on shared nodes
  const auto N = get<std::size_t>(c, "sampler_N");
  const auto n_nodes = get<std::size_t>(c, "sampler_nodes");
  const auto trials = get<std::size_t>(c, "sampler_trials");
  const auto cells = get<std::size_t>(c, "sampler_cells");
  const auto z_max = get<double>(c, "z");
  const GridSpec grid = GridSpec::cube(N, get<double>(c, "sampler_upper"), cells);
  grid.validate();
  std::vector<std::size_t> nodes;
  {
    Rng pick(seed, std::uint64_t{1} << 40);
    while (nodes.size() < n_nodes) {
      const auto i = static_cast<std::size_t>(pick.uniform() * static_cast<double>(grid.node_count()));
      const auto mi = grid.multi_index(i);
      if (std::find(mi.begin(), mi.end(), std::size_t{0}) != mi.end()) continue;
      if (std::find(nodes.begin(), nodes.end(), i) == nodes.end()) nodes.push_back(i);
    }
    std::sort(nodes.begin(), nodes.end());
  }
  std::vector<ParamPoint> pts;
  for (auto i : nodes) pts.push_back(grid.node(i));
  const SheetSpec spec{static_cast<int>(N), 1};
  const ExactSampler exact(spec, pts);
  const std::size_t n = nodes.size();
  std::vector<double> xg(trials * n), xe(trials * n);
  parallel_for(trials, c.effective_jobs(), [&](std::size_t t) {
    Rng rng = Rng::substream(seed, t);
    const FieldSample g = grid_sample(spec, grid, rng);
    const FieldSample e = exact.sample(rng);
    for (std::size_t a = 0; a < n; ++a) {
      xg[t * n + a] = g.value(nodes[a])[0];
      xe[t * n + a] = e.value(a)[0];
    }
  });
  auto sample_cov = [&](const std::vector<double>& x, std::size_t a, std::size_t b) {
    double ma = 0.0, mb = 0.0, s = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      ma += x[t * n + a];
      mb += x[t * n + b];
    }
    ma /= static_cast<double>(trials);
    mb /= static_cast<double>(trials);
    for (std::size_t t = 0; t < trials; ++t) s += (x[t * n + a] - ma) * (x[t * n + b] - mb);
    return s / static_cast<double>(trials - 1);
  };
  Csv csv("i,j,t_i,t_j,cov_exact_formula,cov_grid,cov_exact_sampler,se,z");
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      const double saa = sheet_covariance(pts[a], pts[a]), sbb = sheet_covariance(pts[b], pts[b]);
      const double sab = sheet_covariance(pts[a], pts[b]);
      const double se = std::sqrt(2.0 * (saa * sbb + sab * sab) / static_cast<double>(trials));
      const double cg = sample_cov(xg, a, b), ce = sample_cov(xe, a, b);
      const double z = std::abs(cg - ce) / se;
      worst = std::max(worst, z);
      csv.row(a, b, point_str(pts[a]), point_str(pts[b]), sab, cg, ce, se, z);
    }
  checks.push_back(at_most("max |cov_grid - cov_exact| in standard errors", worst, z_max));
  return {{"pinning_sampler.csv", csv.str()}};
}

// ---------------------------------------------------------------- girsanov

std::vector<OutputFile> run_girsanov(const ExperimentConfig& c, Checks& checks) {
  const auto check = get<std::string>(c, "check");
  const std::uint64_t seed = c.seed;

  if (check == "telescoping") {
    const auto families = get<std::size_t>(c, "families");
    const auto max_N = get<std::size_t>(c, "max_N");
    const auto max_k = get<std::size_t>(c, "max_k");
    const auto points = get<std::size_t>(c, "points_per_family");
    const auto M = get<double>(c, "M");
    const auto tol = get<double>(c, "tol");
    struct Row {
      std::size_t N, k;
      int d;
      double diff, below;
    };
    std::vector<Row> rows(families);
    parallel_for(families, c.effective_jobs(), [&](std::size_t f) {
      Rng rng = Rng::substream(seed, f);
      const std::size_t N = 1 + f % max_N;
      const std::size_t k = 2 + (f / max_N) % (max_k - 1);
      const int d = 1 + static_cast<int>(f % 2);
      const DriftSpec spec(random_family(N, k, M, rng));
      const std::size_t nf = corner_count(N, CornerMode::lower_face);
      std::vector<double> face(nf * static_cast<std::size_t>(d));
      for (auto& v : face) v = rng.normal();
      const Box& last = spec.last();
      std::vector<ParamPoint> ts;
      for (std::size_t q = 0; q < corner_count(N, CornerMode::full); ++q) ts.push_back(box_corner(last, q, CornerMode::full));
      for (std::size_t q = 0; q < points; ++q) ts.push_back(random_in(last, rng));
      Row row{N, k, d, 0.0, 0.0};
      for (const auto& t : ts) {
        const auto lhs = drift_integral(spec, t, face, d);
        const auto rhs = tilde_B(spec.region_R(), t, face, d);
        for (std::size_t c2 = 0; c2 < lhs.size(); ++c2) row.diff = std::max(row.diff, std::abs(lhs[c2] - rhs[c2]));
      }
      for (std::size_t q = 0; q < points; ++q) {
        std::vector<double> t(N);
        for (std::size_t l = 0; l + 1 < N; ++l) t[l] = rng.uniform(0.0, M);
        t[N - 1] = rng.uniform(0.0, spec.level());
        if (q == 0) t[N - 1] = spec.level();
        for (double v : drift_integral(spec, ParamPoint(t), face, d)) row.below = std::max(row.below, std::abs(v));
      }
      rows[f] = row;
    });
    Csv csv("family,N,k,d,max_diff_on_last_box,max_abs_below_level");
    double worst = 0.0, below = 0.0;
    for (std::size_t f = 0; f < families; ++f) {
      csv.row(f, rows[f].N, rows[f].k, rows[f].d, rows[f].diff, rows[f].below);
      worst = std::max(worst, rows[f].diff);
      below = std::max(below, rows[f].below);
    }
    checks.push_back(at_most("max |drift_integral - tilde_B| on last box", worst, tol));
    checks.push_back(at_most("max |drift_integral| below level (exact zero)", below, 0.0));
    return {{"girsanov_telescoping.csv", csv.str()}};
  }

  // independence of the decoupled last box from the earlier box
  const auto trials = get<std::size_t>(c, "trials");
  const auto cells = get<std::size_t>(c, "cells");
  const auto z_max = get<double>(c, "z");
  const double M = 2.0;
  const DriftSpec spec(DisjointBoxFamily({Box({0.5, 0.5}, {0.8, 0.8}), Box({1.0, 1.0}, {1.5, 1.5})}, M));
  const GridSpec grid = GridSpec::cube(2, M, cells);
  auto probe_nodes = [&](const Box& b) {
    std::vector<ParamPoint> ps;
    for (std::size_t q = 0; q < 4; ++q) ps.push_back(box_corner(b, q, CornerMode::full));
    ps.push_back(ParamPoint{0.5 * (b.lo(0) + b.hi(0)), 0.5 * (b.lo(1) + b.hi(1))});
    std::vector<std::size_t> idx;
    for (const auto& p : ps) {
      const auto i = grid.find_node(p);
      if (!i) throw InvalidConfig("cells must put the box corners and centers on grid nodes");
      idx.push_back(*i);
    }
    return idx;
  };
  const auto in_last = probe_nodes(spec.last());
  const auto in_first = probe_nodes(spec.family().box(0));
  const std::size_t a = in_last.size(), b = in_first.size();
  std::vector<double> hat(trials * a), raw(trials * a), early(trials * b);
  parallel_for(trials, c.effective_jobs(), [&](std::size_t t) {
    Rng rng = Rng::substream(seed, t);
    const FieldSample f = grid_sample(SheetSpec{2, 1}, grid, rng);
    const std::vector<double> face = face_values_from(spec, f);
    for (std::size_t i = 0; i < a; ++i) {
      hat[t * a + i] = f.value(in_last[i])[0] - drift_integral(spec, grid.node(in_last[i]), face, 1)[0];
      raw[t * a + i] = f.value(in_last[i])[0];
    }
    for (std::size_t j = 0; j < b; ++j) early[t * b + j] = f.value(in_first[j])[0];
  });
  auto cross = [&](const std::vector<double>& x, std::size_t i, std::size_t j) {
    double mx = 0.0, my = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      mx += x[t * a + i];
      my += early[t * b + j];
    }
    mx /= static_cast<double>(trials);
    my /= static_cast<double>(trials);
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double p = (x[t * a + i] - mx) * (early[t * b + j] - my);
      s += p;
      s2 += p * p;
    }
    const double n = static_cast<double>(trials);
    const double mean = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    return std::pair{mean, se};
  };
  Csv csv("t_last,t_first,cross_cov_decoupled,se,z,cross_cov_raw,z_raw");
  double worst = 0.0, weakest_raw = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const auto [ch, seh] = cross(hat, i, j);
      const auto [cr, ser] = cross(raw, i, j);
      const double z = std::abs(ch) / seh, zr = std::abs(cr) / ser;
      worst = std::max(worst, z);
      weakest_raw = std::min(weakest_raw, zr);
      csv.row(point_str(grid.node(in_last[i])), point_str(grid.node(in_first[j])), ch, seh, z, cr, zr);
    }
  checks.push_back(at_most("max |z| of decoupled cross-covariance", worst, z_max,
                           "raw field min |z| = " + std::to_string(weakest_raw)));
  return {{"girsanov_independence.csv", csv.str()}};
}

// ---------------------------------------------------------------- density

SearchConfig density_config(const json& row) {
  if (!row.is_array() || row.size() != 4) throw InvalidConfig("density cases are [N, k, delta, K]");
  SearchConfig sc;
  sc.cfg = RegimeConfig{row[0].get<int>(), 1, row[1].get<int>()};
  sc.delta = row[2].get<double>();
  sc.window_lo = sc.delta;
  sc.window_hi = row[3].get<double>();
  return sc;
}

std::vector<OutputFile> run_density(const ExperimentConfig& c, Checks& checks) {
  const auto trials = get<std::size_t>(c, "trials");
  Csv csv("N,k,delta,K,trials,min_det_values,min_det_increments");
  std::size_t case_no = 0;
  for (const auto& row : c.params.at("cases")) {
    const SearchConfig sc = density_config(row);
    Rng rng(c.seed, case_no++);
    const DensityReport rep = density_lower_bound(sc, trials, rng);
    csv.row(sc.cfg.N, sc.cfg.k, sc.delta, sc.window_hi, trials, rep.min_det_values, rep.min_det_increments);
    const std::string tag = "(N,k,delta,K)=(" + std::to_string(sc.cfg.N) + "," + std::to_string(sc.cfg.k) + "," +
                            row[2].dump() + "," + row[3].dump() + ")";
    CheckResult v{"min det of values " + tag, rep.min_det_values > 0.0, rep.min_det_values, 0.0, "strictly positive"};
    CheckResult d{"min det of increments " + tag, rep.min_det_increments > 0.0, rep.min_det_increments, 0.0,
                  "strictly positive"};
    checks.push_back(v);
    checks.push_back(d);
  }
  return {{"density.csv", csv.str()}};
}

// ---------------------------------------------------------------- covering

std::vector<OutputFile> run_covering(const ExperimentConfig& c, Checks& checks) {
  const auto n_min = get<int>(c, "n_min"), n_max = get<int>(c, "n_max");
  const auto slope_tol = get<double>(c, "slope_tol");
  Csv csv("k,N,n,count,log2_count,log2_analytic");
  for (const auto& pair : c.params.at("pairs")) {
    SearchConfig sc;
    sc.cfg = RegimeConfig{pair[1].get<int>(), 1, pair[0].get<int>()};
    sc.delta = get<double>(c, "delta");
    sc.window_lo = get<double>(c, "window_lo");
    sc.window_hi = get<double>(c, "window_hi");
    sc.constraint = CoordinateConstraint::shared(1, 2, 1);
    std::vector<double> xs, ys;
    for (int n = n_min; n <= n_max; ++n) {
      const CoveringCount cc = covering_count(n, sc);
      csv.row(sc.cfg.k, sc.cfg.N, n, cc.count ? std::to_string(*cc.count) : std::string("overflow"), cc.log2_count,
              std::log2(cc.analytic));
      xs.push_back(n);
      ys.push_back(cc.log2_count);
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    const double expected = 2.0 * (sc.cfg.k * sc.cfg.N - 1);
    checks.push_back(at_most("|slope - 2(kN-1)| for (k,N)=(" + std::to_string(sc.cfg.k) + "," +
                                 std::to_string(sc.cfg.N) + ")",
                             std::abs(slope - expected), slope_tol, "slope = " + std::to_string(slope)));
  }

  const auto max_N = get<int>(c, "identity_max_N");
  Csv ident("N,d,k,gap,density_exponent,regime");
  std::size_t total = 0, bad = 0;
  for (int N = 1; N <= max_N; ++N)
    for (int k = 2; k <= 2 * N + 1; ++k) {
      if ((2 * k * N) % (k - 1) != 0) continue;
      const RegimeConfig cfg{N, 2 * k * N / (k - 1), k};
      const RegimeVerdict v = classify_regime(cfg);
      const int exponent = cfg.d * (k - 1) - 2 * (k * N - 1);
      ++total;
      if (exponent != 2 || v.regime != Regime::critical) ++bad;
      ident.row(N, cfg.d, k, v.gap, exponent, to_string(v.regime));
    }
  checks.push_back(at_most("critical triples violating d(k-1) - 2(kN-1) = 2", static_cast<double>(bad), 0.0,
                           std::to_string(total) + " critical triples"));
  return {{"covering.csv", csv.str()}, {"critical_identity.csv", ident.str()}};
}

// ---------------------------------------------------------------- capacity

std::vector<OutputFile> run_capacity(const ExperimentConfig& c, Checks& checks) {
  const auto dim = get<int>(c, "dim");
  const auto levels = get<std::vector<double>>(c, "h_levels");
  const auto tol = get<double>(c, "stability_tol");
  CapacityOptions opts;
  opts.energy.self_energy_samples = get<std::size_t>(c, "self_energy_samples");
  opts.energy.seed = c.seed;
  Csv csv("beta,h,atoms,capacity,energy,duality_gap,iterations,converged");
  std::map<double, std::vector<double>> caps;
  const double betas[] = {static_cast<double>(dim), static_cast<double>(dim - 1), -1.0};
  bool all_converged = true;
  for (double beta : betas)
    for (double h : levels) {
      const PointCloud cube = cube_cloud(dim, 0.0, 1.0, h);
      const CapacityResult r = capacity_estimate(KernelOrder{beta}, cube, opts);
      all_converged = all_converged && r.converged;
      caps[beta].push_back(r.capacity);
      csv.row(beta, cube.h, cube.size(), r.capacity, r.energy, r.duality_gap, r.iterations, r.converged ? 1 : 0);
    }
  const auto& top = caps[dim];
  std::size_t rises = 0;
  for (std::size_t i = 1; i < top.size(); ++i) rises += top[i] < top[i - 1] ? 0 : 1;
  checks.push_back(at_most("non-decreasing steps of the beta = d capacity", static_cast<double>(rises), 0.0));
  const auto& sub = caps[dim - 1];
  const auto [lo, hi] = std::minmax_element(sub.begin(), sub.end());
  checks.push_back(at_most("relative spread of the beta = d-1 capacity", (*hi - *lo) / *lo, tol));
  double off = 0.0;
  for (double v : caps[-1.0]) off = std::max(off, std::abs(v - 1.0));
  checks.push_back(at_most("|capacity - 1| for beta < 0", off, 0.0));
  checks.push_back({"Frank-Wolfe converged at every level", all_converged, all_converged ? 1.0 : 0.0, 1.0, ""});
  return {{"capacity.csv", csv.str()}};
}

// ---------------------------------------------------------------- phase

// All tuples by direct enumeration; reference for the bucketed search.
std::vector<std::vector<std::size_t>> exhaustive_search(std::span<const FieldSample> fields, const SearchConfig& sc) {
  const auto k = static_cast<std::size_t>(sc.cfg.k);
  const std::size_t n = fields.front().point_count();
  const bool self = sc.mode == SearchMode::self;
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> idx(k, 0);
  auto in_window = [&](const ParamPoint& p) {
    for (std::size_t l = 0; l < p.dim(); ++l)
      if (p[l] < sc.window_lo || p[l] > sc.window_hi) return false;
    return true;
  };
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == k) {
      std::vector<ParamPoint> tuple;
      for (std::size_t p = 0; p < k; ++p) tuple.push_back(fields[self ? 0 : p].point(idx[p]));
      if (!tuple_admissible(tuple, sc)) return;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
          const auto va = fields[self ? 0 : a].value(idx[a]), vb = fields[self ? 0 : b].value(idx[b]);
          double d2 = 0.0;
          for (std::size_t q = 0; q < va.size(); ++q) d2 += (va[q] - vb[q]) * (va[q] - vb[q]);
          if (d2 > sc.eps * sc.eps) return;
        }
      out.push_back(idx);
      return;
    }
    for (std::size_t i = self && pos > 0 ? idx[pos - 1] + 1 : 0; i < n; ++i) {
      if (!in_window(fields[self ? 0 : pos].point(i))) continue;
      idx[pos] = i;
      rec(pos + 1);
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<OutputFile> run_phase(const ExperimentConfig& c, Checks& checks) {
  const auto check = get<std::string>(c, "check");
  const auto window_lo = get<double>(c, "window_lo"), window_hi = get<double>(c, "window_hi");
  const auto delta = get<double>(c, "delta");

  if (check == "ordering") {
    const auto eps = get<std::vector<double>>(c, "eps");
    const auto trials = get<std::size_t>(c, "trials");
    PhaseOptions opts;
    opts.cells_per_axis = get<std::size_t>(c, "cells_per_axis");
    opts.jobs = c.effective_jobs();
    const auto super = c.params.at("supercritical").get<std::vector<int>>();
    const auto sub = c.params.at("subcritical").get<std::vector<int>>();
    std::vector<OutputFile> files;
    for (const auto& m : c.params.at("modes")) {
      const std::string mode = m.get<std::string>();
      std::vector<PhaseRow> rows[2];
      int slot = 0;
      for (const auto& triple : {super, sub}) {
        SearchConfig sc;
        sc.cfg = RegimeConfig{triple[0], triple[1], triple[2]};
        sc.window_lo = window_lo;
        sc.window_hi = window_hi;
        sc.delta = delta;
        sc.mode = parse_mode(mode);
        rows[slot++] = mc_phase_probability(sc, eps, trials, c.seed, opts);
      }
      std::string body = phase_csv_header() + "\n";
      for (const auto& block : rows)
        for (const auto& r : block) body += phase_csv_row(r) + "\n";
      files.push_back({"phase_" + mode + ".csv", body});
      for (std::size_t e = 0; e < eps.size(); ++e) {
        const auto& hi_row = rows[0][e];
        const auto& lo_row = rows[1][e];
        std::ostringstream name;
        name << mode << " eps=" << eps[e] << ": wilson_lo(sub) - wilson_hi(super)";
        std::ostringstream detail;
        detail << "super " << hi_row.estimate << " [" << hi_row.wilson.lo << ", " << hi_row.wilson.hi << "], sub "
               << lo_row.estimate << " [" << lo_row.wilson.lo << ", " << lo_row.wilson.hi << "]";
        const double margin = lo_row.wilson.lo - hi_row.wilson.hi;
        checks.push_back({name.str(), margin > 0.0 && hi_row.estimate < lo_row.estimate, margin, 0.0, detail.str()});
      }
    }
    return files;
  }

  // search-oracle
  const auto instances = get<std::size_t>(c, "instances");
  const auto max_nodes = get<std::size_t>(c, "oracle_max_nodes");
  Csv csv("instance,N,d,mode,nodes,eps,hits_search,hits_exhaustive,equal");
  std::size_t mismatches = 0;
  std::size_t total_hits = 0;
  const double eps_choices[] = {0.05, 0.1, 0.2, 0.5};
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = Rng::substream(c.seed, i);
    SearchConfig sc;
    const int N = 1 + static_cast<int>(i % 2);
    const int d = 1 + static_cast<int>((i / 2) % 3);
    sc.cfg = RegimeConfig{N, d, 2};
    sc.window_lo = window_lo;
    sc.window_hi = window_hi;
    sc.delta = delta;
    sc.mode = (i / 6) % 2 == 0 ? SearchMode::self : SearchMode::independent;
    sc.eps = eps_choices[(i / 12) % 4];
    // finest grid within the node budget whose width respects delta / (3 sqrt N)
    std::size_t cells = N == 1 ? max_nodes - 1 : static_cast<std::size_t>(std::sqrt(static_cast<double>(max_nodes))) - 1;
    const GridSpec grid = GridSpec::cube(static_cast<std::size_t>(N), window_hi, cells);
    std::vector<FieldSample> fields;
    const std::size_t sheets = sc.mode == SearchMode::self ? 1 : 2;
    for (std::size_t s = 0; s < sheets; ++s) fields.push_back(grid_sample(SheetSpec{N, d}, grid, rng));
    const auto fast = find_near_multiples(fields, sc);
    const auto slow = exhaustive_search(fields, sc);
    std::vector<std::vector<std::size_t>> got;
    for (const auto& h : fast) got.push_back(h.nodes);
    const bool equal = got == slow;
    mismatches += equal ? 0 : 1;
    total_hits += slow.size();
    csv.row(i, N, d, sc.mode == SearchMode::self ? "self" : "independent", grid.node_count(), sc.eps, got.size(),
            slow.size(), equal ? 1 : 0);
  }
  checks.push_back(at_most("instances where search and exhaustive enumeration differ", static_cast<double>(mismatches),
                           0.0, std::to_string(total_hits) + " tuples in total"));
  return {{"search_oracle.csv", csv.str()}};
}

// ---------------------------------------------------------------- hitting

std::vector<OutputFile> run_hitting(const ExperimentConfig& c, Checks& checks) {
  const RegimeConfig cfg{get<int>(c, "N"), get<int>(c, "d"), 2};
  const Box r(get<std::vector<double>>(c, "box_lo"), get<std::vector<double>>(c, "box_hi"));
  const auto center = get<std::vector<double>>(c, "center");
  const auto radius = get<double>(c, "radius");
  const auto trials = get<std::size_t>(c, "trials");
  const auto factor = get<double>(c, "ratio_factor");
  Csv csv("cells_per_axis,h,atoms,trials,hits,probability,wilson_lo,wilson_hi,capacity,ratio");
  std::vector<double> ratios;
  bool defined = true;
  for (const auto& level : c.params.at("levels")) {
    HittingOptions opts;
    opts.cells_per_axis = level.at(0).get<std::size_t>();
    opts.jobs = c.effective_jobs();
    opts.capacity.energy.seed = c.seed;
    const double h = level.at(1).get<double>();
    const PointCloud ball = ball_cloud(center, radius, h);
    const HittingReport rep = hitting_capacity_comparison(cfg, r, ball, trials, c.seed, opts);
    csv.row(opts.cells_per_axis, h, ball.size(), trials, rep.hits, rep.probability, rep.wilson.lo, rep.wilson.hi,
            rep.capacity, rep.ratio);
    defined = defined && !rep.undefined_ratio && rep.ratio > 0.0;
    ratios.push_back(rep.ratio);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = defined ? *hi / *lo : std::numeric_limits<double>::infinity();
  checks.push_back(at_most("max/min of probability/capacity across refinements", spread, factor));
  return {{"hitting.csv", csv.str()}};
}

// ---------------------------------------------------------------- registry

void precheck_pinning(const json& p) {
  require_check(p, {"identities", "oracle", "sampler"});
  if (p.at("max_N").get<int>() < 1 || p.at("oracle_max_N").get<int>() < 1 || p.at("sampler_N").get<int>() < 1)
    throw InvalidConfig("dimensions must be at least 1");
  if (p.at("sampler_trials").get<std::size_t>() < 2) throw InvalidConfig("sampler_trials must be at least 2");
  if (p.at("sampler_nodes").get<std::size_t>() < 1) throw InvalidConfig("sampler_nodes must be at least 1");
  require_positive(p, {"residual_tol", "oracle_tol", "z", "sampler_upper"});
  GridSpec::cube(p.at("sampler_N").get<std::size_t>(), p.at("sampler_upper").get<double>(),
                 p.at("sampler_cells").get<std::size_t>())
      .validate();
}

void precheck_girsanov(const json& p) {
  require_check(p, {"telescoping", "independence"});
  if (p.at("max_N").get<int>() < 1 || p.at("max_k").get<int>() < 2) throw InvalidConfig("need max_N >= 1, max_k >= 2");
  if (!(p.at("M").get<double>() > 1.0)) throw InvalidConfig("M must exceed 1");
  if (p.at("trials").get<std::size_t>() < 2) throw InvalidConfig("trials must be at least 2");
  require_positive(p, {"tol", "z"});
}

void precheck_density(const json& p) {
  if (!p.at("cases").is_array() || p.at("cases").empty()) throw InvalidConfig("cases must be a non-empty array");
  for (const auto& row : p.at("cases")) density_config(row).validate();
}

void precheck_covering(const json& p) {
  if (p.at("n_min").get<int>() < 1 || p.at("n_max").get<int>() <= p.at("n_min").get<int>())
    throw InvalidConfig("need 1 <= n_min < n_max");
  for (const auto& pair : p.at("pairs")) {
    if (!pair.is_array() || pair.size() != 2) throw InvalidConfig("covering pairs are [k, N]");
    SearchConfig sc;
    sc.cfg = RegimeConfig{pair[1].get<int>(), 1, pair[0].get<int>()};
    sc.delta = p.at("delta").get<double>();
    sc.window_lo = p.at("window_lo").get<double>();
    sc.window_hi = p.at("window_hi").get<double>();
    sc.constraint = CoordinateConstraint::shared(1, 2, 1);
    sc.validate();
  }
}

void precheck_capacity(const json& p) {
  if (p.at("dim").get<int>() < 1) throw InvalidConfig("dim must be at least 1");
  const auto levels = p.at("h_levels").get<std::vector<double>>();
  if (levels.size() < 2) throw InvalidConfig("need at least two h levels");
  for (double h : levels)
    if (!(h > 0.0 && h <= 1.0)) throw InvalidConfig("h levels must lie in (0, 1]");
  if (p.at("self_energy_samples").get<std::size_t>() == 0) throw InvalidConfig("self_energy_samples must be positive");
}

void precheck_phase(const json& p) {
  require_check(p, {"ordering", "search-oracle"});
  for (const char* key : {"supercritical", "subcritical"}) {
    const auto t = p.at(key).get<std::vector<int>>();
    if (t.size() != 3) throw InvalidConfig(std::string(key) + " is [N, d, k]");
    for (const auto& m : p.at("modes")) {
      SearchConfig sc;
      sc.cfg = RegimeConfig{t[0], t[1], t[2]};
      sc.window_lo = p.at("window_lo").get<double>();
      sc.window_hi = p.at("window_hi").get<double>();
      sc.delta = p.at("delta").get<double>();
      sc.mode = parse_mode(m.get<std::string>());
      sc.validate();
      const double width = sc.window_hi / static_cast<double>(p.at("cells_per_axis").get<std::size_t>());
      if (width > sc.delta / (3.0 * std::sqrt(static_cast<double>(t[0]))) * (1.0 + 1e-12))
        throw InvalidConfig("cells_per_axis too small for delta: grid width must be at most delta / (3 sqrt N)");
    }
  }
  for (double e : p.at("eps").get<std::vector<double>>())
    if (!(e >= 0.0)) throw InvalidConfig("eps must be nonnegative");
  if (p.at("oracle_max_nodes").get<std::size_t>() < 16) throw InvalidConfig("oracle_max_nodes must be at least 16");
}

void precheck_hitting(const json& p) {
  const RegimeConfig cfg{p.at("N").get<int>(), p.at("d").get<int>(), 2};
  if (cfg.N < 1 || !(cfg.d > 2 * cfg.N)) throw InvalidConfig("hitting needs N >= 1 and d > 2N");
  const Box r(p.at("box_lo").get<std::vector<double>>(), p.at("box_hi").get<std::vector<double>>());
  if (static_cast<int>(r.dim()) != cfg.N) throw InvalidConfig("box dimension must equal N");
  if (static_cast<int>(p.at("center").size()) != cfg.d) throw InvalidConfig("center dimension must equal d");
  require_positive(p, {"radius", "ratio_factor"});
  if (p.at("levels").size() < 2) throw InvalidConfig("need at least two refinement levels");
  for (const auto& l : p.at("levels"))
    if (!l.is_array() || l.size() != 2 || !(l[1].get<double>() > 0.0))
      throw InvalidConfig("levels are [cells_per_axis, h] with h > 0");
}

const std::vector<KindDesc>& registry() {
  static const std::vector<KindDesc> kinds = {
      {"verify-pinning",
       "Corner interpolation identities, agreement with Gaussian conditioning, and grid vs exact sampler covariance",
       "configs ac01 (check=identities), ac02 (check=oracle), ac05 (check=sampler)",
       {{"check", "string", "identities", "identities | oracle | sampler"},
        {"triples", "integer", 10000, "random (box, t, s) triples"},
        {"max_N", "integer", 5, "N cycles through 1..max_N"},
        {"residual_tol", "number", 1e-12, "bound on residuals and weight-sum error"},
        {"instances", "integer", 1000, "oracle instances"},
        {"oracle_max_N", "integer", 4, "oracle N cycles through 1..oracle_max_N"},
        {"oracle_tol", "number", 1e-10, "bound on |bar_B - conditional mean|"},
        {"sampler_N", "integer", 2, "parameter dimension for the sampler comparison"},
        {"sampler_nodes", "integer", 20, "shared nodes"},
        {"sampler_trials", "integer", 100000, "draws per sampler"},
        {"sampler_cells", "integer", 16, "grid cells per axis"},
        {"sampler_upper", "number", 2.0, "grid covers [0, sampler_upper]^N"},
        {"z", "number", 5.0, "standard errors allowed"}},
       precheck_pinning,
       run_pinning},
      {"verify-girsanov",
       "Drift telescoping onto the lower-face interpolation and independence of the decoupled last box",
       "configs ac03 (check=telescoping), ac04 (check=independence)",
       {{"check", "string", "telescoping", "telescoping | independence"},
        {"families", "integer", 1000, "random disjoint box families"},
        {"max_N", "integer", 4, "N cycles through 1..max_N"},
        {"max_k", "integer", 4, "k cycles through 2..max_k"},
        {"points_per_family", "integer", 16, "random test points per family, plus the box corners"},
        {"M", "number", 2.0, "boxes lie in [1/M, M]^N"},
        {"tol", "number", 1e-12, "bound on |drift_integral - tilde_B|"},
        {"trials", "integer", 100000, "independence trials (N = 2, k = 2, d = 1)"},
        {"cells", "integer", 40, "grid cells per axis over [0, 2]^2"},
        {"z", "number", 5.0, "zero-test threshold"}},
       precheck_girsanov,
       run_girsanov},
      {"covering",
       "Dyadic covering counts of the shared-coordinate slice and the critical exponent identity",
       "config ac07",
       {{"pairs", "array", json::array({{2, 1}, {2, 2}, {3, 2}}), "[k, N] pairs"},
        {"n_min", "integer", 3, "first dyadic level"},
        {"n_max", "integer", 7, "last dyadic level"},
        {"delta", "number", 0.1, "separation"},
        {"window_lo", "number", 1.0, "window lower bound"},
        {"window_hi", "number", 2.0, "window upper bound"},
        {"slope_tol", "number", 0.1, "allowed slope error"},
        {"identity_max_N", "integer", 4, "critical triples enumerated for N <= identity_max_N"}},
       precheck_covering,
       run_covering},
      {"density",
       "Minimum covariance determinants over separated tuples",
       "config ac06",
       {{"cases", "array", json::array({{2, 2, 0.1, 2.0}, {3, 3, 0.1, 2.0}}), "[N, k, delta, K] cases"},
        {"trials", "integer", 10000, "tuples per case"}},
       precheck_density,
       run_density},
      {"capacity",
       "Riesz capacity of the unit cube under grid refinement",
       "config ac08",
       {{"dim", "integer", 3, "ambient dimension d"},
        {"h_levels", "array", json::array({0.25, 0.125, 0.0625}), "cell widths, coarse to fine"},
        {"stability_tol", "number", 0.15, "allowed relative spread for beta = d - 1"},
        {"self_energy_samples", "integer", 10000, "Monte Carlo pairs for the cell self-energy"}},
       precheck_capacity,
       run_capacity},
      {"phase",
       "Near multiple point probabilities across regimes, and the bucketed search against exhaustive enumeration",
       "configs ac09 (check=ordering), ac10 (check=search-oracle)",
       {{"check", "string", "ordering", "ordering | search-oracle"},
        {"supercritical", "array", json::array({1, 5, 2}), "[N, d, k]"},
        {"subcritical", "array", json::array({1, 2, 2}), "[N, d, k]"},
        {"modes", "array", json::array({"self", "independent"}), "self and/or independent"},
        {"eps", "array", json::array({0.2, 0.1, 0.05}), "tolerance ladder"},
        {"trials", "integer", 1000, "realizations per configuration"},
        {"cells_per_axis", "integer", 200, "grid cells per axis over [0, window_hi]^N"},
        {"window_lo", "number", 1.0, "window lower bound"},
        {"window_hi", "number", 2.0, "window upper bound"},
        {"delta", "number", 0.3, "separation"},
        {"instances", "integer", 50, "search-oracle instances"},
        {"oracle_max_nodes", "integer", 1000, "node budget per search-oracle grid"}},
       precheck_phase,
       run_phase},
      {"hitting",
       "Hitting probability of a ball against its capacity of order d - 2N",
       "config ac11",
       {{"N", "integer", 1, "parameters"},
        {"d", "integer", 3, "state dimension"},
        {"box_lo", "array", json::array({1.0}), "parameter box lower corner"},
        {"box_hi", "array", json::array({2.0}), "parameter box upper corner"},
        {"center", "array", json::array({0.5, 0.0, 0.0}), "ball center"},
        {"radius", "number", 0.3, "ball radius"},
        {"levels", "array", json::array({{64, 0.1}, {128, 0.05}, {256, 0.025}}), "[cells_per_axis, h] refinements"},
        {"trials", "integer", 4000, "realizations per level"},
        {"ratio_factor", "number", 3.0, "allowed max/min ratio"}},
       precheck_hitting,
       run_hitting},
  };
  return kinds;
}

const KindDesc& find_kind(const std::string& name) {
  for (const auto& k : registry())
    if (k.name == name) return k;
  throw InvalidConfig("unknown experiment kind: " + name);
}

bool nonneg_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

bool type_matches(const std::string& type, const json& v) {
  if (type == "integer") return nonneg_integer(v);
  if (type == "number") return v.is_number();
  if (type == "string") return v.is_string();
  if (type == "array") return v.is_array();
  return false;
}

json kind_schema(const KindDesc& k) {
  json props = {{"kind", {{"const", k.name}}},
                {"seed", {{"type", "integer"}, {"minimum", 0}}},
                {"jobs", {{"type", "integer"}, {"minimum", 0}, {"description", "0 uses all cores"}}},
                {"out", {{"type", "string"}}}};
  for (const auto& p : k.params)
    props[p.name] = {{"type", p.type}, {"default", p.fallback}, {"description", p.help}};
  return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
          {"title", k.name},
          {"description", k.description},
          {"backs", k.backs},
          {"type", "object"},
          {"required", {"kind"}},
          {"additionalProperties", false},
          {"properties", props}};
}

std::string compiler_version() {
#ifdef __VERSION__
  return __VERSION__;
#else
  return "unknown";
#endif
}

json versions() {
  return {{"bsheet", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", compiler_version()}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

void write_manifest(const std::filesystem::path& dir, const json& config, std::uint64_t seed,
                    const ExperimentOutcome& out, const std::vector<std::string>& files) {
  json checks = json::array();
  for (const auto& c : out.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                      {"detail", c.detail}});
  json m = {{"config", config},       {"seed", seed},
            {"versions", versions()}, {"wall_time_seconds", out.wall_time},
            {"exit_code", out.exit_code}, {"message", out.message},
            {"checks", checks},       {"outputs", files}};
  std::filesystem::create_directories(dir);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& raw) {
  if (!raw.is_object()) throw InvalidConfig("config must be a JSON object");
  if (!raw.contains("kind") || !raw.at("kind").is_string()) throw InvalidConfig("config needs a string field \"kind\"");
  const KindDesc& kind = find_kind(raw.at("kind").get<std::string>());
  ExperimentConfig c;
  c.kind = kind.name;
  for (const auto& [key, value] : raw.items()) {
    if (key == "kind") continue;
    if (key == "seed") {
      if (!nonneg_integer(value)) throw InvalidConfig("seed must be an unsigned 64-bit integer");
      c.seed = value.get<std::uint64_t>();
      continue;
    }
    if (key == "jobs") {
      if (!nonneg_integer(value)) throw InvalidConfig("jobs must be a nonnegative integer");
      c.jobs = value.get<unsigned>();
      continue;
    }
    if (key == "out") {
      if (!value.is_string()) throw InvalidConfig("out must be a string");
      c.out = value.get<std::string>();
      continue;
    }
    const auto it = std::find_if(kind.params.begin(), kind.params.end(), [&](const ParamDesc& p) { return p.name == key; });
    if (it == kind.params.end()) throw InvalidConfig("unknown field \"" + key + "\" for kind " + kind.name);
    if (!type_matches(it->type, value))
      throw InvalidConfig("field \"" + key + "\" must be of type " + it->type + (it->type == "integer" ? " >= 0" : ""));
    c.params[key] = value;
  }
  for (const auto& p : kind.params)
    if (!c.params.contains(p.name)) c.params[p.name] = p.fallback;
  try {
    kind.precheck(c.params);
  } catch (const InvalidConfig&) {
    throw;
  } catch (const Error& e) {
    throw InvalidConfig(e.what());
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed parameter: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidConfig("cannot read config " + path.string());
  try {
    return from_json(json::parse(is));
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("malformed JSON: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j = params;
  j["kind"] = kind;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["out"] = out;
  return j;
}

unsigned ExperimentConfig::effective_jobs() const { return jobs == 0 ? default_jobs() : jobs; }

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  ExperimentOutcome out;
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out);
  std::vector<std::string> names;
  try {
    std::filesystem::create_directories(dir);
    const auto files = find_kind(config.kind).run(config, out.checks);
    for (const auto& f : files) {
      write_file(dir / f.name, f.content);
      names.push_back(f.name);
    }
    if (!files.empty()) out.csv_path = dir / files.front().name;
    std::string failed;
    for (const auto& c : out.checks)
      if (!c.pass) failed += (failed.empty() ? "" : "; ") + c.name;
    if (failed.empty()) {
      out.exit_code = kExitOk;
      out.message = "all checks passed";
    } else {
      out.exit_code = kExitContract;
      out.message = "ContractViolation: failed checks: " + failed;
    }
  } catch (const ContractViolation& e) {
    out.exit_code = kExitContract;
    out.message = e.what();
  } catch (const Error& e) {
    out.exit_code = kExitValidation;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitContract;
    out.message = std::string("unexpected failure: ") + e.what();
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest_path = dir / "manifest.json";
  write_manifest(dir, config.to_json(), config.seed, out, names);
  return out;
}

ExperimentOutcome run_config(const json& raw, std::optional<std::uint64_t> seed, std::optional<std::string> out,
                             std::optional<unsigned> jobs) {
  ExperimentConfig config;
  try {
    json patched = raw;
    if (patched.is_object()) {
      if (seed) patched["seed"] = *seed;
      if (out) patched["out"] = *out;
      if (jobs) patched["jobs"] = *jobs;
    }
    config = ExperimentConfig::from_json(patched);
  } catch (const Error& e) {
    ExperimentOutcome bad;
    bad.exit_code = kExitValidation;
    bad.message = e.what();
    std::string dir = out ? *out : "out";
    if (!out && raw.is_object() && raw.contains("out") && raw.at("out").is_string()) dir = raw.at("out").get<std::string>();
    bad.manifest_path = std::filesystem::path(dir) / "manifest.json";
    write_manifest(dir, raw, seed.value_or(0), bad, {});
    return bad;
  }
  return run_experiment(config);
}

std::vector<std::string> experiment_kinds() {
  std::vector<std::string> names;
  for (const auto& k : registry()) names.push_back(k.name);
  return names;
}

std::string list_experiments(bool as_json, const std::optional<std::string>& kind) {
  std::vector<const KindDesc*> chosen;
  if (kind)
    chosen.push_back(&find_kind(*kind));
  else
    for (const auto& k : registry()) chosen.push_back(&k);
  if (as_json) {
    json all = json::array();
    for (const auto* k : chosen) all.push_back(kind_schema(*k));
    return all.dump(2) + "\n";
  }
  std::ostringstream os;
  for (const auto* k : chosen) {
    os << k->name << "\n  " << k->description << "\n  backs: " << k->backs << "\n  parameters:\n";
    for (const auto& p : k->params)
      os << "    " << std::left << std::setw(20) << p.name << std::setw(8) << p.type << " default " << p.fallback.dump()
         << "  " << p.help << "\n";
  }
  return os.str();
}

}  // namespace bsheet
