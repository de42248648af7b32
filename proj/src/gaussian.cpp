#include "bsheet/gaussian.hpp"

#include <array>
#include <cmath>
#include <string>

#include "bsheet/errors.hpp"

namespace bsheet {

namespace {

constexpr std::array<double, 4> kJitterLadder = {0.0, 1e-12, 1e-10, 1e-8};

bool try_llt(const Eigen::MatrixXd& m, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.allFinite();
}

}  // namespace

CovMatrix::CovMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols()) throw DimMismatch("covariance must be square");
  if (m_.rows() == 0) return;
  if (!m_.allFinite()) throw NotPSD("covariance has non-finite entries");
  const double scale = m_.cwiseAbs().maxCoeff();
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotPSD("covariance is not symmetric");
  if ((m_.diagonal().array() < 0.0).any()) throw NotPSD("negative variance on the diagonal");
  // min eigenvalue >= -1e-10 * trace, checked through a shifted factorization
  const double tr = m_.trace();
  if (tr > 0.0) {
    Eigen::MatrixXd shifted = m_;
    shifted.diagonal().array() += 2e-10 * tr;
    Eigen::MatrixXd unused;
    if (!try_llt(shifted, unused)) throw NotPSD("covariance has a negative eigenvalue");
  }
}

GaussianVector::GaussianVector(Eigen::VectorXd m, CovMatrix c) : mean(std::move(m)), cov(std::move(c)) {
  if (static_cast<std::size_t>(mean.size()) != cov.dim())
    throw DimMismatch("mean length " + std::to_string(mean.size()) + " vs covariance dim " +
                      std::to_string(cov.dim()));
}

CholeskyFactor cholesky(const CovMatrix& c, double jitter_scale) {
  const auto n = static_cast<Eigen::Index>(c.dim());
  CholeskyFactor out;
  if (n == 0) return out;
  const double tr = c.trace();
  if (tr == 0.0) {
    // Every variance is zero, so PSD forces the whole matrix to vanish.
    out.lower = Eigen::MatrixXd::Zero(n, n);
    return out;
  }
  const double unit = jitter_scale * tr / static_cast<double>(n);
  for (double rung : kJitterLadder) {
    const double jitter = rung * unit;
    if (rung > 0.0 && jitter == 0.0) break;
    Eigen::MatrixXd m = c.matrix();
    m.diagonal().array() += jitter;
    if (try_llt(m, out.lower)) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NotPSD("factorization failed at the largest allowed jitter (dim " + std::to_string(n) + ")");
}

Eigen::VectorXd sample_mvn(const GaussianVector& g, const CholeskyFactor& factor, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return g.mean + factor.lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd sample_mvn(const GaussianVector& g, Rng& rng) {
  if (g.dim() == 0 || g.cov.trace() == 0.0) return g.mean;
  return sample_mvn(g, cholesky(g.cov), rng);
}

GaussianVector condition_gaussian(const GaussianVector& joint,
                                  std::span<const std::size_t> observed_idx,
                                  std::span<const double> observed_vals) {
  if (observed_idx.size() != observed_vals.size())
    throw DimMismatch("observed index and value counts differ");
  if (observed_idx.empty()) return joint;

  const std::size_t n = joint.dim();
  std::vector<char> is_observed(n, 0);
  for (std::size_t i : observed_idx) {
    if (i >= n) throw IndexMismatch("observed index " + std::to_string(i) + " out of range");
    if (is_observed[i]) throw IndexMismatch("observed index " + std::to_string(i) + " repeated");
    is_observed[i] = 1;
  }
  // A zero-variance coordinate is already pinned: observing it at its mean
  // carries no information, anything else is impossible.
  std::vector<std::size_t> live_idx;
  std::vector<double> live_vals;
  for (std::size_t a = 0; a < observed_idx.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(observed_idx[a]);
    if (joint.cov.matrix()(i, i) > 0.0) {
      live_idx.push_back(observed_idx[a]);
      live_vals.push_back(observed_vals[a]);
    } else if (std::abs(observed_vals[a] - joint.mean[i]) > 1e-12 * (1.0 + std::abs(joint.mean[i]))) {
      throw SingularObservation("observed block has zero variance");
    }
  }
  if (live_idx.size() < observed_idx.size()) {
    GaussianVector out = condition_gaussian(joint, live_idx, live_vals);
    for (std::size_t a = 0; a < observed_idx.size(); ++a)
      out.mean[static_cast<Eigen::Index>(observed_idx[a])] = observed_vals[a];
    return out;
  }

  std::vector<Eigen::Index> free_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_observed[i]) free_idx.push_back(static_cast<Eigen::Index>(i));

  const auto no = static_cast<Eigen::Index>(observed_idx.size());
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const Eigen::MatrixXd& sigma = joint.cov.matrix();

  Eigen::MatrixXd soo(no, no), sfo(nf, no), sff(nf, nf);
  Eigen::VectorXd resid(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    const auto ia = static_cast<Eigen::Index>(observed_idx[a]);
    resid[a] = observed_vals[a] - joint.mean[ia];
    for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = sigma(ia, static_cast<Eigen::Index>(observed_idx[b]));
    for (Eigen::Index f = 0; f < nf; ++f) sfo(f, a) = sigma(free_idx[f], ia);
  }
  for (Eigen::Index f = 0; f < nf; ++f)
    for (Eigen::Index g = 0; g < nf; ++g) sff(f, g) = sigma(free_idx[f], free_idx[g]);

  CholeskyFactor factor;
  try {
    factor = cholesky(CovMatrix(soo));
  } catch (const NotPSD& e) {
    throw SingularObservation(e.what());
  }
  if (factor.lower.diagonal().minCoeff() <= 0.0)
    throw SingularObservation("observed block has zero variance");
  const auto tri = factor.lower.triangularView<Eigen::Lower>();
  // gain = Sfo Soo^{-1}
  const Eigen::MatrixXd half = tri.solve(sfo.transpose());
  const Eigen::VectorXd alpha = tri.solve(resid);

  Eigen::VectorXd mean = joint.mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd shift = half.transpose() * alpha;
  Eigen::MatrixXd schur = sff - half.transpose() * half;
  schur = 0.5 * (schur + schur.transpose());
  for (Eigen::Index f = 0; f < nf; ++f) {
    mean[free_idx[f]] += shift[f];
    for (Eigen::Index g = 0; g < nf; ++g) cov(free_idx[f], free_idx[g]) = schur(f, g);
  }
  for (Eigen::Index a = 0; a < no; ++a) mean[static_cast<Eigen::Index>(observed_idx[a])] = observed_vals[a];
  return GaussianVector(std::move(mean), CovMatrix(std::move(cov)));
}

}  // namespace bsheet
