#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bsheet/rng.hpp"

namespace bsheet {

// Exact sampling beyond this size is delegated to the grid sampler.
inline constexpr std::size_t kMaxCovDim = 4096;

// Symmetric positive semidefinite covariance. Construction validates the
// invariants (symmetry to 1e-12 relative, nonnegative diagonal, min
// eigenvalue >= -1e-10 * trace).
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(Eigen::MatrixXd entries);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

 private:
  Eigen::MatrixXd m_;
};

struct GaussianVector {
  Eigen::VectorXd mean;
  CovMatrix cov;

  GaussianVector() = default;
  GaussianVector(Eigen::VectorXd mean, CovMatrix cov);
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // absolute amount added to the diagonal
};

// Factorizes c + jitter*I using the smallest rung of the ladder
// {0, 1e-12, 1e-10, 1e-8} * jitter_scale * trace(c)/dim that succeeds.
// jitter_scale = 0 allows only the exact factorization. Throws NotPSD.
CholeskyFactor cholesky(const CovMatrix& c, double jitter_scale = 1.0);

// One draw of mean + L z. A zero covariance returns the mean exactly.
Eigen::VectorXd sample_mvn(const GaussianVector& g, Rng& rng);
Eigen::VectorXd sample_mvn(const GaussianVector& g, const CholeskyFactor& factor, Rng& rng);

// Gaussian conditioning via the Schur complement. The result keeps the
// joint dimension: observed coordinates get mean = observation and zero
// (co)variance. An empty observation returns the input unchanged.
// Throws SingularObservation if the observed block cannot be factored
// under the jitter ladder.
GaussianVector condition_gaussian(const GaussianVector& joint,
                                  std::span<const std::size_t> observed_idx,
                                  std::span<const double> observed_vals);

}  // namespace bsheet
