#pragma once

// Sample covariance, symmetric eigendecomposition and the rank-r simple spiked
// fit that every rank-selection criterion is built on.
//
// Conventions:
//   * covariances use divisor n (not n - 1);
//   * eigenvalues are returned in descending order;
//   * each eigenvector is signed so that its largest-magnitude entry is
//     nonnegative (lowest index wins ties), which makes output reproducible.

#include <Eigen/Dense>

namespace rankselect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x p observation matrix, one observation per row. Entries are finite and
/// n, p >= 2.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

struct CovarianceSummary {
  Vector mean;
  Matrix cov;
  double trace = 0.0;
};

struct SpectralDecomp {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
};

/// Rank-r maximum-likelihood fit of the simple spiked covariance model
///   Sigma_r = Gamma Lambda Gamma^T + sigma2 (I - Gamma Gamma^T).
struct SpikedFit {
  int rank = 0;
  Matrix gamma;   // p x r
  Vector lambda;  // r leading eigenvalues
  double sigma2 = 0.0;
  Vector mu;
  double logdet = 0.0;  // ln|Sigma_r|
};

/// Relative threshold below which an eigenvalue counts as numerically zero.
inline constexpr double kNumericalRankTolerance = 1e-12;

CovarianceSummary sample_covariance(const DataMatrix& data);

/// Throws InputError if `cov` is not symmetric within 1e-12 (relative to its
/// largest entry).
SpectralDecomp sym_eigen(const Matrix& cov);

/// Eigenvalues only, descending. Same symmetry check as sym_eigen.
Vector sym_eigenvalues(const Matrix& cov);

/// Number of eigenvalues strictly above 1e-12 * eigenvalues[0].
int numerical_rank(const Vector& eigenvalues);

/// Mean of the eigenvalues with (0-based) index >= r. Throws
/// DegenerateTailError when that mean is not strictly positive at the
/// numerical-rank tolerance.
double tail_variance(const Vector& eigenvalues, int r);

/// ln|Sigma_r| = sum_{j<=r} ln lambda_j + (p - r) ln sigma2_r.
double spiked_logdet(const Vector& eigenvalues, int r);

SpikedFit fit_spiked(const SpectralDecomp& decomp, int r, const Vector& mean);
SpikedFit fit_spiked(const SpectralDecomp& decomp, int r);

/// Gaussian log-likelihood of x under the fit, up to the -p/2 ln(2 pi) constant.
/// The inverse covariance is applied through the low-rank identity, O(p r).
double spiked_loglik(const SpikedFit& fit, const Vector& x);

/// Centers each column and scales it to unit variance (divisor n). Throws
/// InputError naming the first zero-variance column.
DataMatrix standardize(const DataMatrix& data);

struct PrefilterResult {
  Matrix scores;  // n x retained, may have a single column
  int retained = 0;
  double explained = 0.0;  // fraction of trace kept
};

/// Projects centered data on the smallest leading set of principal axes whose
/// eigenvalues sum to at least `fraction` of the trace.
PrefilterResult pca_prefilter(const DataMatrix& data, double fraction);

}  // namespace rankselect
