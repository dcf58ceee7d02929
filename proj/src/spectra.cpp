#include "rankselect/spectra.hpp"

#include <cmath>
#include <string>

#include "rankselect/error.hpp"

namespace rankselect {
namespace {

void check_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw InputError("sym_eigen: matrix is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", expected square");
  }
  if (!a.allFinite()) throw InputError("sym_eigen: matrix has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw InputError("sym_eigen: matrix is not symmetric (max |A - A^T| = " +
                     std::to_string(asym) + ")");
  }
}

void fix_signs(Matrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double v = std::abs(vectors(i, j));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

}  // namespace

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2 || values_.cols() < 2) {
    throw InputError("data matrix must be at least 2x2, got " +
                     std::to_string(values_.rows()) + "x" +
                     std::to_string(values_.cols()));
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!std::isfinite(values_(i, j))) {
        throw InputError("non-finite entry at row " + std::to_string(i) +
                         ", column " + std::to_string(j));
      }
    }
  }
}

CovarianceSummary sample_covariance(const DataMatrix& data) {
  const Matrix& x = data.values();
  CovarianceSummary out;
  out.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - out.mean.transpose();
  Matrix cov = Matrix::Zero(x.cols(), x.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  cov /= static_cast<double>(x.rows());
  out.trace = cov.trace();
  out.cov = std::move(cov);
  return out;
}

SpectralDecomp sym_eigen(const Matrix& cov) {
  check_symmetric(cov);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eigen: solver failed");
  SpectralDecomp out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(out.eigenvectors);
  return out;
}

Vector sym_eigenvalues(const Matrix& cov) {
  check_symmetric(cov);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eigen: solver failed");
  return solver.eigenvalues().reverse();
}

int numerical_rank(const Vector& eigenvalues) {
  if (eigenvalues.size() == 0 || eigenvalues[0] <= 0.0) return 0;
  const double cut = kNumericalRankTolerance * eigenvalues[0];
  int k = 0;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    if (eigenvalues[j] > cut) ++k;
  }
  return k;
}

double tail_variance(const Vector& eigenvalues, int r) {
  const auto p = static_cast<int>(eigenvalues.size());
  if (r < 0 || r > p - 1) {
    throw InputError("rank " + std::to_string(r) + " outside [0, " +
                     std::to_string(p - 1) + "]");
  }
  const double sigma2 = eigenvalues.tail(p - r).mean();
  const double floor =
      eigenvalues[0] > 0.0 ? kNumericalRankTolerance * eigenvalues[0] : 0.0;
  if (!(sigma2 > floor) || r >= numerical_rank(eigenvalues)) {
    throw DegenerateTailError(r, numerical_rank(eigenvalues));
  }
  return sigma2;
}

double spiked_logdet(const Vector& eigenvalues, int r) {
  const double sigma2 = tail_variance(eigenvalues, r);
  const auto p = static_cast<int>(eigenvalues.size());
  double out = (p - r) * std::log(sigma2);
  for (int j = 0; j < r; ++j) out += std::log(eigenvalues[j]);
  return out;
}

SpikedFit fit_spiked(const SpectralDecomp& decomp, int r, const Vector& mean) {
  const auto p = decomp.eigenvalues.size();
  if (mean.size() != p) {
    throw InputError("fit_spiked: mean has length " + std::to_string(mean.size()) +
                     ", expected " + std::to_string(p));
  }
  SpikedFit fit;
  fit.rank = r;
  fit.sigma2 = tail_variance(decomp.eigenvalues, r);
  fit.logdet = spiked_logdet(decomp.eigenvalues, r);
  fit.gamma = decomp.eigenvectors.leftCols(r);
  fit.lambda = decomp.eigenvalues.head(r);
  fit.mu = mean;
  return fit;
}

SpikedFit fit_spiked(const SpectralDecomp& decomp, int r) {
  return fit_spiked(decomp, r, Vector::Zero(decomp.eigenvalues.size()));
}

double spiked_loglik(const SpikedFit& fit, const Vector& x) {
  const Vector d = x - fit.mu;
  // Sigma^{-1} = Gamma (Lambda^{-1} - sigma^{-2} I) Gamma^T + sigma^{-2} I
  const Vector proj = fit.gamma.transpose() * d;
  const double inv_s2 = 1.0 / fit.sigma2;
  double quad = inv_s2 * d.squaredNorm();
  for (Eigen::Index j = 0; j < proj.size(); ++j) {
    quad += (1.0 / fit.lambda[j] - inv_s2) * proj[j] * proj[j];
  }
  return -0.5 * fit.logdet - 0.5 * quad;
}

DataMatrix standardize(const DataMatrix& data) {
  const Matrix& x = data.values();
  const auto n = static_cast<double>(x.rows());
  Matrix out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double var = out.col(j).squaredNorm() / n;
    if (!(var > 0.0)) {
      throw InputError("standardize: column " + std::to_string(j) +
                       " has zero variance");
    }
    out.col(j) /= std::sqrt(var);
  }
  return DataMatrix(std::move(out));
}

PrefilterResult pca_prefilter(const DataMatrix& data, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InputError("pca_prefilter: fraction must lie in (0, 1], got " +
                     std::to_string(fraction));
  }
  const CovarianceSummary cs = sample_covariance(data);
  const SpectralDecomp decomp = sym_eigen(cs.cov);
  const int positive = numerical_rank(decomp.eigenvalues);
  const double total = decomp.eigenvalues.head(positive).sum();

  int k = 0;
  double kept = 0.0;
  while (k < positive && kept < fraction * total) kept += decomp.eigenvalues[k++];
  // fraction == 1 must keep every positive component even if rounding reached
  // the total early
  if (fraction >= 1.0) {
    k = positive;
    kept = total;
  }

  const Matrix centered = data.values().rowwise() - cs.mean.transpose();
  return PrefilterResult{centered * decomp.eigenvectors.leftCols(k), k,
                         total > 0 ? kept / total : 0.0};
}

}  // namespace rankselect
