#include "rankselect/criteria.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rankselect/error.hpp"
#include "rankselect/random.hpp"

namespace rankselect {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_rank(int p, int r) {
  if (r < 0 || r > p - 1) {
    throw InputError("rank " + std::to_string(r) + " outside [0, " + std::to_string(p - 1) +
                     "]");
  }
}

// (lambda_j - s2) / (lambda_j - lambda_l) with the 0/0 = 1 convention; +inf on
// any other exact tie.
double tie_aware_ratio(double lj, double ll, double s2) {
  const double num = lj - s2;
  const double den = lj - ll;
  if (den == 0.0) return num == 0.0 ? 1.0 : kInf;
  return num / den;
}

double quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kGic:
      return "gic";
    case Criterion::kAic:
      return "aic";
    case Criterion::kBic:
      return "bic";
  }
  return "?";
}

Criterion parse_criterion(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "gic") return Criterion::kGic;
  if (lower == "aic") return Criterion::kAic;
  if (lower == "bic") return Criterion::kBic;
  throw InputError("unknown criterion '" + std::string(name) + "' (expected gic, aic or bic)");
}

double free_param_count(int p, int r) {
  check_rank(p, r);
  const double pr = static_cast<double>(p) * r;
  return (pr - 0.5 * r * (r + 1.0)) + r + 1.0 + p;
}

double gic_penalty(const Vector& eigenvalues, int r) {
  const auto p = static_cast<int>(eigenvalues.size());
  check_rank(p, r);
  const double s2 = tail_variance(eigenvalues, r);

  double b_gamma = r >= 2 ? 0.5 * r * (r - 1.0) : 0.0;
  for (int j = 0; j < r; ++j) {
    for (int l = r; l < p; ++l) {
      const double ratio = tie_aware_ratio(eigenvalues[j], eigenvalues[l], s2);
      if (std::isinf(ratio)) return kInf;
      b_gamma += eigenvalues[l] * ratio / s2;
    }
  }
  const double b_lambda = r;

  const auto tail = eigenvalues.tail(p - r);
  const double mean_sq = tail.squaredNorm() / (p - r);
  const double b_sigma = mean_sq / (s2 * s2);

  const double b_mu = p;
  return b_gamma + b_lambda + b_sigma + b_mu;
}

double xi_term(const Vector& eigenvalues, int j, int r) {
  const auto p = static_cast<int>(eigenvalues.size());
  check_rank(p, r);
  if (j < 1 || j > r) {
    throw InputError("xi_term: j = " + std::to_string(j) + " must lie in [1, " +
                     std::to_string(r) + "]");
  }
  const double s2 = tail_variance(eigenvalues, r);
  const double lj = eigenvalues[j - 1];
  double sum = 0.0;
  for (int l = r; l < p; ++l) {
    const double dev = eigenvalues[l] - s2;
    if (dev == 0.0) continue;
    const double gap = lj - eigenvalues[l];
    if (gap == 0.0) return kInf;
    sum += dev * dev / (gap * (lj - s2));
  }
  return lj / s2 * sum;
}

double criterion_weight(Criterion c, int n) {
  return c == Criterion::kBic ? std::log(static_cast<double>(n)) : 2.0;
}

int default_q(const Vector& eigenvalues) {
  const auto p = static_cast<int>(eigenvalues.size());
  return std::max(0, std::min({20, p - 1, numerical_rank(eigenvalues) - 1}));
}

CriterionTrace criterion_trace(const Vector& eigenvalues, int n, int q, Criterion c) {
  const auto p = static_cast<int>(eigenvalues.size());
  if (q < 1 || q > p - 1) {
    throw InputError("q = " + std::to_string(q) + " outside [1, " + std::to_string(p - 1) +
                     "]");
  }
  if (n < 2) throw InputError("n must be at least 2");
  const double w = criterion_weight(c, n);

  CriterionTrace t;
  t.criterion = c;
  t.n = n;
  t.p = p;
  t.q = q;
  t.logdet.resize(q + 1);
  t.penalty.resize(q + 1);
  t.score.resize(q + 1);
  for (int r = 0; r <= q; ++r) {
    t.logdet[r] = spiked_logdet(eigenvalues, r);
    t.penalty[r] = c == Criterion::kGic ? gic_penalty(eigenvalues, r) : free_param_count(p, r);
    t.score[r] = t.logdet[r] + w * t.penalty[r] / n;
  }
  // strict comparison keeps the lowest rank on exact ties
  t.selected = 0;
  for (int r = 1; r <= q; ++r) {
    if (t.score[r] < t.score[t.selected]) t.selected = r;
  }
  return t;
}

CriterionTrace criterion_trace(const SpectralDecomp& decomp, int n, int q, Criterion c) {
  return criterion_trace(decomp.eigenvalues, n, q, c);
}

Vector loocv_curve(const DataMatrix& data, int q) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 3) throw InputError("loocv_curve needs at least 3 observations");
  if (q < 0 || q > p - 1) {
    throw InputError("q = " + std::to_string(q) + " outside [0, " + std::to_string(p - 1) +
                     "]");
  }
  const Matrix& x = data.values();
  Vector cv = Vector::Zero(q + 1);
  Matrix rest(n - 1, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    rest.topRows(i) = x.topRows(i);
    rest.bottomRows(n - 1 - i) = x.bottomRows(n - 1 - i);
    const CovarianceSummary cs = sample_covariance(DataMatrix(rest));
    const SpectralDecomp decomp = sym_eigen(cs.cov);
    const Vector xi = x.row(i).transpose();
    for (int r = 0; r <= q; ++r) {
      try {
        cv[r] += spiked_loglik(fit_spiked(decomp, r, cs.mean), xi);
      } catch (const DegenerateTailError& e) {
        throw DegenerateTailError("loocv: leaving out observation " + std::to_string(i) +
                                      " gives a degenerate tail at rank " +
                                      std::to_string(r) + " (numerical rank " +
                                      std::to_string(e.numerical_rank()) + ")",
                                  r, e.numerical_rank());
      }
    }
  }
  return cv / static_cast<double>(n);
}

int parallel_analysis(const DataMatrix& data, int n_perm, double percentile,
                      std::uint64_t seed) {
  if (n_perm < 1) throw InputError("parallel_analysis: n_perm must be >= 1");
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw InputError("parallel_analysis: percentile must lie in (0, 1)");
  }
  const Matrix& x = data.values();
  const auto n = x.rows();
  const auto p = x.cols();
  const Vector observed = sym_eigenvalues(sample_covariance(data).cov);

  std::vector<Vector> null_spectra(static_cast<std::size_t>(n_perm));
  parallel_for(null_spectra.size(), [&](std::size_t k) {
    Rng rng = make_stream(seed, k, StreamTag::kPermutation);
    Matrix shuffled = x;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < p; ++j) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index i = 0; i < n; ++i) shuffled(i, j) = x(order[i], j);
    }
    null_spectra[k] = sym_eigenvalues(sample_covariance(DataMatrix(std::move(shuffled))).cov);
  });

  int k = 0;
  std::vector<double> column(null_spectra.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t b = 0; b < null_spectra.size(); ++b) column[b] = null_spectra[b][j];
    if (!(observed[j] > quantile(column, percentile))) break;
    ++k;
  }
  return k;
}

}  // namespace rankselect
