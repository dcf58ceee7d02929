#pragma once

// Information criteria for choosing the rank of a spiked PCA model.
//
// Every criterion scores rank r = 0..q as
//     score[r] = ln|Sigma_r| + w * penalty[r] / n
// with w = 2 (GIC, AIC) or ln n (BIC). AIC and BIC penalize by the free
// parameter count b_r; GIC uses an eigenvalue-adaptive penalty that grows when
// the tail spectrum is dispersed or when a retained eigenvalue sits close to a
// discarded one.

#include <cstdint>
#include <string>
#include <string_view>

#include "rankselect/spectra.hpp"

namespace rankselect {

enum class Criterion { kGic, kAic, kBic };

std::string_view to_string(Criterion c);
/// Accepts "gic", "aic", "bic" (case-insensitive). Throws InputError otherwise.
Criterion parse_criterion(std::string_view name);

struct CriterionTrace {
  Criterion criterion = Criterion::kGic;
  int n = 0;
  int p = 0;
  int q = 0;
  Vector logdet;   // length q + 1
  Vector penalty;  // length q + 1; +inf marks an unselectable rank
  Vector score;    // length q + 1
  int selected = 0;
};

/// b_r = {p r - r (r + 1) / 2} + r + 1 + p.
double free_param_count(int p, int r);

/// Sample GIC penalty for rank r from descending eigenvalues.
///
/// An exact tie between a retained eigenvalue lambda_j (j <= r) and a
/// discarded one lambda_l (l > r) yields +inf, except when both also equal the
/// tail mean, where the 0/0 ratio is taken as 1.
double gic_penalty(const Vector& eigenvalues, int r);

/// xi_{j|r} >= 0: excess of the eigenvector complexity over its parameter
/// count for the j-th (1-based) retained direction. Evaluated in the
/// term-wise nonnegative form
///     (lambda_j / s2) sum_{l > r} (lambda_l - s2)^2 / ((lambda_j - lambda_l)(lambda_j - s2)),
/// which equals the defining sum because the tail deviations sum to zero.
double xi_term(const Vector& eigenvalues, int j, int r);

/// Weight w in score = logdet + w * penalty / n.
double criterion_weight(Criterion c, int n);

/// min(20, p - 1, numerical_rank - 1), floored at 0.
int default_q(const Vector& eigenvalues);

/// Scores ranks 0..q. Requires 1 <= q <= p - 1 and q below the numerical rank.
CriterionTrace criterion_trace(const Vector& eigenvalues, int n, int q, Criterion c);
CriterionTrace criterion_trace(const SpectralDecomp& decomp, int n, int q, Criterion c);

/// Leave-one-out cross-validated log-likelihood CV(r), r = 0..q, each fold
/// refitting mean, covariance and eigendecomposition without observation i.
/// The -p/2 ln(2 pi) constant is omitted.
Vector loocv_curve(const DataMatrix& data, int q);

/// Permutation parallel analysis: the number of leading eigenvalues that each
/// exceed the `percentile` quantile of their counterparts over `n_perm`
/// column-wise permutations, stopping at the first failure. Permutation k
/// draws from its own stream derived from (seed, k).
int parallel_analysis(const DataMatrix& data, int n_perm = 99, double percentile = 0.95,
                      std::uint64_t seed = 0);

}  // namespace rankselect
