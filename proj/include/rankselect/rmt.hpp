#pragma once

// Random-matrix quantities that decide when each criterion is consistent.
//
// A population covariance has tail eigenvalues distributed as H (SpectralLaw)
// plus a few large spikes. With p/n -> c, the sample spectrum converges to the
// generalized Marchenko-Pastur law F_{c,H}, whose upper edge b bounds the noise
// eigenvalues; a spike lambda is separable ("distant") when psi'(lambda) > 0,
// and then its sample eigenvalue converges to psi(lambda) > b.
//
// kappa(u) is the limiting per-rank increment of the GIC penalty / n, and the
// L-curves  L(u) = ln u - (u - 1) + penalty-increment  decide the gap
// conditions for GIC (2 kappa), AIC (2c) and BIC ((ln n) c).

#include <optional>
#include <random>
#include <vector>

#include "rankselect/criteria.hpp"

namespace rankselect {

struct RmtTolerances {
  double fixed_point = 1e-12;  // relative |delta s| for the Stieltjes iteration
  int max_iterations = 10000;
  double root_residual = 1e-10;      // |L| at a critical lambda
  double edge_derivative = 1e-10;    // |psi'| at the bulk edge
  double search_ceiling = 1e8;       // largest lambda tried when bracketing
};

inline constexpr RmtTolerances kDefaultTolerances{};

/// Limiting distribution H of the non-spike population eigenvalues.
class SpectralLaw {
 public:
  enum class Kind { kPointMass, kContinuousUniform, kDiscreteUniform, kEmpirical };

  static SpectralLaw point_mass(double sigma2);
  static SpectralLaw continuous_uniform(double lo, double hi);
  /// Equiprobable atoms.
  static SpectralLaw discrete_uniform(std::vector<double> atoms);
  static SpectralLaw empirical(std::vector<double> values);

  /// Point mass at 1.
  static SpectralLaw h1();
  /// Uniform on [1 - theta, 1 + theta].
  static SpectralLaw h2(double theta);
  /// Equiprobable on {1 - theta, 1, 1 + theta}.
  static SpectralLaw h3(double theta);

  Kind kind() const noexcept { return kind_; }
  double mean() const noexcept { return mean_; }
  double sup_support() const noexcept { return sup_; }
  /// Atoms for point-mass / discrete / empirical laws, {lo, hi} for uniform.
  const std::vector<double>& parameters() const noexcept { return params_; }

  /// integral t / (lambda - t) dH(t), lambda > sup_support.
  double h_integral(double lambda) const;
  /// d/dlambda of h_integral = -integral t / (lambda - t)^2 dH(t).
  double h_integral_derivative(double lambda) const;
  /// integral dH(t) / (t a - z), used by the Stieltjes fixed point.
  double resolvent_integral(double a, double z) const;

  double sample(std::mt19937_64& rng) const;

 private:
  SpectralLaw(Kind kind, std::vector<double> params);

  Kind kind_;
  std::vector<double> params_;
  double mean_ = 0.0;
  double sup_ = 0.0;
};

/// Tail law, aspect ratio c = p / n and the spike eigenvalues (kept sorted
/// descending). Every spike must exceed sup_support.
class PopulationModel {
 public:
  PopulationModel(SpectralLaw law, double c, std::vector<double> spikes = {});

  const SpectralLaw& law() const noexcept { return law_; }
  double c() const noexcept { return c_; }
  const std::vector<double>& spikes() const noexcept { return spikes_; }

 private:
  SpectralLaw law_;
  double c_;
  std::vector<double> spikes_;
};

double h_integral(const SpectralLaw& law, double lambda);

/// psi(lambda) = lambda {1 + c h(lambda)}.
double psi(const PopulationModel& model, double lambda);
double psi_prime(const PopulationModel& model, double lambda);

/// Number of spikes with psi' > 0.
int target_rank(const PopulationModel& model);

struct BulkEdge {
  double lambda = 0.0;  // argmin of psi over (sup_support, inf): identifiability threshold
  double b = 0.0;       // psi(lambda) = sup of the support of F_{c,H}
};

/// Locates the unique interior minimum of psi by bracketing the sign change of
/// psi' and bisecting until |psi'| < tol.edge_derivative.
BulkEdge bulk_edge(const SpectralLaw& law, double c,
                   const RmtTolerances& tol = kDefaultTolerances);
double upper_edge(const SpectralLaw& law, double c,
                  const RmtTolerances& tol = kDefaultTolerances);

/// Stieltjes transform s(z) = integral dF_{c,H}(t) / (t - z) for real z > b.
///
/// Solves s = integral dH(t) / (t {1 - c - c z s} - z) by damped (0.5)
/// fixed-point iteration with Aitken extrapolation, starting from -1/z. If the
/// iteration stalls or lands on the wrong branch, falls back to bisection on
/// the monotone residual psi(lambda) - z over the distant branch, where the
/// companion transform is -1/lambda.
double stieltjes(const PopulationModel& model, double z,
                 const RmtTolerances& tol = kDefaultTolerances);

/// kappa(u) = c (u - 1) E[(T/mu) / (u - T/mu)], T ~ F_{c,H}, for u > b / mu.
/// Evaluated as c (u - 1) (-1 - z s(z)) with z = u mu.
double kappa(const PopulationModel& model, double u,
             const RmtTolerances& tol = kDefaultTolerances);

struct EdgeKappa {
  double value = 0.0;
  bool divergent = false;
  std::vector<double> samples;  // kappa at eta = 1e-2, 1e-3, ..., 1e-6
};

/// kappa at u = b / mu, extrapolated from u = (b / mu)(1 + eta). kappa
/// approaches the edge like a power series in sqrt(eta), so the samples are
/// combined by polynomial extrapolation in sqrt(eta) to 0. `divergent` is set
/// when a sample grows more than tenfold over one decade of eta.
EdgeKappa kappa_at_edge(const PopulationModel& model,
                        const RmtTolerances& tol = kDefaultTolerances);

/// c + c^2 x / (x - 1)^2 with x = lambda / sigma2 for a distant spike of a
/// point-mass tail, and 2c + c sqrt(c) at or below the threshold.
double kappa_point_mass_closed_form(double c, double lambda_over_sigma2);

/// Limit of the j-th (1-based) GIC penalty increment: kappa(psi_j / mu) for
/// j <= r0, kappa(b / mu) beyond.
double kappa_j_theoretical(const PopulationModel& model, int j,
                           const RmtTolerances& tol = kDefaultTolerances);

/// ln u - (u - 1) + increment, increment = 2 kappa(u), 2c or (ln n) c.
double l_curve(Criterion criterion, const PopulationModel& model, int n, double u,
               const RmtTolerances& tol = kDefaultTolerances);

struct CriterionGap {
  std::optional<double> at_spike;  // L(psi_{r0} / mu), absent when r0 = 0
  double at_edge = 0.0;            // L(b / mu)
  std::optional<bool> spike_side;  // L(psi_{r0} / mu) < 0
  bool edge_side = false;          // L(b / mu) > 0
};

struct GapReport {
  int r0 = 0;
  std::optional<double> psi_r0;
  double b = 0.0;
  double mu_h = 0.0;
  CriterionGap gic, aic, bic;

  std::optional<bool> g1() const { return gic.spike_side; }
  bool g2() const { return gic.edge_side; }
  std::optional<bool> a1() const { return aic.spike_side; }
  bool a2() const { return aic.edge_side; }
  std::optional<bool> b1() const { return bic.spike_side; }
  bool b2() const { return bic.edge_side; }
};

GapReport gap_conditions(const PopulationModel& model, int n,
                         const RmtTolerances& tol = kDefaultTolerances);

struct CriticalLambda {
  double lambda = 0.0;
  /// True when L{psi(lambda)/mu} <= 0 already at the identifiability threshold:
  /// every distant spike satisfies the spike-side condition, and the threshold
  /// itself is reported.
  bool at_threshold = false;
};

/// Smallest spike size solving L{psi(lambda) / mu} = 0 on the distant branch.
/// `n` is used by BIC only.
CriticalLambda critical_lambda(Criterion criterion, const SpectralLaw& law, double c, int n,
                               const RmtTolerances& tol = kDefaultTolerances);

/// Continuous part of the Marchenko-Pastur density for a point-mass tail.
double mp_density(double c, double sigma2, double t);
/// Mass of the atom at 0, max(0, 1 - 1/c).
double mp_atom_mass(double c);

}  // namespace rankselect
