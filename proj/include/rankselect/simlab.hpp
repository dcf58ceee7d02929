#pragma once

// Synthetic spiked / factor-model data and the replicate loops that turn
// per-replicate rank selections into selection-rate tables.
//
// Every replicate draws from streams derived from (seed, replicate, purpose),
// and results are reduced in replicate order, so a run is bit-identical
// whatever RANKSELECT_THREADS is.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankselect/criteria.hpp"
#include "rankselect/random.hpp"
#include "rankselect/rmt.hpp"
#include "rankselect/spectra.hpp"

namespace rankselect {

enum class LawKind { kH1, kH2, kH3 };
enum class SpikeRule { kL1, kL2 };
enum class Method { kGic, kAic, kBic, kPa };
enum class FaSetting { kFa1, kFa2, kFa3, kFa4 };

std::string_view to_string(LawKind k);
std::string_view to_string(SpikeRule r);
std::string_view to_string(Method m);
std::string_view to_string(FaSetting s);
LawKind parse_law_kind(std::string_view name);
SpikeRule parse_spike_rule(std::string_view name);
Method parse_method(std::string_view name);
FaSetting parse_fa_setting(std::string_view name);

SpectralLaw make_law(LawKind kind, double theta);

/// Failure inside one replicate; carries its index.
class ReplicateError : public std::runtime_error {
 public:
  ReplicateError(std::size_t replicate, const std::string& what);
  std::size_t replicate() const noexcept { return replicate_; }

 private:
  std::size_t replicate_;
};

struct ExperimentConfig {
  LawKind law = LawKind::kH1;
  double theta = 0.8;
  double c = 0.5;
  int n = 500;
  int r0 = 5;
  SpikeRule spike_rule = SpikeRule::kL1;
  int q = 20;
  int replicates = 200;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::kGic, Method::kAic, Method::kBic};

  /// round(c n)
  int p() const;
  SpectralLaw spectral_law() const { return make_law(law, theta); }
  /// Throws InputError when p < 2, replicates < 1, q >= p or r0 >= p.
  void validate() const;
};

struct SpikeLadder {
  CriticalLambda critical;     // lambda_GIC (L1) or lambda_BIC (L2)
  std::vector<double> spikes;  // {1 + (r0 - j + 1) / 10} lambda_crit, j = 1..r0
};

SpikeLadder spike_ladder(const ExperimentConfig& config);

/// Spikes plus p - r0 tail eigenvalues drawn i.i.d. from H, sorted descending.
Vector build_spiked_spectrum(const ExperimentConfig& config, const SpikeLadder& ladder,
                             Rng& rng);
Vector build_spiked_spectrum(const ExperimentConfig& config, Rng& rng);

/// n x p matrix with independent columns X_ij ~ N(0, eigenvalues[j]).
DataMatrix gen_gaussian(const Vector& eigenvalues, int n, Rng& rng);

struct SelectionRateTable {
  ExperimentConfig config;
  SpikeLadder ladder;
  std::vector<Method> methods;
  /// frequencies[m][r] for r = 0..q; rows sum to 1
  std::vector<Vector> frequencies;
  /// selections[m][replicate]
  std::vector<std::vector<int>> selections;

  const Vector& rates(Method m) const;
  const std::vector<int>& selected(Method m) const;
};

/// Each replicate redraws the tail spectrum and the data, then records the
/// rank chosen by every requested method. Parallel analysis (99 permutations,
/// 95th percentile) is capped at q.
SelectionRateTable run_selection_experiment(const ExperimentConfig& config);

struct FAConfig {
  FaSetting setting = FaSetting::kFa1;
  double s = 10.0;
  int n = 500;
  int p = 300;
  double c = 0.6;
  int q = 100;
  int replicates = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FaModel {
  Matrix directions;  // p x 3, unit-norm columns
  Vector signal;      // diagonal of Phi
  Vector noise;       // diagonal of D
  Matrix loadings() const { return directions * signal.asDiagonal(); }
  Matrix covariance() const;
};

/// Draws directions, signal sizes and noise variances for one replicate.
FaModel draw_fa_model(const FAConfig& config, Rng& rng);
/// Gaussian (FA1) or multivariate t_30 with scale matrix Sigma (FA2-FA4).
DataMatrix gen_fa_data(const FaModel& model, const FAConfig& config, Rng& rng);
DataMatrix gen_fa(const FAConfig& config, Rng& rng);

struct FaResult {
  double s = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // divisor replicates - 1
  int replicates = 0;
  std::vector<int> selected;
};

FaResult run_fa_experiment(const FAConfig& config);

/// Sample covariance eigenvalues of `replicates` Gaussian draws from a
/// diagonal population spectrum.
std::vector<Vector> simulate_sample_spectra(const Vector& population, int n, int replicates,
                                            std::uint64_t seed);

struct KappaIncrement {
  double mean = 0.0;
  int used = 0;
  int excluded = 0;  // replicates with an infinite penalty
};

/// Mean over replicates of (gic_penalty(j) - gic_penalty(j - 1)) / n.
KappaIncrement kappa_increment_empirical(const std::vector<Vector>& spectra, int n, int j);

}  // namespace rankselect
