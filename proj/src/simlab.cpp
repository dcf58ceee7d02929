#include "rankselect/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <string>

#include "rankselect/error.hpp"

namespace rankselect {
namespace {

std::string lowered(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::size_t method_index(const std::vector<Method>& methods, Method m) {
  const auto it = std::find(methods.begin(), methods.end(), m);
  if (it == methods.end()) {
    throw InputError("method " + std::string(to_string(m)) + " was not run");
  }
  return static_cast<std::size_t>(it - methods.begin());
}

}  // namespace

std::string_view to_string(LawKind k) {
  switch (k) {
    case LawKind::kH1:
      return "h1";
    case LawKind::kH2:
      return "h2";
    case LawKind::kH3:
      return "h3";
  }
  return "?";
}

std::string_view to_string(SpikeRule r) { return r == SpikeRule::kL1 ? "l1" : "l2"; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kGic:
      return "gic";
    case Method::kAic:
      return "aic";
    case Method::kBic:
      return "bic";
    case Method::kPa:
      return "pa";
  }
  return "?";
}

std::string_view to_string(FaSetting s) {
  switch (s) {
    case FaSetting::kFa1:
      return "fa1";
    case FaSetting::kFa2:
      return "fa2";
    case FaSetting::kFa3:
      return "fa3";
    case FaSetting::kFa4:
      return "fa4";
  }
  return "?";
}

LawKind parse_law_kind(std::string_view name) {
  const std::string s = lowered(name);
  if (s == "h1") return LawKind::kH1;
  if (s == "h2") return LawKind::kH2;
  if (s == "h3") return LawKind::kH3;
  throw InputError("unknown tail law '" + std::string(name) + "' (expected h1, h2 or h3)");
}

SpikeRule parse_spike_rule(std::string_view name) {
  const std::string s = lowered(name);
  if (s == "l1") return SpikeRule::kL1;
  if (s == "l2") return SpikeRule::kL2;
  throw InputError("unknown spike rule '" + std::string(name) + "' (expected l1 or l2)");
}

Method parse_method(std::string_view name) {
  const std::string s = lowered(name);
  if (s == "pa") return Method::kPa;
  switch (parse_criterion(s)) {
    case Criterion::kGic:
      return Method::kGic;
    case Criterion::kAic:
      return Method::kAic;
    case Criterion::kBic:
      return Method::kBic;
  }
  return Method::kGic;
}

FaSetting parse_fa_setting(std::string_view name) {
  const std::string s = lowered(name);
  if (s == "fa1") return FaSetting::kFa1;
  if (s == "fa2") return FaSetting::kFa2;
  if (s == "fa3") return FaSetting::kFa3;
  if (s == "fa4") return FaSetting::kFa4;
  throw InputError("unknown FA setting '" + std::string(name) + "' (expected fa1..fa4)");
}

SpectralLaw make_law(LawKind kind, double theta) {
  switch (kind) {
    case LawKind::kH1:
      return SpectralLaw::h1();
    case LawKind::kH2:
      return SpectralLaw::h2(theta);
    case LawKind::kH3:
      return SpectralLaw::h3(theta);
  }
  return SpectralLaw::h1();
}

ReplicateError::ReplicateError(std::size_t replicate, const std::string& what)
    : std::runtime_error("replicate " + std::to_string(replicate) + ": " + what),
      replicate_(replicate) {}

// ---------------------------------------------------------------------------
// Spiked-model experiments

int ExperimentConfig::p() const { return static_cast<int>(std::lround(c * n)); }

void ExperimentConfig::validate() const {
  if (!(c > 0.0)) throw InputError("c must be positive");
  if (p() < 2) throw InputError("p = round(c n) must be at least 2");
  if (replicates < 1) throw InputError("replicates must be >= 1");
  if (q < 1 || q >= p()) throw InputError("q must lie in [1, p - 1]");
  if (r0 < 0 || r0 >= p()) throw InputError("r0 must lie in [0, p - 1]");
  if (methods.empty()) throw InputError("no methods requested");
}

SpikeLadder spike_ladder(const ExperimentConfig& config) {
  const Criterion crit = config.spike_rule == SpikeRule::kL1 ? Criterion::kGic : Criterion::kBic;
  SpikeLadder ladder;
  ladder.critical = critical_lambda(crit, config.spectral_law(), config.c, config.n);
  for (int j = 1; j <= config.r0; ++j) {
    ladder.spikes.push_back((1.0 + (config.r0 - j + 1) / 10.0) * ladder.critical.lambda);
  }
  return ladder;
}

Vector build_spiked_spectrum(const ExperimentConfig& config, const SpikeLadder& ladder,
                             Rng& rng) {
  const int p = config.p();
  const SpectralLaw law = config.spectral_law();
  Vector out(p);
  for (int j = 0; j < config.r0; ++j) out[j] = ladder.spikes[j];
  for (int j = config.r0; j < p; ++j) out[j] = law.sample(rng);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

Vector build_spiked_spectrum(const ExperimentConfig& config, Rng& rng) {
  return build_spiked_spectrum(config, spike_ladder(config), rng);
}

DataMatrix gen_gaussian(const Vector& eigenvalues, int n, Rng& rng) {
  const auto p = eigenvalues.size();
  if ((eigenvalues.array() <= 0.0).any()) throw InputError("gen_gaussian: eigenvalues must be positive");
  const Vector sd = eigenvalues.cwiseSqrt();
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = sd[j] * normal(rng);
  }
  return DataMatrix(std::move(x));
}

const Vector& SelectionRateTable::rates(Method m) const {
  return frequencies[method_index(methods, m)];
}

const std::vector<int>& SelectionRateTable::selected(Method m) const {
  return selections[method_index(methods, m)];
}

SelectionRateTable run_selection_experiment(const ExperimentConfig& config) {
  config.validate();
  SelectionRateTable table;
  table.config = config;
  table.ladder = spike_ladder(config);
  table.methods = config.methods;

  const auto reps = static_cast<std::size_t>(config.replicates);
  const std::size_t m_count = config.methods.size();
  table.selections.assign(m_count, std::vector<int>(reps, 0));

  parallel_for(reps, [&](std::size_t rep) {
    try {
      Rng tail_rng = make_stream(config.seed, rep, StreamTag::kTailSpectrum);
      const Vector spectrum = build_spiked_spectrum(config, table.ladder, tail_rng);
      Rng data_rng = make_stream(config.seed, rep, StreamTag::kData);
      const DataMatrix data = gen_gaussian(spectrum, config.n, data_rng);
      const Vector eig = sym_eigenvalues(sample_covariance(data).cov);
      for (std::size_t m = 0; m < m_count; ++m) {
        int chosen = 0;
        switch (config.methods[m]) {
          case Method::kGic:
            chosen = criterion_trace(eig, config.n, config.q, Criterion::kGic).selected;
            break;
          case Method::kAic:
            chosen = criterion_trace(eig, config.n, config.q, Criterion::kAic).selected;
            break;
          case Method::kBic:
            chosen = criterion_trace(eig, config.n, config.q, Criterion::kBic).selected;
            break;
          case Method::kPa:
            chosen = std::min(config.q, parallel_analysis(data, 99, 0.95,
                                                          make_stream(config.seed, rep,
                                                                      StreamTag::kPermutation)()));
            break;
        }
        table.selections[m][rep] = chosen;
      }
    } catch (const std::exception& e) {
      throw ReplicateError(rep, e.what());
    }
  });

  for (std::size_t m = 0; m < m_count; ++m) {
    Vector freq = Vector::Zero(config.q + 1);
    for (int r : table.selections[m]) freq[r] += 1.0;
    table.frequencies.push_back(freq / static_cast<double>(reps));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Factor-model experiments

void FAConfig::validate() const {
  if (n < 2 || p < 4) throw InputError("FA config needs n >= 2 and p >= 4");
  if (q < 1 || q >= p) throw InputError("q must lie in [1, p - 1]");
  if (replicates < 1) throw InputError("replicates must be >= 1");
  if (!(s > 0.0) || !(c > 0.0)) throw InputError("s and c must be positive");
}

Matrix FaModel::covariance() const {
  const Matrix l = loadings();
  Matrix sigma = l * l.transpose();
  sigma.diagonal() += noise;
  return sigma;
}

FaModel draw_fa_model(const FAConfig& config, Rng& rng) {
  std::normal_distribution<double> normal;
  FaModel model;
  model.directions.resize(config.p, 3);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < config.p; ++i) model.directions(i, k) = normal(rng);
    model.directions.col(k).normalize();
  }
  const bool near_multiple =
      config.setting == FaSetting::kFa3 || config.setting == FaSetting::kFa4;
  model.signal = std::sqrt(config.c) * Eigen::Vector3d(config.s, near_multiple ? 6.0 : 10.0, 6.0);

  const bool noisy = config.setting == FaSetting::kFa4;
  std::uniform_real_distribution<double> noise(noisy ? 5.0 : 1.0, noisy ? 10.0 : 2.0);
  model.noise.resize(config.p);
  for (int i = 0; i < config.p; ++i) model.noise[i] = noise(rng);
  return model;
}

DataMatrix gen_fa_data(const FaModel& model, const FAConfig& config, Rng& rng) {
  const Matrix l = model.loadings();
  const Vector noise_sd = model.noise.cwiseSqrt();
  const bool heavy = config.setting != FaSetting::kFa1;
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(30.0);

  Matrix x(config.n, config.p);
  Eigen::Vector3d f;
  for (int i = 0; i < config.n; ++i) {
    for (int k = 0; k < 3; ++k) f[k] = normal(rng);
    x.row(i) = (l * f).transpose();
    for (int j = 0; j < config.p; ++j) x(i, j) += noise_sd[j] * normal(rng);
    if (heavy) x.row(i) /= std::sqrt(chi2(rng) / 30.0);
  }
  return DataMatrix(std::move(x));
}

DataMatrix gen_fa(const FAConfig& config, Rng& rng) {
  const FaModel model = draw_fa_model(config, rng);
  return gen_fa_data(model, config, rng);
}

FaResult run_fa_experiment(const FAConfig& config) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.replicates);
  FaResult out;
  out.s = config.s;
  out.replicates = config.replicates;
  out.selected.assign(reps, 0);

  parallel_for(reps, [&](std::size_t rep) {
    try {
      Rng model_rng = make_stream(config.seed, rep, StreamTag::kLoadings);
      const FaModel model = draw_fa_model(config, model_rng);
      Rng data_rng = make_stream(config.seed, rep, StreamTag::kData);
      const DataMatrix data = gen_fa_data(model, config, data_rng);
      const Vector eig = sym_eigenvalues(sample_covariance(data).cov);
      out.selected[rep] = criterion_trace(eig, config.n, config.q, Criterion::kGic).selected;
    } catch (const std::exception& e) {
      throw ReplicateError(rep, e.what());
    }
  });

  double sum = 0.0;
  for (int k : out.selected) sum += k;
  out.mean = sum / static_cast<double>(reps);
  double ss = 0.0;
  for (int k : out.selected) ss += (k - out.mean) * (k - out.mean);
  out.sd = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Penalty increments

std::vector<Vector> simulate_sample_spectra(const Vector& population, int n, int replicates,
                                            std::uint64_t seed) {
  if (replicates < 1) throw InputError("replicates must be >= 1");
  std::vector<Vector> out(static_cast<std::size_t>(replicates));
  parallel_for(out.size(), [&](std::size_t rep) {
    Rng rng = make_stream(seed, rep, StreamTag::kData);
    out[rep] = sym_eigenvalues(sample_covariance(gen_gaussian(population, n, rng)).cov);
  });
  return out;
}

KappaIncrement kappa_increment_empirical(const std::vector<Vector>& spectra, int n, int j) {
  if (j < 1) throw InputError("kappa_increment_empirical: j must be >= 1");
  KappaIncrement out;
  double sum = 0.0;
  for (const Vector& eig : spectra) {
    const double hi = gic_penalty(eig, j);
    const double lo = gic_penalty(eig, j - 1);
    if (std::isinf(hi) || std::isinf(lo)) {
      ++out.excluded;
      continue;
    }
    sum += (hi - lo) / n;
    ++out.used;
  }
  if (out.used == 0) throw NumericalError("kappa_increment_empirical: every replicate had an infinite penalty");
  out.mean = sum / out.used;
  return out;
}

}  // namespace rankselect
