#include "rankselect/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "rankselect/error.hpp"

namespace rankselect {
namespace {

double atom_mean(const std::vector<double>& atoms, auto&& f) {
  double sum = 0.0;
  for (double t : atoms) sum += f(t);
  return sum / static_cast<double>(atoms.size());
}

void require_outside_support(const SpectralLaw& law, double lambda) {
  if (!(lambda > law.sup_support())) {
    throw DomainError("lambda = " + std::to_string(lambda) +
                      " is not above the support of H (sup = " +
                      std::to_string(law.sup_support()) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SpectralLaw

SpectralLaw::SpectralLaw(Kind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {
  if (params_.empty()) throw InputError("spectral law needs at least one parameter");
  for (double v : params_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("spectral law parameters must be finite and positive");
    }
  }
  if (kind_ == Kind::kContinuousUniform) {
    if (params_.size() != 2 || !(params_[0] < params_[1])) {
      throw InputError("continuous uniform law needs 0 < lo < hi");
    }
    mean_ = 0.5 * (params_[0] + params_[1]);
    sup_ = params_[1];
  } else {
    std::sort(params_.begin(), params_.end());
    mean_ = std::accumulate(params_.begin(), params_.end(), 0.0) /
            static_cast<double>(params_.size());
    sup_ = params_.back();
  }
}

SpectralLaw SpectralLaw::point_mass(double sigma2) { return {Kind::kPointMass, {sigma2}}; }

SpectralLaw SpectralLaw::continuous_uniform(double lo, double hi) {
  return {Kind::kContinuousUniform, {lo, hi}};
}

SpectralLaw SpectralLaw::discrete_uniform(std::vector<double> atoms) {
  return {Kind::kDiscreteUniform, std::move(atoms)};
}

SpectralLaw SpectralLaw::empirical(std::vector<double> values) {
  return {Kind::kEmpirical, std::move(values)};
}

SpectralLaw SpectralLaw::h1() { return point_mass(1.0); }

SpectralLaw SpectralLaw::h2(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("theta must lie in (0, 1)");
  return continuous_uniform(1.0 - theta, 1.0 + theta);
}

SpectralLaw SpectralLaw::h3(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("theta must lie in (0, 1)");
  return discrete_uniform({1.0 - theta, 1.0, 1.0 + theta});
}

double SpectralLaw::h_integral(double lambda) const {
  require_outside_support(*this, lambda);
  switch (kind_) {
    case Kind::kPointMass:
      return params_[0] / (lambda - params_[0]);
    case Kind::kContinuousUniform: {
      const double lo = params_[0], hi = params_[1], w = hi - lo;
      return lambda / w * std::log1p(w / (lambda - hi)) - 1.0;
    }
    default:
      return atom_mean(params_, [lambda](double t) { return t / (lambda - t); });
  }
}

double SpectralLaw::h_integral_derivative(double lambda) const {
  require_outside_support(*this, lambda);
  switch (kind_) {
    case Kind::kPointMass: {
      const double d = lambda - params_[0];
      return -params_[0] / (d * d);
    }
    case Kind::kContinuousUniform: {
      const double lo = params_[0], hi = params_[1], w = hi - lo;
      return std::log1p(w / (lambda - hi)) / w - lambda / ((lambda - lo) * (lambda - hi));
    }
    default:
      return -atom_mean(params_, [lambda](double t) {
        const double d = lambda - t;
        return t / (d * d);
      });
  }
}

double SpectralLaw::resolvent_integral(double a, double z) const {
  switch (kind_) {
    case Kind::kPointMass:
      return 1.0 / (params_[0] * a - z);
    case Kind::kContinuousUniform: {
      // (1 / (w a)) ln((z - hi a) / (z - lo a)) rewritten around a = 0
      const double lo = params_[0], w = params_[1] - params_[0];
      const double d_lo = z - lo * a;
      const double x = -w * a / d_lo;
      if (!(x > -1.0)) return std::nan("");
      const double ratio = x == 0.0 ? 1.0 : std::log1p(x) / x;
      return -ratio / d_lo;
    }
    default:
      return atom_mean(params_, [a, z](double t) { return 1.0 / (t * a - z); });
  }
}

double SpectralLaw::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::kPointMass:
      return params_[0];
    case Kind::kContinuousUniform:
      return std::uniform_real_distribution<double>(params_[0], params_[1])(rng);
    default: {
      std::uniform_int_distribution<std::size_t> pick(0, params_.size() - 1);
      return params_[pick(rng)];
    }
  }
}

// ---------------------------------------------------------------------------
// PopulationModel and the spike map

PopulationModel::PopulationModel(SpectralLaw law, double c, std::vector<double> spikes)
    : law_(std::move(law)), c_(c), spikes_(std::move(spikes)) {
  if (!(c_ > 0.0) || !std::isfinite(c_)) throw InputError("c must be finite and positive");
  std::sort(spikes_.begin(), spikes_.end(), std::greater<>());
  for (double s : spikes_) {
    if (!(s > law_.sup_support())) {
      throw InputError("spike " + std::to_string(s) + " does not exceed sup of H (" +
                       std::to_string(law_.sup_support()) + ")");
    }
  }
}

double h_integral(const SpectralLaw& law, double lambda) { return law.h_integral(lambda); }

double psi(const PopulationModel& model, double lambda) {
  return lambda * (1.0 + model.c() * model.law().h_integral(lambda));
}

double psi_prime(const PopulationModel& model, double lambda) {
  const auto& law = model.law();
  return 1.0 + model.c() * law.h_integral(lambda) +
         model.c() * lambda * law.h_integral_derivative(lambda);
}

int target_rank(const PopulationModel& model) {
  int r0 = 0;
  for (double s : model.spikes()) {
    if (psi_prime(model, s) > 0.0) ++r0;
  }
  return r0;
}

// ---------------------------------------------------------------------------
// Bulk edge

BulkEdge bulk_edge(const SpectralLaw& law, double c, const RmtTolerances& tol) {
  const PopulationModel model(law, c);
  const double sup = law.sup_support();

  double delta = 1e-3 * sup;
  double lo = sup + delta;
  while (psi_prime(model, lo) >= 0.0) {
    delta *= 0.1;
    if (delta < 1e-15 * sup) {
      throw NumericalError("bulk_edge: psi' is not negative next to the support");
    }
    lo = sup + delta;
  }
  double hi = 2.0 * sup;
  while (psi_prime(model, hi) <= 0.0) {
    hi *= 2.0;
    if (hi > tol.search_ceiling) throw NumericalError("bulk_edge: cannot bracket psi' = 0");
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double d = psi_prime(model, mid);
    if (std::abs(d) < tol.edge_derivative) break;
    (d < 0.0 ? lo : hi) = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return {mid, psi(model, mid)};
}

double upper_edge(const SpectralLaw& law, double c, const RmtTolerances& tol) {
  return bulk_edge(law, c, tol).b;
}

// ---------------------------------------------------------------------------
// Stieltjes transform

namespace {

// Solves psi(lambda) = z on the increasing branch lambda > edge.lambda.
double distant_preimage(const PopulationModel& model, const BulkEdge& edge, double z,
                        const RmtTolerances& tol) {
  double lo = edge.lambda;
  double hi = std::max(2.0 * edge.lambda, z);
  while (psi(model, hi) <= z) {
    hi *= 2.0;
    if (hi > tol.search_ceiling * std::max(1.0, z)) {
      throw NumericalError("stieltjes: cannot bracket psi(lambda) = z");
    }
  }
  for (int it = 0; it < 400 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi(model, mid) < z ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double stieltjes(const PopulationModel& model, double z, const RmtTolerances& tol) {
  const BulkEdge edge = bulk_edge(model.law(), model.c(), tol);
  if (!(z > edge.b)) {
    throw DomainError("stieltjes: z = " + std::to_string(z) +
                      " is not right of the bulk edge b = " + std::to_string(edge.b));
  }
  const double c = model.c();
  const auto& law = model.law();
  auto map = [&](double s) {
    return 0.5 * s + 0.5 * law.resolvent_integral(1.0 - c - c * z * s, z);
  };

  double s = -1.0 / z;
  bool converged = false;
  double x0 = s, x1 = 0.0;
  int phase = 0;
  for (int it = 0; it < tol.max_iterations; ++it) {
    const double next = map(s);
    if (!std::isfinite(next)) break;
    if (std::abs(next - s) <= tol.fixed_point * std::abs(next)) {
      s = next;
      converged = true;
      break;
    }
    s = next;
    // Aitken delta-squared on every three consecutive iterates
    if (phase == 0) {
      x1 = s;
      phase = 1;
    } else {
      const double denom = s - 2.0 * x1 + x0;
      const double acc = denom != 0.0 ? s - (s - x1) * (s - x1) / denom : s;
      if (std::isfinite(acc) && acc < 0.0) s = acc;
      x0 = s;
      phase = 0;
    }
  }

  if (converged) {
    // a small step is not a small error when the contraction rate is near 1
    const double f1 = map(s);
    const double f2 = map(f1);
    const double d1 = std::abs(f1 - s), d2 = std::abs(f2 - f1);
    const double rate = d1 > 0.0 ? d2 / d1 : 0.0;
    if (!(rate < 1.0) || d1 * rate / (1.0 - rate) > tol.fixed_point * std::abs(s)) {
      converged = false;
    }
  }
  if (converged) {
    // accept only the root on the distant branch
    const double companion = -(1.0 - c) / z + c * s;
    const double lambda = -1.0 / companion;
    if (companion < 0.0 && lambda >= edge.lambda * (1.0 - 1e-9)) return s;
  }

  const double lambda = distant_preimage(model, edge, z, tol);
  const double companion = -1.0 / lambda;
  return (companion + (1.0 - c) / z) / c;
}

// ---------------------------------------------------------------------------
// kappa

double kappa(const PopulationModel& model, double u, const RmtTolerances& tol) {
  const double mu = model.law().mean();
  const double z = u * mu;
  const double b = upper_edge(model.law(), model.c(), tol);
  if (!(z > b)) {
    throw DomainError("kappa: u = " + std::to_string(u) + " is not above b / mu = " +
                      std::to_string(b / mu));
  }
  const double s = stieltjes(model, z, tol);
  return model.c() * (u - 1.0) * (-1.0 - z * s);
}

EdgeKappa kappa_at_edge(const PopulationModel& model, const RmtTolerances& tol) {
  const double u_edge = upper_edge(model.law(), model.c(), tol) / model.law().mean();
  constexpr double kEtas[] = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  constexpr int kCount = static_cast<int>(std::size(kEtas));

  EdgeKappa out;
  double x[kCount];
  for (int i = 0; i < kCount; ++i) {
    x[i] = std::sqrt(kEtas[i]);
    out.samples.push_back(kappa(model, u_edge * (1.0 + kEtas[i]), tol));
  }
  // Lagrange extrapolation to sqrt(eta) = 0
  out.value = 0.0;
  for (int i = 0; i < kCount; ++i) {
    double weight = 1.0;
    for (int j = 0; j < kCount; ++j) {
      if (j != i) weight *= -x[j] / (x[i] - x[j]);
    }
    out.value += weight * out.samples[i];
  }
  for (int i = 0; i + 1 < kCount; ++i) {
    if (std::abs(out.samples[i + 1]) > 10.0 * std::abs(out.samples[i])) out.divergent = true;
  }
  return out;
}

double kappa_point_mass_closed_form(double c, double x) {
  if (x <= 1.0 + std::sqrt(c)) return 2.0 * c + c * std::sqrt(c);
  return c + c * c * x / ((x - 1.0) * (x - 1.0));
}

double kappa_j_theoretical(const PopulationModel& model, int j, const RmtTolerances& tol) {
  if (j < 1) throw InputError("kappa_j_theoretical: j must be >= 1");
  const int r0 = target_rank(model);
  const double c = model.c();
  if (model.law().kind() == SpectralLaw::Kind::kPointMass) {
    const double sigma2 = model.law().mean();
    if (j <= r0) return kappa_point_mass_closed_form(c, model.spikes()[j - 1] / sigma2);
    return 2.0 * c + c * std::sqrt(c);
  }
  if (j <= r0) {
    return kappa(model, psi(model, model.spikes()[j - 1]) / model.law().mean(), tol);
  }
  return kappa_at_edge(model, tol).value;
}

// ---------------------------------------------------------------------------
// L-curves and gap conditions

double l_curve(Criterion criterion, const PopulationModel& model, int n, double u,
               const RmtTolerances& tol) {
  const double u_edge = upper_edge(model.law(), model.c(), tol) / model.law().mean();
  if (u < u_edge * (1.0 - 1e-12)) {
    throw DomainError("l_curve: u = " + std::to_string(u) + " is below b / mu = " +
                      std::to_string(u_edge));
  }
  const double c = model.c();
  double increment = 0.0;
  switch (criterion) {
    case Criterion::kGic:
      increment = 2.0 * (u <= u_edge * (1.0 + 1e-12) ? kappa_at_edge(model, tol).value
                                                     : kappa(model, u, tol));
      break;
    case Criterion::kAic:
      increment = 2.0 * c;
      break;
    case Criterion::kBic:
      increment = std::log(static_cast<double>(n)) * c;
      break;
  }
  return std::log(u) - (u - 1.0) + increment;
}

GapReport gap_conditions(const PopulationModel& model, int n, const RmtTolerances& tol) {
  GapReport report;
  report.r0 = target_rank(model);
  report.b = upper_edge(model.law(), model.c(), tol);
  report.mu_h = model.law().mean();
  const double u_edge = report.b / report.mu_h;

  const double base_edge = std::log(u_edge) - (u_edge - 1.0);
  const double c = model.c();
  const double kappa_edge = kappa_at_edge(model, tol).value;
  report.gic.at_edge = base_edge + 2.0 * kappa_edge;
  report.aic.at_edge = base_edge + 2.0 * c;
  report.bic.at_edge = base_edge + std::log(static_cast<double>(n)) * c;

  if (report.r0 > 0) {
    report.psi_r0 = psi(model, model.spikes()[report.r0 - 1]);
    const double u = *report.psi_r0 / report.mu_h;
    report.gic.at_spike = l_curve(Criterion::kGic, model, n, u, tol);
    report.aic.at_spike = l_curve(Criterion::kAic, model, n, u, tol);
    report.bic.at_spike = l_curve(Criterion::kBic, model, n, u, tol);
  }
  for (CriterionGap* g : {&report.gic, &report.aic, &report.bic}) {
    g->edge_side = g->at_edge > 0.0;
    if (g->at_spike) g->spike_side = *g->at_spike < 0.0;
  }
  return report;
}

CriticalLambda critical_lambda(Criterion criterion, const SpectralLaw& law, double c, int n,
                               const RmtTolerances& tol) {
  if (criterion == Criterion::kBic && n < 2) {
    throw InputError("critical_lambda: BIC needs the sample size n");
  }
  const PopulationModel model(law, c);
  const BulkEdge edge = bulk_edge(law, c, tol);
  const double mu = law.mean();
  auto residual = [&](double lambda) {
    return l_curve(criterion, model, n, psi(model, lambda) / mu, tol);
  };

  double lo = edge.lambda * (1.0 + 1e-6);
  if (residual(lo) <= 0.0) return {edge.lambda, true};

  double hi = 2.0 * lo;
  while (residual(hi) > 0.0) {
    hi *= 2.0;
    if (hi > tol.search_ceiling) {
      throw NumericalError("critical_lambda(" + std::string(to_string(criterion)) +
                           "): no sign change below " + std::to_string(tol.search_ceiling));
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = residual(mid);
    if (std::abs(f) < tol.root_residual) break;
    (f > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return {mid, false};
}

// ---------------------------------------------------------------------------
// Marchenko-Pastur

double mp_density(double c, double sigma2, double t) {
  const double a = sigma2 * (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  const double b = sigma2 * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (t <= a || t >= b || t <= 0.0) return 0.0;
  return std::sqrt((t - a) * (b - t)) / (2.0 * std::numbers::pi * c * sigma2 * t);
}

double mp_atom_mass(double c) { return std::max(0.0, 1.0 - 1.0 / c); }

}  // namespace rankselect
