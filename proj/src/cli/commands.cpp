#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "rankselect/cli.hpp"
#include "rankselect/error.hpp"
#include "rankselect/rmt.hpp"

namespace rankselect::cli {
namespace {

CriticalLambda labelled_critical(Criterion crit, const SpectralLaw& law, double c, int n) {
  try {
    return critical_lambda(crit, law, c, n);
  } catch (const std::exception& e) {
    throw NumericalError("critical lambda for " + std::string(to_string(crit)) + ": " + e.what());
  }
}

Json critical_json(const CriticalLambda& cl) {
  return Json{{"lambda", cl.lambda}, {"at_threshold", cl.at_threshold}};
}

Json optional_json(const std::optional<double>& v) {
  return v ? number_or_inf(*v) : Json(nullptr);
}

Json optional_json(const std::optional<bool>& v) { return v ? Json(*v) : Json(nullptr); }

Json gap_json(const CriterionGap& g) {
  return Json{{"l_at_spike", optional_json(g.at_spike)},
              {"l_at_edge", number_or_inf(g.at_edge)},
              {"spike_side", optional_json(g.spike_side)},
              {"edge_side", g.edge_side}};
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InputError("cannot parse " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<Criterion> parse_criteria_list(std::string_view list) {
  std::vector<Criterion> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    const auto item = list.substr(start, comma - start);
    if (!item.empty()) {
      const Criterion c = parse_criterion(item);
      bool seen = false;
      for (auto prev : out) seen = seen || prev == c;
      if (!seen) out.push_back(c);
    }
    start = comma + 1;
  }
  if (out.empty()) throw InputError("empty criteria list");
  return out;
}

SelectionReport select_rank(const DataMatrix& data, const SelectOptions& options) {
  SelectionReport report;
  report.n = static_cast<int>(data.rows());
  report.input_p = static_cast<int>(data.cols());

  Matrix working = data.values();
  if (options.prefilter_fraction) {
    const PrefilterResult pre = pca_prefilter(data, *options.prefilter_fraction);
    report.prefilter_fraction = options.prefilter_fraction;
    report.retained_dimension = pre.retained;
    if (pre.retained < 2) {
      throw InputError("prefilter kept " + std::to_string(pre.retained) +
                       " dimension; rank selection needs at least 2 (raise --pca-prefilter)");
    }
    working = pre.scores;
  }
  DataMatrix prepared(std::move(working));
  if (options.standardize) {
    prepared = standardize(prepared);
    report.standardized = true;
  }

  const CovarianceSummary cs = sample_covariance(prepared);
  const SpectralDecomp decomp = sym_eigen(cs.cov);
  report.p = static_cast<int>(prepared.cols());
  report.eigenvalues = decomp.eigenvalues;

  const int numrank = numerical_rank(decomp.eigenvalues);
  const int q = options.q ? *options.q : default_q(decomp.eigenvalues);
  if (q > numrank - 1) {
    throw InputError("q = " + std::to_string(q) + " is not below the numerical rank " +
                     std::to_string(numrank) + " of the covariance; try --q " +
                     std::to_string(std::max(1, numrank - 1)) + " or smaller");
  }
  if (q < 1) {
    throw InputError("q = " + std::to_string(q) + " leaves nothing to select (need q >= 1)");
  }
  report.q = q;
  for (Criterion c : options.criteria) {
    const CriterionTrace t = criterion_trace(decomp, report.n, q, c);
    report.criteria.push_back({c, t.penalty, t.score, t.selected});
  }
  return report;
}

SelectionReport cmd_select(const SelectOptions& options) {
  const DataMatrix data = read_data_matrix(options.input);
  SelectionReport report = select_rank(data, options);
  if (options.output) write_json(*options.output, to_json(report));
  return report;
}

Json simulation_sidecar(const SelectionRateTable& table) {
  const ExperimentConfig& cfg = table.config;
  const SpectralLaw law = cfg.spectral_law();
  const PopulationModel model(law, cfg.c, table.ladder.spikes);
  const GapReport gaps = gap_conditions(model, cfg.n);

  Json doc;
  doc["tool"] = "rankselect";
  doc["version"] = tool_version();
  doc["config"] = Json{{"h", to_string(cfg.law)},
                       {"theta", cfg.theta},
                       {"c", cfg.c},
                       {"n", cfg.n},
                       {"p", cfg.p()},
                       {"r0", cfg.r0},
                       {"spikes", to_string(cfg.spike_rule)},
                       {"q", cfg.q},
                       {"replicates", cfg.replicates},
                       {"seed", cfg.seed}};
  doc["lambda_crit"] = Json{
      {"gic", critical_json(labelled_critical(Criterion::kGic, law, cfg.c, cfg.n))},
      {"aic", critical_json(labelled_critical(Criterion::kAic, law, cfg.c, cfg.n))},
      {"bic", critical_json(labelled_critical(Criterion::kBic, law, cfg.c, cfg.n))}};
  doc["r0"] = cfg.r0;
  doc["spike_eigenvalues"] = table.ladder.spikes;
  std::vector<double> psis;
  for (double s : table.ladder.spikes) psis.push_back(psi(model, s));
  doc["psi"] = psis;
  doc["b"] = gaps.b;
  doc["mu_h"] = gaps.mu_h;
  doc["gaps"] = Json{{"G1", optional_json(gaps.g1())}, {"G2", gaps.g2()},
                     {"A1", optional_json(gaps.a1())}, {"A2", gaps.a2()},
                     {"B1", optional_json(gaps.b1())}, {"B2", gaps.b2()}};
  doc["l_values"] = Json{{"gic", gap_json(gaps.gic)},
                         {"aic", gap_json(gaps.aic)},
                         {"bic", gap_json(gaps.bic)}};
  return doc;
}

SelectionRateTable cmd_simulate(const SimulateOptions& options) {
  ExperimentConfig cfg = options.config;
  cfg.methods = {Method::kGic, Method::kAic, Method::kBic};
  cfg.validate();
  // fail on the theory side, with the criterion named, before spending time
  // on replicates
  const SpectralLaw law = cfg.spectral_law();
  for (Criterion c : {Criterion::kGic, Criterion::kAic, Criterion::kBic}) {
    labelled_critical(c, law, cfg.c, cfg.n);
  }

  SelectionRateTable table = run_selection_experiment(cfg);
  std::vector<std::vector<double>> rows;
  for (int r = 0; r <= cfg.q; ++r) {
    rows.push_back({static_cast<double>(r), table.rates(Method::kGic)[r],
                    table.rates(Method::kAic)[r], table.rates(Method::kBic)[r]});
  }
  write_csv(options.out, {"rank", "gic", "aic", "bic"}, rows);
  write_json(sidecar_path(options.out), simulation_sidecar(table));
  return table;
}

std::vector<double> parse_grid(std::string_view spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string_view::npos ? a : spec.find(':', a + 1);
  if (b == std::string_view::npos) {
    throw InputError("grid '" + std::string(spec) + "' is not start:stop:step");
  }
  const double start = parse_double(spec.substr(0, a), "grid start");
  const double stop = parse_double(spec.substr(a + 1, b - a - 1), "grid stop");
  const double step = parse_double(spec.substr(b + 1), "grid step");
  if (!(step > 0.0) || stop < start) {
    throw InputError("grid '" + std::string(spec) + "' needs step > 0 and stop >= start");
  }
  const auto count = static_cast<long>(std::floor((stop - start) / step + 0.5)) + 1;
  std::vector<double> out;
  for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

std::vector<FaResult> cmd_fa(const FaOptions& options) {
  if (options.s_values.empty()) throw InputError("no signal sizes given");
  std::vector<FaResult> results;
  std::vector<std::vector<double>> rows;
  for (double s : options.s_values) {
    FAConfig cfg = options.config;
    cfg.s = s;
    FaResult res = run_fa_experiment(cfg);
    rows.push_back({res.s, res.mean, res.sd, static_cast<double>(res.replicates)});
    results.push_back(std::move(res));
  }
  write_csv(options.out, {"s", "mean", "sd", "replicates"}, rows);
  return results;
}

CurveTable theory_curves(const CurvesOptions& options) {
  if (options.points < 2) throw InputError("--points must be at least 2");
  if (options.n < 2) throw InputError("--n must be at least 2");
  const SpectralLaw law = make_law(options.law, options.theta);
  const PopulationModel model(law, options.c);

  CurveTable t;
  t.b = upper_edge(law, options.c);
  t.mu_h = law.mean();
  t.lambda_gic = labelled_critical(Criterion::kGic, law, options.c, options.n);
  t.lambda_aic = labelled_critical(Criterion::kAic, law, options.c, options.n);
  t.lambda_bic = labelled_critical(Criterion::kBic, law, options.c, options.n);
  t.edge = kappa_at_edge(model);

  const double u0 = t.b / t.mu_h;
  if (!(options.umax > u0)) {
    throw InputError("--umax must exceed b / mu_H = " + std::to_string(u0));
  }
  for (int k = 0; k < options.points; ++k) {
    const double u =
        k == options.points - 1 ? options.umax : u0 + (options.umax - u0) * k / (options.points - 1);
    t.u.push_back(u);
    t.kappa.push_back(k == 0 ? t.edge.value : kappa(model, u));
    t.l_gic.push_back(l_curve(Criterion::kGic, model, options.n, u));
    t.l_aic.push_back(l_curve(Criterion::kAic, model, options.n, u));
    t.l_bic.push_back(l_curve(Criterion::kBic, model, options.n, u));
  }
  return t;
}

Json curves_sidecar(const CurvesOptions& options, const CurveTable& t) {
  Json doc;
  doc["tool"] = "rankselect";
  doc["version"] = tool_version();
  doc["config"] = Json{{"h", to_string(options.law)}, {"theta", options.theta},
                       {"c", options.c},            {"n", options.n},
                       {"umax", options.umax},      {"points", options.points}};
  doc["b"] = t.b;
  doc["mu_h"] = t.mu_h;
  doc["lambda_gic"] = critical_json(t.lambda_gic);
  doc["lambda_aic"] = critical_json(t.lambda_aic);
  doc["lambda_bic"] = critical_json(t.lambda_bic);
  doc["kappa_at_edge"] = number_or_inf(t.edge.value);
  doc["kappa_at_edge_divergent"] = t.edge.divergent;
  return doc;
}

CurveTable cmd_curves(const CurvesOptions& options) {
  CurveTable t = theory_curves(options);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < t.u.size(); ++k) {
    rows.push_back({t.u[k], t.l_gic[k], t.l_aic[k], t.l_bic[k], t.kappa[k]});
  }
  write_csv(options.out, {"u", "l_gic", "l_aic", "l_bic", "kappa"}, rows);
  write_json(sidecar_path(options.out), curves_sidecar(options, t));
  return t;
}

LoocvResult loocv(const DataMatrix& data, std::optional<int> q) {
  int use_q = 0;
  if (q) {
    use_q = *q;
  } else {
    const Vector eig = sym_eigenvalues(sample_covariance(data).cov);
    // each fold has n - 1 observations, so its covariance has rank <= n - 2
    use_q = std::max(0, std::min(default_q(eig), static_cast<int>(data.rows()) - 3));
  }
  LoocvResult res;
  res.cv = loocv_curve(data, use_q);
  Eigen::Index best = 0;
  for (Eigen::Index r = 1; r < res.cv.size(); ++r) {
    if (res.cv[r] > res.cv[best]) best = r;
  }
  res.argmax = static_cast<int>(best);
  return res;
}

LoocvResult cmd_loocv(const LoocvOptions& options) {
  const DataMatrix data = read_data_matrix(options.input);
  LoocvResult res = loocv(data, options.q);
  std::vector<std::vector<double>> rows;
  for (Eigen::Index r = 0; r < res.cv.size(); ++r) {
    rows.push_back({static_cast<double>(r), res.cv[r]});
  }
  write_csv(options.out, {"r", "cv"}, rows);
  return res;
}

}  // namespace rankselect::cli
