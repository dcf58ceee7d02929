#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rankselect/cli.hpp"
#include "rankselect/criteria.hpp"
#include "rankselect/error.hpp"
#include "rankselect/rmt.hpp"
#include "rankselect/simlab.hpp"
#include "rankselect/spectra.hpp"

namespace py = pybind11;
using namespace rankselect;

namespace {

SpectralLaw law_from(const std::string& name, double theta) {
  return make_law(parse_law_kind(name), theta);
}

py::object from_json(const cli::Json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

py::dict select_report(const Matrix& x, const std::vector<std::string>& criteria, std::optional<int> q,
                bool standardize, std::optional<double> prefilter) {
  cli::SelectOptions opts;
  opts.criteria.clear();
  for (const auto& c : criteria) opts.criteria.push_back(parse_criterion(c));
  opts.q = q;
  opts.standardize = standardize;
  opts.prefilter_fraction = prefilter;
  return from_json(cli::to_json(cli::select_rank(DataMatrix(x), opts)));
}

py::dict trace(const Vector& eigenvalues, int n, int q, const std::string& criterion) {
  const auto t = criterion_trace(eigenvalues, n, q, parse_criterion(criterion));
  py::dict d;
  d["logdet"] = t.logdet;
  d["penalty"] = t.penalty;
  d["score"] = t.score;
  d["selected"] = t.selected;
  return d;
}

py::dict simulate(const std::string& h, double theta, double c, int n, int r0,
                  const std::string& spikes, int q, int replicates, std::uint64_t seed,
                  const std::vector<std::string>& methods) {
  ExperimentConfig cfg;
  cfg.law = parse_law_kind(h);
  cfg.theta = theta;
  cfg.c = c;
  cfg.n = n;
  cfg.r0 = r0;
  cfg.spike_rule = parse_spike_rule(spikes);
  cfg.q = q;
  cfg.replicates = replicates;
  cfg.seed = seed;
  cfg.methods.clear();
  for (const auto& m : methods) cfg.methods.push_back(parse_method(m));
  const auto table = run_selection_experiment(cfg);
  py::dict rates, selected;
  for (Method m : table.methods) {
    rates[py::str(std::string(to_string(m)))] = table.rates(m);
    selected[py::str(std::string(to_string(m)))] = table.selected(m);
  }
  py::dict d;
  d["rates"] = rates;
  d["selected"] = selected;
  d["spikes"] = table.ladder.spikes;
  d["lambda_crit"] = table.ladder.critical.lambda;
  return d;
}

}  // namespace

PYBIND11_MODULE(rankselect, m) {
  m.doc() = "Rank selection for spiked PCA models with GIC, AIC and BIC";
  m.attr("__version__") = std::string(cli::tool_version());

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DegenerateTailError>(m, "DegenerateTailError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("select_rank", &select_report, py::arg("data"),
        py::arg("criteria") = std::vector<std::string>{"gic", "aic", "bic"},
        py::arg("q") = py::none(), py::arg("standardize") = false,
        py::arg("prefilter") = py::none(),
        "Run the criteria on an n x p data matrix; returns the report as a dict.");
  m.def("sample_eigenvalues", [](const Matrix& x) {
    return sym_eigenvalues(sample_covariance(DataMatrix(x)).cov);
  }, py::arg("data"));
  m.def("criterion_trace", &trace, py::arg("eigenvalues"), py::arg("n"), py::arg("q"),
        py::arg("criterion") = "gic");
  m.def("gic_penalty", &gic_penalty, py::arg("eigenvalues"), py::arg("r"));
  m.def("free_param_count", &free_param_count, py::arg("p"), py::arg("r"));
  m.def("xi_term", &xi_term, py::arg("eigenvalues"), py::arg("j"), py::arg("r"));
  m.def("loocv_curve", [](const Matrix& x, int q) { return loocv_curve(DataMatrix(x), q); },
        py::arg("data"), py::arg("q"));
  m.def("parallel_analysis",
        [](const Matrix& x, int n_perm, double pct, std::uint64_t seed) {
          return parallel_analysis(DataMatrix(x), n_perm, pct, seed);
        },
        py::arg("data"), py::arg("n_perm") = 99, py::arg("percentile") = 0.95,
        py::arg("seed") = 0);

  m.def("psi", [](const std::string& h, double theta, double c, double lambda) {
    return psi(PopulationModel(law_from(h, theta), c), lambda);
  }, py::arg("law"), py::arg("theta"), py::arg("c"), py::arg("lam"));
  m.def("upper_edge", [](const std::string& h, double theta, double c) {
    return upper_edge(law_from(h, theta), c);
  }, py::arg("law"), py::arg("theta"), py::arg("c"));
  m.def("kappa", [](const std::string& h, double theta, double c, double u) {
    return kappa(PopulationModel(law_from(h, theta), c), u);
  }, py::arg("law"), py::arg("theta"), py::arg("c"), py::arg("u"));
  m.def("kappa_at_edge", [](const std::string& h, double theta, double c) {
    const auto e = kappa_at_edge(PopulationModel(law_from(h, theta), c));
    return py::make_tuple(e.value, e.divergent);
  }, py::arg("law"), py::arg("theta"), py::arg("c"));
  m.def("critical_lambda",
        [](const std::string& crit, const std::string& h, double theta, double c, int n) {
          const auto r = critical_lambda(parse_criterion(crit), law_from(h, theta), c, n);
          return py::make_tuple(r.lambda, r.at_threshold);
        },
        py::arg("criterion"), py::arg("law"), py::arg("theta"), py::arg("c"), py::arg("n"));

  m.def("simulate", &simulate, py::arg("law") = "h1", py::arg("theta") = 0.8,
        py::arg("c") = 0.5, py::arg("n") = 500, py::arg("r0") = 5, py::arg("spikes") = "l1",
        py::arg("q") = 20, py::arg("replicates") = 200, py::arg("seed") = 1,
        py::arg("methods") = std::vector<std::string>{"gic", "aic", "bic"});
}
