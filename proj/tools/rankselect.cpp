#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rankselect/cli.hpp"
#include "rankselect/simlab.hpp"

namespace cli = rankselect::cli;
using rankselect::Method;

int main(int argc, char** argv) {
  CLI::App app{"PCA rank selection with GIC, AIC and BIC"};
  app.set_version_flag("--version", std::string(cli::tool_version()));
  // --h names the tail law, so help is long-form only
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  // select
  cli::SelectOptions sel;
  std::string criteria = "gic,aic,bic";
  std::string sel_input, sel_output;
  int sel_q = -1;
  double prefilter = -1.0;
  auto* select = app.add_subcommand("select", "choose the rank of a data matrix");
  select->add_option("--input", sel_input, "CSV, rows = observations")->required();
  select->add_option("--criteria", criteria, "comma-separated subset of gic,aic,bic");
  select->add_option("--q", sel_q, "largest rank considered (default min(20, p-1))");
  select->add_flag("--standardize", sel.standardize, "scale columns to unit variance");
  select->add_option("--pca-prefilter", prefilter, "keep leading PCs explaining this fraction")
      ->check(CLI::Range(0.0, 1.0));
  select->add_option("--output", sel_output, "JSON report path");

  // simulate
  cli::SimulateOptions sim;
  std::string sim_h = "h1", sim_spikes = "l1", sim_out;
  auto* simulate = app.add_subcommand("simulate", "selection rates on synthetic spiked data");
  simulate->add_option("--h", sim_h, "tail law h1, h2 or h3");
  simulate->add_option("--theta", sim.config.theta);
  simulate->add_option("--c", sim.config.c, "p / n");
  simulate->add_option("--n", sim.config.n);
  simulate->add_option("--r0", sim.config.r0);
  simulate->add_option("--spikes", sim_spikes, "l1 or l2");
  simulate->add_option("--replicates", sim.config.replicates);
  simulate->add_option("--q", sim.config.q);
  simulate->add_option("--seed", sim.config.seed);
  simulate->add_option("--out", sim_out, "CSV path; a .json sidecar is written next to it")
      ->required();

  // fa
  cli::FaOptions fa;
  std::string fa_setting = "fa1", fa_grid, fa_out;
  double fa_s = 10.0;
  auto* fa_cmd = app.add_subcommand("fa", "number of factors selected by GIC");
  fa_cmd->add_option("--setting", fa_setting, "fa1, fa2, fa3 or fa4");
  auto* s_opt = fa_cmd->add_option("--s", fa_s, "signal size");
  fa_cmd->add_option("--s-grid", fa_grid, "start:stop:step")->excludes(s_opt);
  fa_cmd->add_option("--replicates", fa.config.replicates);
  fa_cmd->add_option("--seed", fa.config.seed);
  fa_cmd->add_option("--out", fa_out)->required();

  // curves
  cli::CurvesOptions cur;
  std::string cur_h = "h1", cur_out;
  auto* curves = app.add_subcommand("curves", "L-curves and kappa beyond the bulk edge");
  curves->add_option("--h", cur_h);
  curves->add_option("--theta", cur.theta);
  curves->add_option("--c", cur.c);
  curves->add_option("--n", cur.n);
  curves->add_option("--umax", cur.umax);
  curves->add_option("--points", cur.points);
  curves->add_option("--out", cur_out)->required();

  // loocv
  cli::LoocvOptions lo;
  std::string lo_input, lo_out;
  int lo_q = -1;
  auto* loocv = app.add_subcommand("loocv", "leave-one-out log-likelihood by rank");
  loocv->add_option("--input", lo_input)->required();
  loocv->add_option("--q", lo_q);
  loocv->add_option("--out", lo_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::cerr << "error: " << e.what() << "\n";
      return e.get_exit_code();
    }
    return app.exit(e);
  }

  try {
    if (*select) {
      sel.input = sel_input;
      sel.criteria = cli::parse_criteria_list(criteria);
      if (sel_q >= 0) sel.q = sel_q;
      if (prefilter >= 0.0) sel.prefilter_fraction = prefilter;
      if (!sel_output.empty()) sel.output = sel_output;
      const auto report = cli::cmd_select(sel);
      for (const auto& c : report.criteria) {
        std::cout << rankselect::to_string(c.criterion) << ": " << c.selected << "\n";
      }
      if (!sel.output) std::cout << cli::to_json(report).dump(2) << "\n";
    } else if (*simulate) {
      sim.config.law = rankselect::parse_law_kind(sim_h);
      sim.config.spike_rule = rankselect::parse_spike_rule(sim_spikes);
      sim.out = sim_out;
      const auto table = cli::cmd_simulate(sim);
      for (Method m : {Method::kGic, Method::kAic, Method::kBic}) {
        std::cout << rankselect::to_string(m) << " rate at r0: "
                  << table.rates(m)[sim.config.r0] << "\n";
      }
    } else if (*fa_cmd) {
      fa.config.setting = rankselect::parse_fa_setting(fa_setting);
      fa.s_values = fa_grid.empty() ? std::vector<double>{fa_s} : cli::parse_grid(fa_grid);
      fa.out = fa_out;
      for (const auto& r : cli::cmd_fa(fa)) {
        std::cout << "s=" << r.s << " mean=" << r.mean << " sd=" << r.sd << "\n";
      }
    } else if (*curves) {
      cur.law = rankselect::parse_law_kind(cur_h);
      cur.out = cur_out;
      const auto t = cli::cmd_curves(cur);
      std::cout << "b=" << t.b << " lambda_gic=" << t.lambda_gic.lambda
                << " lambda_aic=" << t.lambda_aic.lambda << " lambda_bic=" << t.lambda_bic.lambda
                << "\n";
    } else if (*loocv) {
      lo.input = lo_input;
      if (lo_q >= 0) lo.q = lo_q;
      lo.out = lo_out;
      const auto res = cli::cmd_loocv(lo);
      std::cout << "argmax r = " << res.argmax << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
