#pragma once

// Library side of the `rankselect` command-line tool. Each command is a plain
// function taking an options struct, so tests and the Python module can drive
// exactly what the executable runs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rankselect/criteria.hpp"
#include "rankselect/simlab.hpp"
#include "rankselect/spectra.hpp"

namespace rankselect::cli {

using Json = nlohmann::ordered_json;

std::string_view tool_version();

// ---- CSV ------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had none
  Matrix values;
};

/// Rows are observations, columns variables. The first non-blank row is a
/// header when any of its cells fails to parse as a number. Blank lines are
/// skipped. Errors name `source`, the 1-based line and column.
CsvTable parse_csv(std::string_view text, const std::string& source = "<input>");
CsvTable read_csv(const std::filesystem::path& path);
DataMatrix read_data_matrix(const std::filesystem::path& path);

/// Numbers are written in shortest round-trip form.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// "<stem>.json" next to a CSV output.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Finite numbers as numbers, +inf as the string "inf" (and -inf as "-inf").
Json number_or_inf(double value);
Json to_json(const Vector& v);

void write_json(const std::filesystem::path& path, const Json& doc);

// ---- select -----------------------------------------------------------------

struct CriterionResult {
  Criterion criterion = Criterion::kGic;
  Vector penalty;
  Vector score;
  int selected = 0;
};

struct SelectionReport {
  int n = 0;
  int p = 0;  // dimension the criteria ran on (after any prefilter)
  int input_p = 0;
  int q = 0;
  Vector eigenvalues;
  std::vector<CriterionResult> criteria;
  bool standardized = false;
  std::optional<double> prefilter_fraction;
  std::optional<int> retained_dimension;
  std::optional<std::uint64_t> seed;  // no stochastic step in select today
};

Json to_json(const SelectionReport& report);

struct SelectOptions {
  std::filesystem::path input;
  std::vector<Criterion> criteria{Criterion::kGic, Criterion::kAic, Criterion::kBic};
  std::optional<int> q;
  bool standardize = false;
  std::optional<double> prefilter_fraction;
  std::optional<std::filesystem::path> output;
};

/// Parses "gic,aic" style lists.
std::vector<Criterion> parse_criteria_list(std::string_view list);

/// Prefilter (if requested), then standardization, then the criteria.
SelectionReport select_rank(const DataMatrix& data, const SelectOptions& options);
SelectionReport cmd_select(const SelectOptions& options);

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  ExperimentConfig config;
  std::filesystem::path out;
};

Json simulation_sidecar(const SelectionRateTable& table);
SelectionRateTable cmd_simulate(const SimulateOptions& options);

// ---- fa ---------------------------------------------------------------------

struct FaOptions {
  FAConfig config;
  std::vector<double> s_values{10.0};
  std::filesystem::path out;
};

/// "start:stop:step", inclusive of stop (within half a step).
std::vector<double> parse_grid(std::string_view spec);
std::vector<FaResult> cmd_fa(const FaOptions& options);

// ---- curves -----------------------------------------------------------------

struct CurvesOptions {
  LawKind law = LawKind::kH1;
  double theta = 0.8;
  double c = 0.5;
  int n = 500;
  double umax = 12.0;
  int points = 200;
  std::filesystem::path out;
};

struct CurveTable {
  double b = 0.0;
  double mu_h = 0.0;
  CriticalLambda lambda_gic, lambda_aic, lambda_bic;
  EdgeKappa edge;
  std::vector<double> u, l_gic, l_aic, l_bic, kappa;
};

CurveTable theory_curves(const CurvesOptions& options);
Json curves_sidecar(const CurvesOptions& options, const CurveTable& table);
CurveTable cmd_curves(const CurvesOptions& options);

// ---- loocv ------------------------------------------------------------------

struct LoocvOptions {
  std::filesystem::path input;
  std::optional<int> q;
  std::filesystem::path out;
};

struct LoocvResult {
  Vector cv;
  int argmax = 0;
};

LoocvResult loocv(const DataMatrix& data, std::optional<int> q);
LoocvResult cmd_loocv(const LoocvOptions& options);

}  // namespace rankselect::cli
