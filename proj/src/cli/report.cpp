#include <cmath>
#include <fstream>

#include "rankselect/cli.hpp"
#include "rankselect/error.hpp"

#ifndef RANKSELECT_VERSION
#define RANKSELECT_VERSION "0.0.0"
#endif

namespace rankselect::cli {

std::string_view tool_version() { return RANKSELECT_VERSION; }

Json number_or_inf(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) throw NumericalError("NaN in report");
  return value;
}

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(number_or_inf(v[i]));
  return arr;
}

Json to_json(const SelectionReport& report) {
  Json doc;
  doc["tool"] = "rankselect";
  doc["version"] = tool_version();
  doc["n"] = report.n;
  doc["p"] = report.p;
  doc["q"] = report.q;
  doc["eigenvalues"] = to_json(report.eigenvalues);

  Json criteria = Json::object();
  for (const auto& c : report.criteria) {
    Json entry;
    entry["penalty"] = to_json(c.penalty);
    entry["score"] = to_json(c.score);
    entry["selected"] = c.selected;
    criteria[std::string(to_string(c.criterion))] = std::move(entry);
  }
  doc["criteria"] = std::move(criteria);

  Json pipeline;
  pipeline["input_p"] = report.input_p;
  pipeline["standardized"] = report.standardized;
  pipeline["prefilter_fraction"] =
      report.prefilter_fraction ? Json(*report.prefilter_fraction) : Json(nullptr);
  pipeline["retained_dimension"] =
      report.retained_dimension ? Json(*report.retained_dimension) : Json(nullptr);
  doc["pipeline"] = std::move(pipeline);
  doc["seed"] = report.seed ? Json(*report.seed) : Json(nullptr);
  return doc;
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace rankselect::cli
