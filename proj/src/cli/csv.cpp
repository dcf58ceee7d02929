#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rankselect/cli.hpp"
#include "rankselect/error.hpp"

namespace rankselect::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(unquote(cell));
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, std::size_t column,
                       const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                   what);
}

}  // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool first = true;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    const auto cells = split_cells(line);
    if (first) {
      first = false;
      width = cells.size();
      bool numeric = true;
      for (auto cell : cells) numeric = numeric && parse_number(cell).has_value();
      if (!numeric) {
        for (auto cell : cells) table.header.emplace_back(unquote(cell));
        continue;
      }
    }
    if (cells.size() != width) {
      fail(source, line_no, std::min(cells.size(), width) + 1,
           "expected " + std::to_string(width) + " columns, found " +
               std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      const auto value = parse_number(cells[j]);
      if (!value) fail(source, line_no, j + 1, "cannot parse '" + std::string(cells[j]) + "' as a number");
      if (!std::isfinite(*value)) fail(source, line_no, j + 1, "non-finite value '" + std::string(cells[j]) + "'");
      row[j] = *value;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(source + ": no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

DataMatrix read_data_matrix(const std::filesystem::path& path) {
  CsvTable t = read_csv(path);
  if (t.values.rows() < 2 || t.values.cols() < 2) {
    throw InputError(path.string() + ": need at least 2 rows and 2 columns, found " +
                     std::to_string(t.values.rows()) + "x" + std::to_string(t.values.cols()));
  }
  return DataMatrix(std::move(t.values));
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, row[j]);
      if (j) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".json");
  if (p == csv_path) p += ".json";
  return p;
}

}  // namespace rankselect::cli
