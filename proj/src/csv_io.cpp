#include "nop/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nop {

Index CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return Index(i);
  throw std::invalid_argument("CsvTable: no column named '" + name + "'");
}

std::string format_significant(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
  if (Index(table.columns.size()) != table.data.cols())
    throw std::invalid_argument("write_csv: header/data column count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (Index r = 0; r < table.data.rows(); ++r) {
    for (Index c = 0; c < table.data.cols(); ++c) {
      if (c) out << ',';
      out << format_significant(table.data(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t row) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw std::runtime_error("read_csv: bad numeric cell '" + cell + "' in '" + path +
                             "' row " + std::to_string(row));
  return v;
}

} // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table;
  table.columns = split_line(line);
  if (table.columns.empty())
    throw std::runtime_error("read_csv: empty header in '" + path + "'");

  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != table.columns.size())
      throw std::runtime_error("read_csv: row " + std::to_string(rows + 2) + " of '" + path +
                               "' has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(table.columns.size()));
    for (const auto& c : cells) flat.push_back(parse_cell(c, path, rows + 2));
    ++rows;
  }
  table.data.resize(Index(rows), Index(table.columns.size()));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      table.data(Index(r), Index(c)) = flat[r * table.columns.size() + c];
  return table;
}

void write_signal_csv(const std::string& path, const SampledSignal& signal) {
  signal.validate();
  CsvTable t;
  t.columns = {"t", "y"};
  t.data.resize(signal.size(), 2);
  t.data.col(0) = signal.times;
  t.data.col(1) = signal.values;
  write_csv(path, t);
}

SampledSignal read_signal_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.columns.size() != 2 || t.columns[0] != "t" || t.columns[1] != "y")
    throw std::runtime_error("read_signal_csv: '" + path + "' must have header t,y");
  if (t.data.rows() < 2)
    throw std::runtime_error("read_signal_csv: '" + path + "' needs at least two samples");
  SampledSignal s;
  s.times = t.data.col(0);
  s.values = t.data.col(1);
  Vec dt = s.times.tail(s.size() - 1) - s.times.head(s.size() - 1);
  std::vector<double> spacing(dt.data(), dt.data() + dt.size());
  std::nth_element(spacing.begin(), spacing.begin() + spacing.size() / 2, spacing.end());
  const double median_dt = spacing[spacing.size() / 2];
  if (!(median_dt > 0.0))
    throw std::runtime_error("read_signal_csv: '" + path + "' times not increasing");
  s.sample_rate = 1.0 / median_dt;
  s.validate();
  return s;
}

} // namespace nop
