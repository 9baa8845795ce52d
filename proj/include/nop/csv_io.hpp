#pragma once

#include "nop/types.hpp"

#include <string>
#include <vector>

namespace nop {

/// Long-format CSV table with a single header row. All cells numeric.
struct CsvTable {
  std::vector<std::string> columns;
  Mat data; // one row per record

  Index col(const std::string& name) const; // throws if absent
};

/// Values are written with 12 significant digits.
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

void write_signal_csv(const std::string& path, const SampledSignal& signal);

/// Reads header `t,y`. Non-uniform grids are passed through untouched;
/// sample_rate is the reciprocal median spacing.
SampledSignal read_signal_csv(const std::string& path);

std::string format_significant(double value, int digits = 12);

} // namespace nop
