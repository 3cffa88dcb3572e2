#pragma once

#include <string>
#include <vector>

#include "robustcov/types.hpp"

namespace robustcov {

/// Shortest representation that round-trips a double (17 significant digits).
std::string format_g17(double x);

/// Splits one CSV record on commas, trimming surrounding whitespace and a
/// trailing carriage return. No quoting support: the file contracts here are
/// plain numeric tables with simple identifiers.
std::vector<std::string> split_csv_line(const std::string& line);

struct NamedMatrix {
  std::vector<std::string> col_names;
  Matrix values;
};

/// Writes a header row (generated c0..c{d-1} when no names are given) and one
/// row per matrix row at full precision.
void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& col_names = {});

/// Reads a matrix written by write_matrix_csv (header row required, all
/// fields numeric, rectangular).
NamedMatrix read_matrix_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace robustcov
