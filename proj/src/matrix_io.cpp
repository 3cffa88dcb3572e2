#include "robustcov/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "robustcov/errors.hpp"

namespace robustcov {

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& col_names) {
  if (!col_names.empty() &&
      static_cast<Index>(col_names.size()) != m.cols())
    throw InvalidInputError("write_matrix_csv: column name count mismatch");
  std::ofstream f(path);
  if (!f) throw IngestionError("write_matrix_csv: cannot open " + path);
  for (Index j = 0; j < m.cols(); ++j) {
    if (j > 0) f << ',';
    if (col_names.empty())
      f << 'c' << j;
    else
      f << col_names[static_cast<std::size_t>(j)];
  }
  f << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) f << ',';
      f << format_g17(m(i, j));
    }
    f << '\n';
  }
  if (!f) throw IngestionError("write_matrix_csv: write failed for " + path);
}

NamedMatrix read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("read_matrix_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    throw IngestionError("read_matrix_csv: empty file " + path);
  NamedMatrix out;
  out.col_names = split_csv_line(line);
  if (out.col_names.empty())
    throw IngestionError("read_matrix_csv: empty header in " + path);
  const std::size_t d = out.col_names.size();

  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != d)
      throw IngestionError("read_matrix_csv: row " + std::to_string(rows + 2) +
                           " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(d));
    for (const auto& s : fields) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &pos);
      } catch (const std::exception&) {
        throw IngestionError("read_matrix_csv: non-numeric field '" + s + "'");
      }
      if (pos != s.size())
        throw IngestionError("read_matrix_csv: non-numeric field '" + s + "'");
      data.push_back(v);
    }
    ++rows;
  }
  out.values.resize(static_cast<Index>(rows), static_cast<Index>(d));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) =
          data[i * d + j];
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw IngestionError("write_text_file: cannot open " + path);
  f << content;
  if (!f) throw IngestionError("write_text_file: write failed for " + path);
}

}  // namespace robustcov
