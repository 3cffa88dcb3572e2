#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "robustcov/errors.hpp"
#include "robustcov/matrix_io.hpp"
#include "robustcov/rng.hpp"

using namespace robustcov;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("robustcov_io_") + name);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

}  // namespace

TEST_SUITE("matrix_io") {

TEST_CASE("full-precision formatting round-trips doubles") {
  for (double x : {1.0 / 3.0, 3.141592653589793, -0.0, 1e300, 1e-300,
                   123456789.123456789, -2.2250738585072014e-308}) {
    std::string s = format_g17(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("csv line splitting trims fields") {
  auto fields = split_csv_line("a, b ,c\r");
  REQUIRE(fields.size() == 3);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "b");
  CHECK(fields[2] == "c");
  auto trailing = split_csv_line("1,2,");
  REQUIRE(trailing.size() == 3);
  CHECK(trailing[2] == "");
}

TEST_CASE("matrix round-trip is bit exact") {
  Rng rng = make_rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(7, 4);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = std::exp(8.0 * normal(rng));
  m(0, 0) = 1.0 / 3.0;
  m(1, 2) = -1e-12;

  fs::path path = temp_file("roundtrip.csv");
  write_matrix_csv(path.string(), m);
  NamedMatrix back = read_matrix_csv(path.string());
  REQUIRE(back.values.rows() == m.rows());
  REQUIRE(back.values.cols() == m.cols());
  CHECK((back.values - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.col_names == std::vector<std::string>{"c0", "c1", "c2", "c3"});
  fs::remove(path);
}

TEST_CASE("custom column names survive the round trip") {
  Matrix m(1, 2);
  m << 1.5, 2.5;
  fs::path path = temp_file("names.csv");
  write_matrix_csv(path.string(), m, {"alpha", "beta"});
  NamedMatrix back = read_matrix_csv(path.string());
  CHECK(back.col_names == std::vector<std::string>{"alpha", "beta"});
  CHECK(back.values(0, 1) == 2.5);
  fs::remove(path);
  Matrix bad(1, 2);
  CHECK_THROWS_AS(write_matrix_csv(path.string(), bad, {"only_one"}),
                  InvalidInputError);
}

TEST_CASE("reader rejects malformed tables") {
  fs::path path = temp_file("bad.csv");

  CHECK_THROWS_AS(read_matrix_csv((path.parent_path() / "nope.csv").string()),
                  IngestionError);

  write_text(path, "");
  CHECK_THROWS_AS(read_matrix_csv(path.string()), IngestionError);

  write_text(path, "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(path.string()), IngestionError);

  write_text(path, "a,b\n1,oops\n");
  CHECK_THROWS_AS(read_matrix_csv(path.string()), IngestionError);

  write_text(path, "a,b\n1,2e\n");
  CHECK_THROWS_AS(read_matrix_csv(path.string()), IngestionError);

  fs::remove(path);
}

}  // TEST_SUITE
