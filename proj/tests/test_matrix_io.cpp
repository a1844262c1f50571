#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pseudoknockoff/matrix_io.hpp"

using namespace pkf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pkf_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  REQUIRE(bool(out));
}

}  // namespace

TEST_CASE("npy writer emits the documented v1.0 layout") {
  TempDir tmp;
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const std::string path = tmp.file("m.npy");
  write_matrix_npy(m, path);
  const std::string bytes = slurp(path);

  REQUIRE(bytes.size() >= 10);
  CHECK(std::memcmp(bytes.data(), "\x93NUMPY", 6) == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[7] == 0);
  std::uint16_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 2);
  CHECK((10 + len) % 64 == 0);  // data offset is 64-byte aligned
  const std::string header = bytes.substr(10, len);
  CHECK(header.find("'descr': '<f8'") != std::string::npos);
  CHECK(header.find("'fortran_order': False") != std::string::npos);
  CHECK(header.find("'shape': (2, 3)") != std::string::npos);
  CHECK(header.back() == '\n');

  // payload is row-major little-endian f64
  REQUIRE(bytes.size() == size_t(10 + len) + 6 * 8);
  double first, last;
  std::memcpy(&first, bytes.data() + 10 + len, 8);
  std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
  CHECK(first == 1.0);
  CHECK(last == 6.0);

  const Eigen::MatrixXd back = read_matrix(path);
  CHECK(back == m);
}

TEST_CASE("npy vector round trip and 1-D shape") {
  TempDir tmp;
  Eigen::VectorXd v(4);
  v << -1.5, 0.0, 2.25, 1e-300;
  const std::string path = tmp.file("v.npy");
  write_vector_npy(v, path);
  const std::string bytes = slurp(path);
  CHECK(bytes.find("'shape': (4,)") != std::string::npos);
  CHECK(read_vector(path) == v);
  const Eigen::MatrixXd as_matrix = read_matrix(path);
  CHECK(as_matrix.rows() == 4);
  CHECK(as_matrix.cols() == 1);
}

TEST_CASE("npy reader rejects what it cannot faithfully load") {
  TempDir tmp;
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  write_matrix_npy(m, tmp.file("ok.npy"));
  const std::string good = slurp(tmp.file("ok.npy"));

  auto mutated = [&](const std::string& from, const std::string& to) {
    std::string bad = good;
    const size_t at = bad.find(from);
    REQUIRE(at != std::string::npos);
    bad.replace(at, from.size(), to);
    return bad;
  };

  spit(tmp.file("f4.npy"), mutated("<f8", "<f4"));
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("f4.npy")),
                       doctest::Contains("dtype"), std::invalid_argument);

  spit(tmp.file("fortran.npy"), mutated("False", "True "));
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("fortran.npy")),
                       doctest::Contains("fortran_order"),
                       std::invalid_argument);

  spit(tmp.file("v2.npy"), [&] {
    std::string bad = good;
    bad[6] = 2;
    return bad;
  }());
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("v2.npy")),
                       doctest::Contains("version"), std::invalid_argument);

  spit(tmp.file("short.npy"), good.substr(0, good.size() - 8));
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("short.npy")),
                       doctest::Contains("truncated"), std::invalid_argument);

  spit(tmp.file("3d.npy"), mutated("(2, 2)", "(2,2,1)"));
  CHECK_THROWS_AS(read_matrix(tmp.file("3d.npy")), std::invalid_argument);
}

TEST_CASE("csv parsing: separators, comments, errors with line numbers") {
  TempDir tmp;
  spit(tmp.file("mixed.csv"),
       "# header comment\n"
       "1, 2.5, -3\n"
       "\n"
       "4 5e-1 6  # trailing note\n");
  const Eigen::MatrixXd m = read_matrix(tmp.file("mixed.csv"));
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 1) == 2.5);
  CHECK(m(1, 1) == 0.5);

  spit(tmp.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("ragged.csv")),
                       doctest::Contains("line 2"), std::invalid_argument);

  spit(tmp.file("alpha.csv"), "1,2\n3,four\n");
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("alpha.csv")),
                       doctest::Contains("line 2"), std::invalid_argument);

  spit(tmp.file("empty.csv"), "# nothing\n\n");
  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("empty.csv")),
                       doctest::Contains("no numeric data"),
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(read_matrix(tmp.file("missing.csv")),
                       doctest::Contains("cannot open"), std::invalid_argument);
}

TEST_CASE("csv writer round trips doubles exactly") {
  TempDir tmp;
  Eigen::MatrixXd m(2, 2);
  m << 1.0 / 3.0, -0.0, 6.02214076e23, 5e-324;
  write_matrix_csv(m, tmp.file("rt.csv"));
  const Eigen::MatrixXd back = read_matrix(tmp.file("rt.csv"));
  REQUIRE(back.rows() == 2);
  CHECK(back(0, 0) == m(0, 0));
  CHECK(back(1, 0) == m(1, 0));
  CHECK(back(1, 1) == m(1, 1));
}

TEST_CASE("read_vector accepts rows, columns, and nothing else") {
  TempDir tmp;
  spit(tmp.file("col.csv"), "1\n2\n3\n");
  CHECK(read_vector(tmp.file("col.csv")).size() == 3);
  spit(tmp.file("row.csv"), "1,2,3\n");
  Eigen::VectorXd v = read_vector(tmp.file("row.csv"));
  REQUIRE(v.size() == 3);
  CHECK(v(2) == 3.0);
  spit(tmp.file("sq.csv"), "1,2\n3,4\n");
  CHECK_THROWS_WITH_AS(read_vector(tmp.file("sq.csv")),
                       doctest::Contains("expected a vector"),
                       std::invalid_argument);
}
