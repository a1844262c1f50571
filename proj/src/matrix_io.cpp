#include "pseudoknockoff/matrix_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pkf {
namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument(path + ": " + msg);
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Pulls the value after `key` out of the python-dict header literal.
std::string dict_value(const std::string& header, const std::string& key,
                       const std::string& path) {
  const size_t at = header.find("'" + key + "'");
  if (at == std::string::npos) fail(path, "npy header is missing '" + key + "'");
  size_t colon = header.find(':', at);
  if (colon == std::string::npos) fail(path, "malformed npy header");
  size_t start = header.find_first_not_of(" \t", colon + 1);
  if (start == std::string::npos) fail(path, "malformed npy header");
  size_t end;
  if (header[start] == '\'') {
    end = header.find('\'', start + 1);
    if (end == std::string::npos) fail(path, "malformed npy header");
    return header.substr(start + 1, end - start - 1);
  }
  if (header[start] == '(') {
    end = header.find(')', start);
    if (end == std::string::npos) fail(path, "malformed npy header");
    return header.substr(start, end - start + 1);
  }
  end = header.find_first_of(",}", start);
  if (end == std::string::npos) fail(path, "malformed npy header");
  std::string v = header.substr(start, end - start);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
  return v;
}

Eigen::MatrixXd parse_npy(const std::string& bytes, const std::string& path) {
  if (bytes.size() < 10) fail(path, "truncated npy file");
  if (bytes[6] != 1) fail(path, "only npy format version 1.0 is supported");
  std::uint16_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 8, 2);  // little-endian hosts only
  const size_t data_at = 10 + size_t(header_len);
  if (bytes.size() < data_at) fail(path, "truncated npy header");
  const std::string header = bytes.substr(10, header_len);

  const std::string descr = dict_value(header, "descr", path);
  if (descr != "<f8") {
    fail(path, "unsupported dtype '" + descr + "' (need little-endian float64)");
  }
  const std::string order = dict_value(header, "fortran_order", path);
  if (order != "False") {
    fail(path, "fortran_order must be False (row-major data)");
  }
  std::string shape = dict_value(header, "shape", path);
  // "(n,)" or "(n, p)"
  if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')') {
    fail(path, "malformed shape tuple");
  }
  shape = shape.substr(1, shape.size() - 2);
  std::vector<std::int64_t> dims;
  std::istringstream in(shape);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(),
                             [](char c) { return c == ' ' || c == '\t'; }),
              tok.end());
    if (tok.empty()) continue;  // trailing comma of a 1-tuple
    try {
      dims.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      fail(path, "malformed shape tuple");
    }
  }
  if (dims.empty() || dims.size() > 2) {
    fail(path, "need a 1-D or 2-D array, got " + std::to_string(dims.size()) +
                   " dimensions");
  }
  const std::int64_t rows = dims[0];
  const std::int64_t cols = dims.size() == 2 ? dims[1] : 1;
  if (rows < 0 || cols < 0) fail(path, "negative dimension");
  const size_t need = size_t(rows) * size_t(cols) * 8;
  if (bytes.size() - data_at < need) fail(path, "truncated npy data");

  Eigen::MatrixXd m(rows, cols);
  const char* src = bytes.data() + data_at;
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      double v;
      std::memcpy(&v, src + (size_t(r) * size_t(cols) + size_t(c)) * 8, 8);
      m(r, c) = v;
    }
  }
  return m;
}

Eigen::MatrixXd parse_csv(const std::string& text, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::replace(raw.begin(), raw.end(), ',', ' ');
    std::istringstream cells(raw);
    std::vector<double> row;
    std::string tok;
    while (cells >> tok) {
      // strtod instead of stod: subnormals parse as values, not ERANGE throws
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || tok.empty()) {
        fail(path, "line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(path, "line " + std::to_string(lineno) + ": expected " +
                     std::to_string(rows.front().size()) + " columns, got " +
                     std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path, "no numeric data");
  Eigen::MatrixXd m(std::int64_t(rows.size()), std::int64_t(rows.front().size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows.front().size(); ++c) {
      m(std::int64_t(r), std::int64_t(c)) = rows[r][c];
    }
  }
  return m;
}

void write_npy(const double* data, std::int64_t rows, std::int64_t cols,
               bool vector_shape, const std::string& path) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  header += std::to_string(rows);
  header += vector_shape ? ",)" : (", " + std::to_string(cols) + ")");
  header += ", }";
  // pad with spaces so the data offset is 64-byte aligned, newline last
  size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header += '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(kMagic, 6);
  out.put('\x01');
  out.put('\x00');
  const std::uint16_t len = std::uint16_t(header.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(header.data(), std::streamsize(header.size()));
  // row-major stream; Eigen stores column-major, so walk explicitly
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const double v = data[c * rows + r];
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

}  // namespace

Eigen::MatrixXd read_matrix(const std::string& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() >= 6 && std::memcmp(bytes.data(), kMagic, 6) == 0) {
    return parse_npy(bytes, path);
  }
  return parse_csv(bytes, path);
}

Eigen::VectorXd read_vector(const std::string& path) {
  Eigen::MatrixXd m = read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  fail(path, "expected a vector, got " + std::to_string(m.rows()) + "x" +
                 std::to_string(m.cols()));
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  char buf[40];
  for (std::int64_t r = 0; r < m.rows(); ++r) {
    for (std::int64_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_matrix_npy(const Eigen::MatrixXd& m, const std::string& path) {
  write_npy(m.data(), m.rows(), m.cols(), false, path);
}

void write_vector_npy(const Eigen::VectorXd& v, const std::string& path) {
  write_npy(v.data(), v.size(), 1, true, path);
}

}  // namespace pkf
