#pragma once

#include <Eigen/Dense>
#include <string>

namespace pkf {

/// Dense numeric file I/O for user-supplied designs and responses.
///
/// Two layouts are accepted and sniffed by magic bytes:
///  - npy version 1.0, dtype '<f8', C (row-major) order, 1-D or 2-D;
///  - otherwise CSV: one row per line, ',' and/or whitespace separated,
///    '#' starts a comment, blank lines skipped.
/// Errors carry the file name and, for CSV, the line number.
Eigen::MatrixXd read_matrix(const std::string& path);

/// A vector file: 1-D npy, or CSV with one value per row (or one row).
Eigen::VectorXd read_vector(const std::string& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
void write_matrix_npy(const Eigen::MatrixXd& m, const std::string& path);
void write_vector_npy(const Eigen::VectorXd& v, const std::string& path);

}  // namespace pkf
