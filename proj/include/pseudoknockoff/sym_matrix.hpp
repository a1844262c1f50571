#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace pkf {

/// Symmetric matrix with packed lower-triangular storage.
///
/// Symmetry is enforced by construction: entry (i,j) and (j,i) share one
/// storage slot, so sym(i,j) == sym(j,i) holds exactly, never "up to
/// rounding".  Gram matrices, covariance models, and variance proxies are
/// kept in this form; dense Eigen views are materialized on demand for
/// factorizations.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(int n) : n_(n), packed_(size_t(n) * (n + 1) / 2, 0.0) {
    if (n < 0) throw std::invalid_argument("SymMatrix: negative order");
  }

  static SymMatrix identity(int n) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
  }

  /// Packs (a + a^T)/2.  Intended for dense results that are symmetric in
  /// exact arithmetic; averaging removes last-bit rounding asymmetry.
  static SymMatrix from_dense(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols())
      throw std::invalid_argument("SymMatrix::from_dense: matrix not square");
    SymMatrix s(int(a.rows()));
    for (int i = 0; i < s.n_; ++i)
      for (int j = 0; j <= i; ++j) s.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    return s;
  }

  /// Gram matrix x^T x, computed entry-wise on the lower triangle.
  static SymMatrix gram(const Eigen::MatrixXd& x) {
    SymMatrix s(int(x.cols()));
    for (int i = 0; i < s.n_; ++i)
      for (int j = 0; j <= i; ++j) s.set(i, j, x.col(i).dot(x.col(j)));
    return s;
  }

  int order() const { return n_; }

  double operator()(int i, int j) const { return packed_[index(i, j)]; }

  void set(int i, int j, double v) { packed_[index(i, j)] = v; }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd a(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = (*this)(i, j);
    return a;
  }

  /// Principal submatrix on the given (0-based) index set.
  SymMatrix submatrix(const std::vector<int>& idx) const {
    SymMatrix s(int(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = 0; j <= i; ++j)
        s.set(int(i), int(j), (*this)(idx[i], idx[j]));
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : packed_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  bool all_finite() const {
    for (double v : packed_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  size_t index(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
      throw std::out_of_range("SymMatrix: index out of range");
    if (i < j) std::swap(i, j);
    return size_t(i) * (i + 1) / 2 + j;
  }

  int n_ = 0;
  std::vector<double> packed_;
};

}  // namespace pkf
