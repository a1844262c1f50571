#include "pseudoknockoff/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pkf {

double knockoff_plus_threshold(const Eigen::VectorXd& w, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("knockoff_plus_threshold: q must be in (0,1)");
  std::vector<double> cand;
  cand.reserve(size_t(w.size()));
  for (int j = 0; j < w.size(); ++j)
    if (w(j) != 0.0) cand.push_back(std::abs(w(j)));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (double t : cand) {
    int npos = 0, nneg = 0;
    for (int j = 0; j < w.size(); ++j) {
      if (w(j) >= t) ++npos;
      if (w(j) <= -t) ++nneg;
    }
    if ((1.0 + nneg) / double(std::max(npos, 1)) <= q) return t;
  }
  return std::numeric_limits<double>::infinity();
}

SelectionOutcome evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& beta,
                          double q) {
  if (w.size() != beta.size())
    throw std::invalid_argument("evaluate: w and beta length mismatch");
  SelectionOutcome out;
  out.q = q;
  out.t = knockoff_plus_threshold(w, q);

  int n_signal = 0, sel_null = 0, sel_signal = 0, neg_null = 0, pos_null = 0;
  for (int j = 0; j < w.size(); ++j) {
    bool null_j = beta(j) == 0.0;
    if (!null_j) ++n_signal;
    if (w(j) >= out.t) {  // never true for t = +infinity
      out.selected.push_back(j);
      (null_j ? sel_null : sel_signal) += 1;
    }
    if (null_j && w(j) >= out.t) ++pos_null;
    if (null_j && w(j) <= -out.t) ++neg_null;
  }
  out.fdp = double(sel_null) / double(std::max<int>(1, int(out.selected.size())));
  out.power = double(sel_signal) / double(std::max(1, n_signal));
  out.ratio_stat = double(pos_null) / double(neg_null + 1);
  return out;
}

}  // namespace pkf
