#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pkf {

struct SelectionOutcome {
  double t = 0.0;             // threshold; +infinity when nothing passes
  std::vector<int> selected;  // {j : w_j >= t}, ascending
  double fdp = 0.0;           // selected nulls / max(#selected, 1)
  double power = 0.0;         // selected signals / max(#signals, 1)
  double ratio_stat = 0.0;    // #{null: w >= t} / (#{null: w <= -t} + 1)
  double q = 0.0;
};

/// T = min{ t in {|w_j| : w_j != 0} :
///          (1 + #{j : w_j <= -t}) / max(#{j : w_j >= t}, 1) <= q },
/// +infinity if no candidate qualifies.  The criterion is piecewise
/// constant with breakpoints exactly at the candidate magnitudes, so the
/// grid search is exhaustive.
double knockoff_plus_threshold(const Eigen::VectorXd& w, double q);

/// Threshold w at level q and score the selection against the true signal.
SelectionOutcome evaluate(const Eigen::VectorXd& w,
                          const Eigen::VectorXd& beta, double q);

}  // namespace pkf
