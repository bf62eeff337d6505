#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace relaybf {

enum class SolveStatus { feasible, infeasible, max_iter };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iter: return "max-iter";
  }
  return "?";
}

// Outcome of a feasibility or sum-power-minimization run, independent of
// the relaying scheme that produced it.  Every feasible result is re-checked
// against the ground-truth verify_sinr oracle before being reported.
struct SolveReport {
  SolveStatus status = SolveStatus::infeasible;
  double t = 0.0;               // feasibility objective, targets met iff <= 1
  double balanced_level = 0.0;  // C^U from the last uplink balancing step
  double sum_power = 0.0;
  double p_b = 0.0;
  double p_r = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  Eigen::VectorXd achieved_sinr;
  std::vector<double> t_history;  // accepted outer-iteration objectives
};

}  // namespace relaybf
