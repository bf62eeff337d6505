#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaybf/channel.hpp"
#include "relaybf/report.hpp"

namespace relaybf::experiment {

enum class Scheme { af, svd, both };
enum class Axis { sinr_target, distance_ratio, users, power_cap, hops };

Axis axis_from_string(const std::string& name);
std::string to_string(Axis axis);

struct ExperimentSpec {
  Scheme scheme = Scheme::both;
  Axis axis = Axis::sinr_target;
  std::vector<double> axis_values;  // nonempty, sorted
  int trials = 200;
  channel::Scenario base;
  std::uint64_t seed = 1;
  bool pairing = false;
  int threads = 1;
};

// One (axis value, trial, scheme) outcome.  Feasibility and minimization
// iteration counts are kept separately so the average-iteration metric can
// weight them by outcome.
struct TrialRecord {
  double axis_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string scheme;
  SolveStatus status = SolveStatus::infeasible;
  double t = 0.0;
  double balanced_level = 0.0;
  double p_b = 0.0;
  double p_r = 0.0;
  double sum_power = 0.0;
  int feas_outer = 0;
  int feas_inner = 0;
  int min_outer = 0;
  int min_inner = 0;
  Eigen::VectorXd achieved_sinr;

  int outer_iters() const { return feas_outer + min_outer; }
  int inner_iters() const { return feas_inner + min_inner; }
};

/// Runs feasibility then (when feasible) minimization for every requested
/// scheme on the same channel draw, for each axis value x trial.
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec);

/// Average iteration count weighted by the feasible fraction: feasible
/// trials contribute their feasibility-test plus minimization outer
/// iterations, infeasible trials the iterations until the test converged.
double avg_iterations(const std::vector<TrialRecord>& records);

std::string to_csv(const std::vector<TrialRecord>& records);
void emit_csv(const std::vector<TrialRecord>& records, const std::string& path);

/// Scenario with one sweep-axis value applied.
channel::Scenario apply_axis(const channel::Scenario& base, Axis axis, double value);

}  // namespace relaybf::experiment
