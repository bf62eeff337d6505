#include "relaybf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "relaybf/af.hpp"
#include "relaybf/errors.hpp"
#include "relaybf/svd_relay.hpp"

namespace relaybf::experiment {

namespace {

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

TrialRecord base_record(double axis_value, int trial, std::uint64_t seed,
                        std::string scheme) {
  TrialRecord rec;
  rec.axis_value = axis_value;
  rec.trial = trial;
  rec.seed = seed;
  rec.scheme = std::move(scheme);
  return rec;
}

void fill_from(TrialRecord& rec, const SolveReport& rep) {
  rec.status = rep.status;
  rec.t = rep.t;
  rec.balanced_level = rep.balanced_level;
  rec.p_b = rep.p_b;
  rec.p_r = rep.p_r;
  rec.sum_power = rep.sum_power;
  rec.achieved_sinr = rep.achieved_sinr;
}

TrialRecord run_af(const channel::Scenario& s,
                   const channel::ChannelRealization& ch, double axis_value,
                   int trial) {
  TrialRecord rec = base_record(axis_value, trial, ch.seed, "af");
  const auto feas = af::feasibility(s, ch);
  rec.feas_outer = feas.report.outer_iterations;
  rec.feas_inner = feas.report.inner_iterations;
  fill_from(rec, feas.report);
  if (feas.report.status == SolveStatus::feasible) {
    const auto min = af::minimize(s, ch, feas.design);
    rec.min_outer = min.report.outer_iterations;
    rec.min_inner = min.report.inner_iterations;
    fill_from(rec, min.report);
    rec.balanced_level = feas.report.balanced_level;
  }
  return rec;
}

TrialRecord run_svd(const channel::Scenario& s,
                    const channel::ChannelRealization& ch, double axis_value,
                    int trial, bool pairing) {
  TrialRecord rec = base_record(axis_value, trial, ch.seed,
                                pairing ? "svd_paired" : "svd");
  svd_relay::SvdOptions opts;
  opts.pairing = pairing ? svd_relay::PairingMode::heuristic
                         : svd_relay::PairingMode::off;
  try {
    const auto feas = svd_relay::feasibility(s, ch, opts);
    rec.feas_outer = feas.report.outer_iterations;
    rec.feas_inner = feas.report.inner_iterations;
    fill_from(rec, feas.report);
    if (feas.report.status == SolveStatus::feasible) {
      const auto min = svd_relay::minimize(s, ch, feas.design);
      rec.min_outer = min.report.outer_iterations;
      rec.min_inner = min.report.inner_iterations;
      fill_from(rec, min.report);
      rec.balanced_level = feas.report.balanced_level;
    }
  } catch (const UnsupportedInstanceError&) {
    rec.status = SolveStatus::infeasible;  // rank-deficient draw
    rec.t = std::numeric_limits<double>::infinity();
    rec.achieved_sinr = Eigen::VectorXd::Zero(s.k);
  }
  return rec;
}

TrialRecord run_hops(const channel::Scenario& base, int hops,
                     std::uint64_t seed, double axis_value, int trial,
                     bool pairing) {
  TrialRecord rec = base_record(axis_value, trial, seed, "svd");
  svd_relay::SvdOptions opts;
  opts.pairing = pairing ? svd_relay::PairingMode::heuristic
                         : svd_relay::PairingMode::off;
  try {
    const auto ms = channel::generate_multihop(base, hops, seed);
    const auto feas = svd_relay::multihop_solve(ms, false, opts);
    rec.feas_outer = feas.report.outer_iterations;
    rec.feas_inner = feas.report.inner_iterations;
    fill_from(rec, feas.report);
    if (feas.report.status == SolveStatus::feasible) {
      const auto min = svd_relay::multihop_solve(ms, true, opts, &feas);
      rec.min_outer = min.report.outer_iterations;
      rec.min_inner = min.report.inner_iterations;
      fill_from(rec, min.report);
      rec.balanced_level = feas.report.balanced_level;
    }
  } catch (const UnsupportedInstanceError&) {
    rec.status = SolveStatus::infeasible;
    rec.t = std::numeric_limits<double>::infinity();
    rec.achieved_sinr = Eigen::VectorXd::Zero(base.k);
  }
  return rec;
}

void run_trial(const ExperimentSpec& spec, double axis_value, int trial,
               std::vector<TrialRecord>& out) {
  const std::uint64_t seed = channel::substream_seed(spec.seed, std::uint64_t(trial));
  if (spec.axis == Axis::hops) {
    out.push_back(run_hops(spec.base, int(axis_value), seed, axis_value, trial,
                           spec.pairing));
    return;
  }
  const channel::Scenario s = apply_axis(spec.base, spec.axis, axis_value);
  const auto ch = channel::generate(s, seed);
  if (spec.scheme == Scheme::af || spec.scheme == Scheme::both) {
    out.push_back(run_af(s, ch, axis_value, trial));
  }
  if (spec.scheme == Scheme::svd || spec.scheme == Scheme::both) {
    out.push_back(run_svd(s, ch, axis_value, trial, spec.pairing));
  }
}

}  // namespace

Axis axis_from_string(const std::string& name) {
  if (name == "sinr_target") return Axis::sinr_target;
  if (name == "distance_ratio") return Axis::distance_ratio;
  if (name == "users") return Axis::users;
  if (name == "power_cap") return Axis::power_cap;
  if (name == "hops") return Axis::hops;
  throw InvalidInputError("unknown sweep axis: " + name);
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::sinr_target: return "sinr_target";
    case Axis::distance_ratio: return "distance_ratio";
    case Axis::users: return "users";
    case Axis::power_cap: return "power_cap";
    case Axis::hops: return "hops";
  }
  return "?";
}

channel::Scenario apply_axis(const channel::Scenario& base, Axis axis,
                             double value) {
  channel::Scenario s = base;
  switch (axis) {
    case Axis::sinr_target:
      s.gamma.setConstant(base.k, std::pow(10.0, value / 10.0));
      break;
    case Axis::distance_ratio:
      // value = d_bs_rs / d_rs_ms with the first hop pinned
      s.d_rs_ms.setConstant(base.k, base.d_bs_rs / value);
      break;
    case Axis::users: {
      const int k = int(value);
      if (k < 1) throw InvalidInputError("users axis: need k >= 1");
      s.k = k;
      s.m_b = s.m_r = k;  // square geometry grows with the user count
      s.gamma.setConstant(k, base.gamma(0));
      s.sigma_k_sq.setConstant(k, base.sigma_k_sq(0));
      s.d_rs_ms.setConstant(k, base.d_rs_ms(0));
      break;
    }
    case Axis::power_cap:
      s.p_b_max = value;
      s.p_r_max = value;
      break;
    case Axis::hops:
      break;  // handled by the multi-hop runner
  }
  return s;
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec) {
  if (spec.trials < 1 || spec.axis_values.empty()) {
    throw InvalidInputError("run_experiment: need trials >= 1 and axis values");
  }
  if (!std::is_sorted(spec.axis_values.begin(), spec.axis_values.end())) {
    throw InvalidInputError("run_experiment: axis values must be sorted");
  }
  std::vector<TrialRecord> records;
  const int threads = std::max(1, spec.threads);
  if (threads == 1) {
    for (double v : spec.axis_values) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        run_trial(spec, v, trial, records);
      }
    }
  } else {
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        std::vector<TrialRecord> local;
        for (double v : spec.axis_values) {
          for (int trial = w; trial < spec.trials; trial += threads) {
            run_trial(spec, v, trial, local);
          }
        }
        const std::lock_guard<std::mutex> lock(mu);
        for (auto& r : local) records.push_back(std::move(r));
      });
    }
    for (auto& th : pool) th.join();
  }
  std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    if (a.trial != b.trial) return a.trial < b.trial;
    return a.scheme < b.scheme;
  });
  return records;
}

double avg_iterations(const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    throw InvalidInputError("avg_iterations: no records");
  }
  long feasible = 0;
  double fea_iters = 0.0, power_iters = 0.0, infea_iters = 0.0;
  for (const auto& r : records) {
    if (r.status == SolveStatus::feasible) {
      ++feasible;
      fea_iters += r.feas_outer;
      power_iters += r.min_outer;
    } else {
      infea_iters += r.feas_outer;
    }
  }
  const double total = double(records.size());
  const double frac_fea = double(feasible) / total;
  const double i_test_fea = feasible > 0 ? fea_iters / double(feasible) : 0.0;
  const double i_power_conv = feasible > 0 ? power_iters / double(feasible) : 0.0;
  const double i_fea_conv =
      feasible < long(records.size()) ? infea_iters / double(records.size() - feasible) : 0.0;
  return frac_fea * (i_test_fea + i_power_conv) + (1.0 - frac_fea) * i_fea_conv;
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  int max_k = 0;
  for (const auto& r : records) {
    max_k = std::max(max_k, int(r.achieved_sinr.size()));
  }
  std::string out = "axis,trial,seed,scheme,status,t,balanced_level,p_b,p_r,"
                    "sum_power,outer_iters,inner_iters";
  for (int i = 1; i <= max_k; ++i) {
    out += ",sinr_" + std::to_string(i);
  }
  out += "\n";
  for (const auto& r : records) {
    out += format_g9(r.axis_value);
    out += "," + std::to_string(r.trial);
    out += "," + std::to_string(r.seed);
    out += "," + r.scheme;
    out += "," + relaybf::to_string(r.status);
    out += "," + format_g9(r.t);
    out += "," + format_g9(r.balanced_level);
    out += "," + format_g9(r.p_b);
    out += "," + format_g9(r.p_r);
    out += "," + format_g9(r.sum_power);
    out += "," + std::to_string(r.outer_iters());
    out += "," + std::to_string(r.inner_iters());
    for (int i = 0; i < max_k; ++i) {
      out += ",";
      if (i < r.achieved_sinr.size()) out += format_g9(r.achieved_sinr(i));
    }
    out += "\n";
  }
  return out;
}

void emit_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("emit_csv: cannot open " + path);
  f << to_csv(records);
  if (!f) throw IoError("emit_csv: write failed for " + path);
}

}  // namespace relaybf::experiment
