// Command-line front end: single-instance feasibility/minimization runs and
// Monte Carlo sweeps with CSV output.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "relaybf/af.hpp"
#include "relaybf/config.hpp"
#include "relaybf/errors.hpp"
#include "relaybf/experiment.hpp"
#include "relaybf/svd_relay.hpp"

namespace {

using namespace relaybf;

struct CommonArgs {
  std::string config_path;
  std::string scheme = "both";
  int trials = 200;
  std::uint64_t seed = 1;
  std::string out_path;
  std::string pairing = "off";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out) {
  cmd->add_option("--config", args.config_path, "scenario config file")->required();
  cmd->add_option("--scheme", args.scheme, "af|svd|both")
      ->check(CLI::IsMember({"af", "svd", "both"}));
  cmd->add_option("--trials", args.trials, "Monte Carlo trials");
  cmd->add_option("--seed", args.seed, "base RNG seed");
  auto* out = cmd->add_option("--out", args.out_path, "output CSV path");
  if (needs_out) out->required();
  cmd->add_option("--pairing", args.pairing, "subchannel pairing on|off")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--threads", args.threads, "worker threads for sweeps");
}

experiment::Scheme parse_scheme(const std::string& s) {
  if (s == "af") return experiment::Scheme::af;
  if (s == "svd") return experiment::Scheme::svd;
  return experiment::Scheme::both;
}

void print_report(const std::string& scheme, const SolveReport& rep) {
  std::printf("%-4s status=%s t=%.6g balanced_level=%.6g sum_power=%.6g "
              "p_b=%.6g p_r=%.6g outer=%d inner=%d\n",
              scheme.c_str(), to_string(rep.status).c_str(), rep.t,
              rep.balanced_level, rep.sum_power, rep.p_b, rep.p_r,
              rep.outer_iterations, rep.inner_iterations);
  std::printf("     sinr =");
  for (Eigen::Index i = 0; i < rep.achieved_sinr.size(); ++i) {
    std::printf(" %.6g", rep.achieved_sinr(i));
  }
  std::printf("\n");
}

int run_single(const CommonArgs& args, bool minimize) {
  const auto loaded = config::load_scenario(args.config_path);
  const auto& s = loaded.scenario;
  const auto ch = channel::generate(s, args.seed);
  const bool pairing_on = args.pairing == "on";
  bool all_feasible = true;

  if (args.scheme == "af" || args.scheme == "both") {
    auto feas = af::feasibility(s, ch);
    SolveReport rep = feas.report;
    if (minimize && feas.report.status == SolveStatus::feasible) {
      rep = af::minimize(s, ch, feas.design).report;
    }
    print_report("af", rep);
    all_feasible &= rep.status == SolveStatus::feasible;
  }
  if (args.scheme == "svd" || args.scheme == "both") {
    svd_relay::SvdOptions opts;
    opts.pairing = pairing_on ? svd_relay::PairingMode::heuristic
                              : svd_relay::PairingMode::off;
    auto feas = svd_relay::feasibility(s, ch, opts);
    SolveReport rep = feas.report;
    if (minimize && feas.report.status == SolveStatus::feasible) {
      rep = svd_relay::minimize(s, ch, feas.design).report;
    }
    print_report("svd", rep);
    all_feasible &= rep.status == SolveStatus::feasible;
  }
  return minimize && !all_feasible ? 1 : 0;
}

int run_sweep(const CommonArgs& args, const std::string& axis,
              std::vector<double> values) {
  const auto loaded = config::load_scenario(args.config_path);
  experiment::ExperimentSpec spec;
  spec.scheme = parse_scheme(args.scheme);
  spec.axis = experiment::axis_from_string(axis);
  spec.axis_values = std::move(values);
  spec.trials = args.trials;
  spec.base = loaded.scenario;
  spec.seed = args.seed;
  spec.pairing = args.pairing == "on";
  spec.threads = args.threads;
  const auto records = experiment::run_experiment(spec);
  experiment::emit_csv(records, args.out_path);
  std::printf("wrote %zu records to %s\n", records.size(), args.out_path.c_str());
  return 0;
}

int run_pairing(const CommonArgs& args) {
  const auto loaded = config::load_scenario(args.config_path);
  experiment::ExperimentSpec spec;
  spec.scheme = experiment::Scheme::svd;
  spec.axis = experiment::Axis::sinr_target;
  spec.axis_values = {10.0 * std::log10(loaded.scenario.gamma(0))};
  spec.trials = args.trials;
  spec.base = loaded.scenario;
  spec.seed = args.seed;
  spec.threads = args.threads;

  spec.pairing = false;
  auto records = experiment::run_experiment(spec);
  spec.pairing = true;
  auto paired = experiment::run_experiment(spec);

  // mean sum power over draws where both runs were feasible
  double off_sum = 0.0, on_sum = 0.0;
  int both_feasible = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].status == SolveStatus::feasible &&
        paired[i].status == SolveStatus::feasible) {
      off_sum += records[i].sum_power;
      on_sum += paired[i].sum_power;
      ++both_feasible;
    }
  }
  for (auto& r : paired) records.push_back(std::move(r));
  experiment::emit_csv(records, args.out_path);
  if (both_feasible > 0) {
    std::printf("paired feasible draws: %d  mean sum power off=%.6g on=%.6g\n",
                both_feasible, off_sum / both_feasible, on_sum / both_feasible);
  } else {
    std::printf("no draws feasible under both settings\n");
  }
  return 0;
}

int run_multihop(const CommonArgs& args, std::vector<double> hop_values) {
  const auto loaded = config::load_scenario(args.config_path);
  experiment::ExperimentSpec spec;
  spec.scheme = experiment::Scheme::svd;
  spec.axis = experiment::Axis::hops;
  spec.axis_values = std::move(hop_values);
  if (spec.axis_values.empty()) {
    spec.axis_values = {double(loaded.hops)};
  }
  spec.trials = args.trials;
  spec.base = loaded.scenario;
  spec.seed = args.seed;
  spec.pairing = args.pairing == "on";
  spec.threads = args.threads;
  const auto records = experiment::run_experiment(spec);
  experiment::emit_csv(records, args.out_path);
  std::printf("wrote %zu records to %s\n", records.size(), args.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint beamforming and power allocation for MIMO relay downlinks"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string axis = "sinr_target";
  std::vector<double> values;

  auto* feas = app.add_subcommand("feasibility", "single-instance feasibility test");
  add_common(feas, args, false);
  auto* min = app.add_subcommand("minimize", "single-instance sum power minimization");
  add_common(min, args, false);
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one axis");
  add_common(sweep, args, true);
  sweep->add_option("--axis", axis, "sinr_target|distance_ratio|users|power_cap|hops");
  sweep->add_option("--values", values, "axis values")->delimiter(',')->required();
  auto* pairing = app.add_subcommand("pairing", "paired-draw pairing comparison");
  add_common(pairing, args, true);
  auto* multihop = app.add_subcommand("multihop", "sweep over hop counts");
  add_common(multihop, args, true);
  multihop->add_option("--values", values, "hop counts")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (feas->parsed()) return run_single(args, false);
    if (min->parsed()) return run_single(args, true);
    if (sweep->parsed()) return run_sweep(args, axis, values);
    if (pairing->parsed()) return run_pairing(args);
    if (multihop->parsed()) return run_multihop(args, values);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
