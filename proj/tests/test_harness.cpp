#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "relaybf/config.hpp"
#include "relaybf/errors.hpp"
#include "relaybf/experiment.hpp"

using namespace relaybf;

namespace {

experiment::ExperimentSpec small_spec() {
  experiment::ExperimentSpec spec;
  spec.scheme = experiment::Scheme::both;
  spec.axis = experiment::Axis::sinr_target;
  spec.axis_values = {0.0, 3.0};
  spec.trials = 3;
  spec.base = oracles::make_scenario(2, 2, 0.0);
  spec.seed = 7;
  return spec;
}

// minimal CSV reader used as the round-trip oracle
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream fs(line);
    while (std::getline(fs, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

TEST_CASE("experiment produces one record per axis value, trial and scheme") {
  const auto records = experiment::run_experiment(small_spec());
  CHECK(records.size() == 12);  // 2 axis values x 3 trials x 2 schemes
}

TEST_CASE("repeated runs produce byte-identical CSV output") {
  const auto spec = small_spec();
  const auto a = experiment::to_csv(experiment::run_experiment(spec));
  const auto b = experiment::to_csv(experiment::run_experiment(spec));
  CHECK(a == b);

  auto threaded = spec;
  threaded.threads = 2;
  const auto c = experiment::to_csv(experiment::run_experiment(threaded));
  CHECK(a == c);
}

TEST_CASE("paired draws share the channel seed across schemes") {
  const auto records = experiment::run_experiment(small_spec());
  for (size_t i = 0; i < records.size(); i += 2) {
    CHECK(records[i].axis_value == records[i + 1].axis_value);
    CHECK(records[i].trial == records[i + 1].trial);
    CHECK(records[i].seed == records[i + 1].seed);
    CHECK(records[i].scheme != records[i + 1].scheme);
  }
}

TEST_CASE("tiny targets are feasible for every trial and scheme") {
  auto spec = small_spec();
  spec.axis_values = {-60.0};
  const auto records = experiment::run_experiment(spec);
  for (const auto& r : records) {
    CHECK(r.status == SolveStatus::feasible);
  }
}

TEST_CASE("avg_iterations implements the outcome-weighted mean") {
  std::vector<experiment::TrialRecord> records(2);
  records[0].status = SolveStatus::feasible;
  records[0].feas_outer = 2;
  records[0].min_outer = 1;
  records[1].status = SolveStatus::feasible;
  records[1].feas_outer = 2;
  records[1].min_outer = 1;
  CHECK(experiment::avg_iterations(records) == doctest::Approx(3.0));

  for (auto& r : records) {
    r.status = SolveStatus::infeasible;
    r.feas_outer = 4;
    r.min_outer = 0;
  }
  CHECK(experiment::avg_iterations(records) == doctest::Approx(4.0));

  records[0].status = SolveStatus::feasible;
  records[0].feas_outer = 2;
  records[0].min_outer = 1;
  CHECK(experiment::avg_iterations(records) == doctest::Approx(3.5));

  CHECK_THROWS_AS(experiment::avg_iterations({}), InvalidInputError);
}

TEST_CASE("csv schema, header-only case and round trip at 9 digits") {
  const auto empty = experiment::to_csv({});
  CHECK(empty == "axis,trial,seed,scheme,status,t,balanced_level,p_b,p_r,"
                 "sum_power,outer_iters,inner_iters\n");

  const auto records = experiment::run_experiment(small_spec());
  const auto text = experiment::to_csv(records);
  const auto rows = parse_csv(text);
  REQUIRE(rows.size() == records.size() + 1);
  CHECK(rows[0][0] == "axis");
  CHECK(rows[0][12] == "sinr_1");
  CHECK(rows[0][13] == "sinr_2");
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& row = rows[i + 1];
    const auto& rec = records[i];
    // numeric fields reparse to the same 9-significant-digit rendering
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", std::strtod(row[5].c_str(), nullptr));
    CHECK(row[5] == buf);
    CHECK(std::strtod(row[9].c_str(), nullptr) ==
          doctest::Approx(rec.sum_power).epsilon(1e-8));
    CHECK(std::stoi(row[10]) == rec.outer_iters());
    CHECK(row[3] == rec.scheme);
  }

  const auto path = std::filesystem::temp_directory_path() / "relaybf_rt.csv";
  experiment::emit_csv(records, path.string());
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == text);
  std::filesystem::remove(path);
}

TEST_CASE("config parsing: arrays, dB conversion, defaults and errors") {
  const std::string text =
      "# two-user setup\n"
      "m_b = 4\n"
      "m_r = 4\n"
      "k = 2\n"
      "gamma = [3, 6]\n"
      "sigma_r_sq = 0.1\n"
      "sigma_k_sq = [0.1, 0.2]\n"
      "p_b_max = 10\n"
      "p_r_max = 12\n"
      "d_bs_rs = 0.5\n"
      "d_rs_ms = [0.25, 0.75]\n"
      "eta = 4\n"
      "d0 = 1\n";
  const auto loaded = config::parse_scenario(text);
  CHECK(loaded.scenario.m_b == 4);
  CHECK(loaded.scenario.gamma(0) == doctest::Approx(std::pow(10.0, 0.3)));
  CHECK(loaded.scenario.gamma(1) == doctest::Approx(std::pow(10.0, 0.6)));
  CHECK(loaded.scenario.sigma_k_sq(1) == doctest::Approx(0.2));
  CHECK(loaded.scenario.d_rs_ms(1) == doctest::Approx(0.75));
  CHECK(loaded.hops == 2);

  // scalar broadcast across users
  const auto bc = config::parse_scenario(
      "m_b=2\nm_r=2\nk=2\ngamma=0\nsigma_r_sq=1\nsigma_k_sq=1\n"
      "p_b_max=1\np_r_max=1\nd_bs_rs=1\nd_rs_ms=0.5\neta=4\nd0=1\nhops=3\n");
  CHECK(bc.scenario.gamma(1) == doctest::Approx(1.0));
  CHECK(bc.hops == 3);

  CHECK_THROWS_AS(config::parse_scenario("m_b = 2\n"), InvalidInputError);
  CHECK_THROWS_AS(config::parse_scenario("nonsense line\n"), InvalidInputError);
}

TEST_CASE("axis application") {
  const auto base = oracles::make_scenario(2, 2, 0.0);
  const auto boosted =
      experiment::apply_axis(base, experiment::Axis::sinr_target, 10.0);
  CHECK(boosted.gamma(0) == doctest::Approx(10.0));

  const auto ratio =
      experiment::apply_axis(base, experiment::Axis::distance_ratio, 2.0);
  CHECK(ratio.d_rs_ms(0) == doctest::Approx(base.d_bs_rs / 2.0));

  const auto users = experiment::apply_axis(base, experiment::Axis::users, 4.0);
  CHECK(users.k == 4);
  CHECK(users.m_b == 4);
  CHECK(users.gamma.size() == 4);

  const auto caps = experiment::apply_axis(base, experiment::Axis::power_cap, 3.0);
  CHECK(caps.p_b_max == doctest::Approx(3.0));
  CHECK(caps.p_r_max == doctest::Approx(3.0));

  CHECK(experiment::axis_from_string("hops") == experiment::Axis::hops);
  CHECK_THROWS_AS(experiment::axis_from_string("bogus"), InvalidInputError);
}
