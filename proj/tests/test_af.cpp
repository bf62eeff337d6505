#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "relaybf/af.hpp"
#include "relaybf/channel.hpp"
#include "relaybf/errors.hpp"
#include "relaybf/numerics.hpp"

using namespace relaybf;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// Uplink SINRs of Eq-style scalar channels at powers q.
VectorXd uplink_sinrs(const MatrixXcd& h_hat, double g_r, const VectorXd& q,
                      const VectorXd& noise) {
  const int k = int(q.size());
  VectorXd out(k);
  for (int u = 0; u < k; ++u) {
    double denom = noise(u);
    for (int i = 0; i < k; ++i) {
      if (i != u) denom += q(i) * g_r * std::norm(h_hat(i, u));
    }
    out(u) = q(u) * g_r * std::norm(h_hat(u, u)) / denom;
  }
  return out;
}

double matched_gain_sq(const channel::ChannelRealization& ch) {
  const VectorXcd w = (ch.h.adjoint() * ch.g[0]).normalized();
  return std::norm((ch.g[0].adjoint() * ch.h * w)(0));
}

// 2-D grid oracle for the single-user instances over (p, g_r).
double k1_min_power_grid(const channel::Scenario& s,
                         const channel::ChannelRealization& ch) {
  const VectorXcd w = (ch.h.adjoint() * ch.g[0]).normalized();
  const double own = std::norm((ch.g[0].adjoint() * ch.h * w)(0));
  const double relay_gain = (ch.h * w).squaredNorm();
  const double g_norm_sq = ch.g[0].squaredNorm();
  auto objective = [&](const VectorXd& x) {
    const double p = x(0), g_r = x(1);
    const double sinr = p * g_r * own /
                        (g_r * s.sigma_r_sq * g_norm_sq + s.sigma_k_sq(0));
    const double p_r = g_r * (p * relay_gain + s.m_r * s.sigma_r_sq);
    if (sinr < s.gamma(0) || p > s.p_b_max || p_r > s.p_r_max) {
      return std::numeric_limits<double>::infinity();
    }
    return p + p_r;
  };
  VectorXd lo(2), hi(2), start(2);
  lo << std::log(1e-8 * s.p_b_max), std::log(1e-8);
  hi << std::log(s.p_b_max), std::log(s.p_r_max / (s.m_r * s.sigma_r_sq));
  start << std::log(0.5 * s.p_b_max), 0.0;
  const VectorXd best = oracles::refine_grid(objective, lo, hi, start.array().exp(), 13, 1e-5);
  return objective(best);
}

}  // namespace

TEST_CASE("beamformers: single user gets the matched filter") {
  const auto s = oracles::make_scenario(1, 3, 3.0);
  const auto ch = channel::generate(s, 21);
  const auto w = af::beamformers(s, ch, 1.5, VectorXd::Constant(1, 2.0));
  const VectorXcd mf = (ch.h.adjoint() * ch.g[0]).normalized();
  CHECK(oracles::angle_between(w.col(0), mf) < 1e-10);
}

TEST_CASE("beamformers: orthogonal effective channels decouple") {
  auto s = oracles::make_scenario(2, 2, 3.0);
  channel::ChannelRealization ch;
  ch.h = MatrixXcd::Identity(2, 2);
  ch.g = {VectorXcd::Zero(2), VectorXcd::Zero(2)};
  ch.g[0](0) = 1.0;
  ch.g[1](1) = 1.0;
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(2, 1.0));
  CHECK(std::abs(w(0, 0)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(w(1, 1)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("beamformers match the dense pencil oracle") {
  oracles::rng(701);
  const auto s = oracles::make_scenario(3, 4, 3.0);
  const auto ch = channel::generate(s, 23);
  const double g_r = 1.7;
  VectorXd q(3);
  q << 1.0, 2.5, 0.7;
  const auto w = af::beamformers(s, ch, g_r, q);
  VectorXd noise(3);
  std::vector<VectorXcd> h_tilde(3);
  for (int u = 0; u < 3; ++u) {
    h_tilde[u] = std::sqrt(g_r) * (ch.h.adjoint() * ch.g[u]);
    noise(u) = g_r * s.sigma_r_sq * ch.g[u].squaredNorm() + s.sigma_k_sq(u);
  }
  for (int u = 0; u < 3; ++u) {
    MatrixXcd rn = MatrixXcd::Identity(4, 4);
    for (int i = 0; i < 3; ++i) {
      if (i != u) rn += (q(i) / noise(i)) * h_tilde[i] * h_tilde[i].adjoint();
    }
    const auto ref = oracles::dominant_pencil(
        (q(u) / noise(u)) * h_tilde[u] * h_tilde[u].adjoint(), rn);
    CHECK(oracles::angle_between(w.col(u), ref.vector) < 1e-6);
  }
}

TEST_CASE("uplink_balance single-user closed form") {
  MatrixXcd h_hat(1, 1);
  h_hat(0, 0) = std::complex<double>(0.8, 0.4);
  const double g_r = 1.3, p_cap = 5.0;
  const VectorXd gamma = VectorXd::Constant(1, 2.0);
  const VectorXd noise = VectorXd::Constant(1, 0.7);
  const auto bal = af::uplink_balance(h_hat, g_r, gamma, noise, p_cap);
  CHECK(bal.q(0) == doctest::Approx(p_cap).epsilon(1e-10));
  const double expect =
      p_cap * g_r * std::norm(h_hat(0, 0)) / (gamma(0) * noise(0));
  CHECK(bal.c_u == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("uplink_balance splits power between symmetric users") {
  MatrixXcd h_hat(2, 2);
  h_hat << 1.0, 0.4, 0.4, 1.0;  // indistinguishable users
  const VectorXd gamma = VectorXd::Constant(2, 1.5);
  const VectorXd noise = VectorXd::Constant(2, 0.5);
  const auto bal = af::uplink_balance(h_hat, 1.0, gamma, noise, 8.0);
  CHECK(bal.q(0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(bal.q(1) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("uplink_balance agrees with a bisection oracle and balances exactly") {
  oracles::rng(702);
  for (int trial = 0; trial < 25; ++trial) {
    const MatrixXcd h_hat = oracles::random_complex(2, 2);
    if (std::abs(h_hat(0, 0)) < 0.1 || std::abs(h_hat(1, 1)) < 0.1) continue;
    const double g_r = oracles::uniform(0.3, 3.0);
    const double p_cap = oracles::uniform(1.0, 20.0);
    VectorXd gamma(2), noise(2);
    gamma << oracles::uniform(0.5, 3.0), oracles::uniform(0.5, 3.0);
    noise << oracles::uniform(0.2, 1.0), oracles::uniform(0.2, 1.0);
    const auto bal = af::uplink_balance(h_hat, g_r, gamma, noise, p_cap);

    // tightness: all SINR ratios equal C^U, sum power equal to the cap
    const VectorXd sinr = uplink_sinrs(h_hat, g_r, bal.q, noise);
    for (int u = 0; u < 2; ++u) {
      CHECK(std::abs(sinr(u) / gamma(u) - bal.c_u) / bal.c_u < 1e-8);
    }
    CHECK(std::abs(bal.q.sum() - p_cap) / p_cap < 1e-8);

    // bisection on C: q(C) = (I - C D Psi^T)^{-1} C D sigma, match sum = cap
    MatrixXd dpsi_t(2, 2), d(2, 2);
    d.setZero();
    dpsi_t.setZero();
    for (int i = 0; i < 2; ++i) {
      d(i, i) = gamma(i) / (g_r * std::norm(h_hat(i, i)));
      for (int j = 0; j < 2; ++j) {
        if (i != j) dpsi_t(i, j) = d(i, i) * g_r * std::norm(h_hat(j, i));
      }
    }
    const VectorXd d_sigma = d.diagonal().cwiseProduct(noise);
    double lo = 0.0, hi = 1.0;
    auto sum_q = [&](double c) {
      const MatrixXd m = MatrixXd::Identity(2, 2) - c * dpsi_t;
      const VectorXd q = m.partialPivLu().solve(c * d_sigma);
      return q.sum();
    };
    while (numerics::spectral_radius(MatrixXd(hi * dpsi_t)) < 1.0 &&
           sum_q(hi) < p_cap) {
      hi *= 2.0;
      if (hi > 1e14) break;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (numerics::spectral_radius(MatrixXd(mid * dpsi_t)) < 1.0 &&
          sum_q(mid) < p_cap) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    CHECK(bal.c_u == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
  }
}

TEST_CASE("feasibility_gp: vanishing targets are trivially feasible") {
  auto s = oracles::make_scenario(2, 2, 0.0);
  s.gamma.setConstant(1e-6);
  const auto ch = channel::generate(s, 31);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(2, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const auto res = af::feasibility_gp(s, eff, ch);
  CHECK(res.objective < 1e-3);
}

TEST_CASE("feasibility_gp single-user optimum matches the grid") {
  auto s = oracles::make_scenario(1, 2, 6.0);
  const auto ch = channel::generate(s, 33);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(1, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const auto res = af::feasibility_gp(s, eff, ch);

  const double own = std::norm(eff.h_hat(0, 0));
  const double relay_gain = eff.h_r.col(0).squaredNorm();
  const double g_norm_sq = ch.g[0].squaredNorm();
  auto objective = [&](const VectorXd& x) {
    const double p = x(0), g_r = x(1);
    if (p > s.p_b_max ||
        g_r * (p * relay_gain + s.m_r * s.sigma_r_sq) > s.p_r_max) {
      return std::numeric_limits<double>::infinity();
    }
    return s.gamma(0) *
           (g_r * s.sigma_r_sq * g_norm_sq + s.sigma_k_sq(0)) / (p * g_r * own);
  };
  VectorXd lo(2), hi(2), start(2);
  lo << std::log(1e-8), std::log(1e-8);
  hi << std::log(s.p_b_max), std::log(s.p_r_max / (s.m_r * s.sigma_r_sq));
  start << 0.0, 0.0;
  const VectorXd best = oracles::refine_grid(objective, lo, hi, start.array().exp(), 13, 1e-5);
  CHECK(res.objective == doctest::Approx(objective(best)).epsilon(2e-3));
}

TEST_CASE("feasibility objective is invariant to a common noise and cap scale") {
  auto s = oracles::make_scenario(2, 2, 4.0);
  const auto ch = channel::generate(s, 35);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(2, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const double t0 = af::feasibility_gp(s, eff, ch).objective;

  auto scaled = s;
  const double c = 7.0;
  scaled.sigma_r_sq *= c;
  scaled.sigma_k_sq *= c;
  scaled.p_b_max *= c;
  scaled.p_r_max *= c;
  const auto eff2 = af::effective_channel(scaled, ch, w, 1.0);
  const double t1 = af::feasibility_gp(scaled, eff2, ch).objective;
  CHECK(t1 == doctest::Approx(t0).epsilon(1e-6));
}

TEST_CASE("minpower_gp single-user optimum matches the grid") {
  auto s = oracles::make_scenario(1, 2, 6.0);
  const auto ch = channel::generate(s, 37);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(1, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const auto res = af::minpower_gp(s, eff, ch);
  CHECK(res.status == gp::GpStatus::optimal);
  CHECK(res.objective == doctest::Approx(k1_min_power_grid(s, ch)).epsilon(1e-3));
}

TEST_CASE("minpower_gp: doubled targets never cost less") {
  auto s = oracles::make_scenario(2, 2, 3.0);
  const auto ch = channel::generate(s, 39);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(2, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const double base = af::minpower_gp(s, eff, ch).objective;
  auto harder = s;
  harder.gamma *= 2.0;
  const double doubled = af::minpower_gp(harder, eff, ch).objective;
  CHECK(doubled >= base * (1.0 - 1e-9));
}

TEST_CASE("minpower_gp: caps at the unconstrained optimum do not bind") {
  auto s = oracles::make_scenario(2, 2, 3.0);
  s.p_b_max = 1e9;
  s.p_r_max = 1e9;
  const auto ch = channel::generate(s, 41);
  const auto w = af::beamformers(s, ch, 1.0, VectorXd::Constant(2, 1.0));
  const auto eff = af::effective_channel(s, ch, w, 1.0);
  const auto open = af::minpower_gp(s, eff, ch);
  REQUIRE(open.status == gp::GpStatus::optimal);

  auto pinched = s;
  pinched.p_b_max = open.p.sum();
  pinched.p_r_max = open.objective - open.p.sum();
  const auto eff2 = af::effective_channel(pinched, ch, w, 1.0);
  const auto tight = af::minpower_gp(pinched, eff2, ch);
  CHECK(tight.objective == doctest::Approx(open.objective).epsilon(1e-6));
}

TEST_CASE("uplink_minpower scalar and decoupled forms") {
  MatrixXcd h1(1, 1);
  h1(0, 0) = 0.9;
  const VectorXd q1 = af::uplink_minpower(h1, 2.0, VectorXd::Constant(1, 1.5),
                                          VectorXd::Constant(1, 0.3));
  CHECK(q1(0) == doctest::Approx(1.5 * 0.3 / (2.0 * 0.81)).epsilon(1e-12));

  MatrixXcd diag = MatrixXcd::Zero(2, 2);
  diag(0, 0) = 1.2;
  diag(1, 1) = 0.5;
  VectorXd gamma(2), noise(2);
  gamma << 2.0, 1.0;
  noise << 0.4, 0.9;
  const VectorXd q = af::uplink_minpower(diag, 1.0, gamma, noise);
  CHECK(q(0) == doctest::Approx(gamma(0) * noise(0) / std::norm(diag(0, 0))).epsilon(1e-12));
  CHECK(q(1) == doctest::Approx(gamma(1) * noise(1) / std::norm(diag(1, 1))).epsilon(1e-12));
}

TEST_CASE("uplink_minpower agrees with fixed-point iteration and hits targets") {
  oracles::rng(703);
  int done = 0;
  while (done < 10) {
    MatrixXcd h_hat = oracles::random_complex(3, 3);
    for (int i = 0; i < 3; ++i) {
      h_hat(i, i) += 2.0;  // keep the coupling spectral radius below one
      for (int j = 0; j < 3; ++j) {
        if (i != j) h_hat(i, j) *= 0.3;
      }
    }
    VectorXd gamma(3), noise(3);
    for (int i = 0; i < 3; ++i) {
      gamma(i) = oracles::uniform(0.3, 1.2);
      noise(i) = oracles::uniform(0.2, 1.0);
    }
    const double g_r = oracles::uniform(0.5, 2.0);
    Eigen::VectorXd q;
    try {
      q = af::uplink_minpower(h_hat, g_r, gamma, noise);
    } catch (const InfeasibleAllocationError&) {
      continue;
    }
    // independent fixed point: q <- D Psi^T q + D sigma
    VectorXd fp = VectorXd::Ones(3);
    for (int it = 0; it < 20000; ++it) {
      VectorXd next(3);
      for (int u = 0; u < 3; ++u) {
        double acc = gamma(u) * noise(u) / (g_r * std::norm(h_hat(u, u)));
        for (int i = 0; i < 3; ++i) {
          if (i != u) {
            acc += gamma(u) * std::norm(h_hat(i, u)) /
                   std::norm(h_hat(u, u)) * fp(i);
          }
        }
        next(u) = acc;
      }
      if ((next - fp).cwiseAbs().maxCoeff() < 1e-14) break;
      fp = next;
    }
    CHECK((q - fp).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, fp.maxCoeff()));
    const VectorXd sinr = uplink_sinrs(h_hat, g_r, q, noise);
    for (int u = 0; u < 3; ++u) {
      CHECK(std::abs(sinr(u) - gamma(u)) / gamma(u) < 1e-8);
    }
    ++done;
  }
}

TEST_CASE("uplink_minpower rejects infeasible coupling") {
  MatrixXcd h_hat(2, 2);
  h_hat << 0.1, 2.0, 2.0, 0.1;  // overwhelming cross gains
  CHECK_THROWS_AS(af::uplink_minpower(h_hat, 1.0, VectorXd::Constant(2, 5.0),
                                      VectorXd::Constant(2, 1.0)),
                  InfeasibleAllocationError);
}

TEST_CASE("feasibility driver: vanishing targets pass in one outer iteration") {
  auto s = oracles::make_scenario(2, 2, 0.0);
  s.gamma.setConstant(1e-6);
  const auto ch = channel::generate(s, 43);
  const auto out = af::feasibility(s, ch);
  CHECK(out.report.status == SolveStatus::feasible);
  CHECK(out.report.outer_iterations == 1);
  CHECK(out.report.t < 1e-2);
}

TEST_CASE("feasibility driver: absurd targets are infeasible") {
  auto s = oracles::make_scenario(2, 2, 0.0);
  s.gamma.setConstant(1e9);
  s.p_b_max = 1.0;
  s.p_r_max = 1.0;
  const auto ch = channel::generate(s, 45);
  const auto out = af::feasibility(s, ch);
  CHECK(out.report.status == SolveStatus::infeasible);
  CHECK(out.report.t > 1.0);
}

TEST_CASE("feasibility driver: t never increases across outer iterations") {
  for (std::uint64_t seed : {47ULL, 48ULL, 49ULL, 50ULL}) {
    const auto s = oracles::make_scenario(2, 2, 8.0, 4.0, 0.5);
    const auto ch = channel::generate(s, seed);
    const auto out = af::feasibility(s, ch);
    for (size_t i = 1; i < out.report.t_history.size(); ++i) {
      CHECK(out.report.t_history[i] <= out.report.t_history[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("feasibility driver agrees with a multi-start beamformer search") {
  oracles::rng(704);
  const auto s = oracles::make_scenario(2, 2, 5.0, 5.0, 0.5);
  const auto ch = channel::generate(s, 51);
  const auto out = af::feasibility(s, ch);
  REQUIRE(std::isfinite(out.report.t));

  // stochastic hill climbing over the beamformer pair from random restarts;
  // the power allocation below each candidate is solved exactly by the GP
  auto eval_w = [&](const MatrixXcd& w) {
    const auto eff = af::effective_channel(s, ch, w, 1.0);
    if (std::abs(eff.h_hat(0, 0)) < 1e-6 || std::abs(eff.h_hat(1, 1)) < 1e-6) {
      return std::numeric_limits<double>::infinity();
    }
    return af::feasibility_gp(s, eff, ch).objective;
  };
  double best = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 12; ++restart) {
    MatrixXcd w(2, 2);
    w.col(0) = oracles::random_unit(2);
    w.col(1) = oracles::random_unit(2);
    double t = eval_w(w);
    double step = 0.6;
    for (int iter = 0; iter < 160; ++iter) {
      MatrixXcd cand = w;
      cand.col(iter % 2) =
          (cand.col(iter % 2) + step * oracles::random_unit(2)).normalized();
      const double t_cand = eval_w(cand);
      if (t_cand < t) {
        w = cand;
        t = t_cand;
      } else {
        step *= 0.97;
      }
    }
    best = std::min(best, t);
  }
  CHECK(out.report.t <= best * 1.02);
  CHECK(best <= out.report.t * 1.02);
}

TEST_CASE("minimize: single user matches the grid optimum and verifies") {
  auto s = oracles::make_scenario(1, 2, 6.0);
  const auto ch = channel::generate(s, 53);
  const auto feas = af::feasibility(s, ch);
  REQUIRE(feas.report.status == SolveStatus::feasible);
  const auto out = af::minimize(s, ch, feas.design);
  REQUIRE(out.report.status == SolveStatus::feasible);
  CHECK(out.report.sum_power ==
        doctest::Approx(k1_min_power_grid(s, ch)).epsilon(1e-3));
  CHECK(out.report.achieved_sinr(0) >= s.gamma(0) * (1.0 - 1e-4));
  CHECK(out.report.p_b <= s.p_b_max + 1e-8);
  CHECK(out.report.p_r <= s.p_r_max + 1e-8);
}

TEST_CASE("minimize: re-running from the optimum is a fixed point") {
  const auto s = oracles::make_scenario(2, 2, 3.0);
  const auto ch = channel::generate(s, 55);
  const auto feas = af::feasibility(s, ch);
  REQUIRE(feas.report.status == SolveStatus::feasible);
  const auto first = af::minimize(s, ch, feas.design);
  REQUIRE(first.report.status == SolveStatus::feasible);
  const auto second = af::minimize(s, ch, first.design);
  CHECK(second.report.inner_iterations <= 2);
  CHECK(second.report.sum_power ==
        doctest::Approx(first.report.sum_power).epsilon(1e-4));
  CHECK(first.report.sum_power <= s.p_b_max + s.p_r_max + 1e-8);
}

TEST_CASE("duality: normalized downlink and uplink Perron values agree") {
  oracles::rng(705);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracles::make_scenario(3, 3, 3.0);
    const auto ch = channel::generate(s, 57 + trial);
    MatrixXcd w(3, 3);
    for (int i = 0; i < 3; ++i) w.col(i) = oracles::random_unit(3);
    const double g_r = oracles::uniform(0.4, 2.5);
    const auto eff = af::effective_channel(s, ch, w, g_r);

    // normalize user rows by their noise standard deviations
    MatrixXcd h_norm = eff.h_hat;
    for (int u = 0; u < 3; ++u) {
      h_norm.row(u) *= std::sqrt(g_r) / std::sqrt(eff.sigma_hat_sq(u));
    }
    const VectorXd unit_noise = VectorXd::Ones(3);
    const auto up = af::extended_coupling(h_norm, 1.0, s.gamma, unit_noise,
                                          s.p_b_max, true);
    const auto down = af::extended_coupling(h_norm, 1.0, s.gamma, unit_noise,
                                            s.p_b_max, false);
    const double rho_up = numerics::perron(up).value;
    const double rho_down = numerics::perron(down).value;
    CHECK(std::abs(rho_up - rho_down) / rho_up < 1e-6);

    const auto bal = af::uplink_balance(h_norm, 1.0, s.gamma, unit_noise, s.p_b_max);
    CHECK(bal.c_u == doctest::Approx(1.0 / rho_up).epsilon(1e-9));
  }
}

TEST_CASE("reports are invariant under a unit-modulus channel rotation") {
  const auto s = oracles::make_scenario(2, 2, 4.0);
  auto ch = channel::generate(s, 59);
  const auto base = af::feasibility(s, ch);
  auto rotated = ch;
  rotated.g[1] *= std::polar(1.0, 0.77);
  const auto rot = af::feasibility(s, rotated);
  CHECK(std::abs(base.report.t - rot.report.t) < 1e-9 * std::max(1.0, base.report.t));
  CHECK(std::abs(base.report.sum_power - rot.report.sum_power) <
        1e-9 * std::max(1.0, base.report.sum_power));
  CHECK((base.report.achieved_sinr - rot.report.achieved_sinr).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("relay power model equals the ground-truth oracle expression") {
  const auto s = oracles::make_scenario(2, 2, 3.0);
  const auto ch = channel::generate(s, 61);
  const auto feas = af::feasibility(s, ch);
  REQUIRE(feas.report.status == SolveStatus::feasible);
  const auto& d = feas.design;
  const MatrixXcd f = d.w * d.p.array().sqrt().matrix().asDiagonal();
  const auto rep = channel::verify_sinr(s, ch, f, af::relay_matrix(s.m_r, d.g_r));
  double model = s.m_r * d.g_r * s.sigma_r_sq;
  for (int k = 0; k < s.k; ++k) {
    model += d.g_r * d.p(k) * (ch.h * d.w.col(k)).squaredNorm();
  }
  CHECK(rep.p_r == doctest::Approx(model).epsilon(1e-10));
}
