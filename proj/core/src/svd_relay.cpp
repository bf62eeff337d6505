#include "relaybf/svd_relay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relaybf/errors.hpp"
#include "relaybf/numerics.hpp"

namespace relaybf::svd_relay {

namespace {

constexpr double kEps = 1e-3;
constexpr int kInnerCap = 200;
constexpr int kOuterCap = 50;
constexpr double kDiagFloor = 1e-12;
constexpr double kRankFloor = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

using numerics::ComplexMatrix;
using numerics::ComplexVector;
using numerics::RealMatrix;
using numerics::RealVector;

double ratio_a(double alpha) {  // alpha / (1 + alpha), stable at +inf
  return std::isinf(alpha) ? 1.0 : alpha / (1.0 + alpha);
}

double inv_1p(double alpha) {  // 1 / (1 + alpha)
  return std::isinf(alpha) ? 0.0 : 1.0 / (1.0 + alpha);
}

double d_entry(double gamma, double alpha, double own_gain_sq) {
  // gamma (1 + alpha) / (alpha |g_hat_kk|^2)
  return gamma / (ratio_a(alpha) * own_gain_sq);
}

double e_entry(double gamma, double alpha) {
  return std::isinf(alpha) ? 0.0 : gamma / alpha;
}

void check_diag(const ComplexMatrix& g_hat) {
  for (Eigen::Index k = 0; k < g_hat.rows(); ++k) {
    if (std::abs(g_hat(k, k)) < kDiagFloor) {
      throw NumericFailureError("svd_relay: user orthogonal to its own beam");
    }
  }
}

std::vector<int> order_descending(const Eigen::VectorXd& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v(a) > v(b); });
  return idx;
}

std::vector<int> order_ascending(const Eigen::VectorXd& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v(a) < v(b); });
  return idx;
}

std::vector<int> identity_perm(int k) {
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

std::vector<int> inverse_perm(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (size_t r = 0; r < p.size(); ++r) inv[p[r]] = int(r);
  return inv;
}

}  // namespace

Eigen::VectorXd stream_lambda(const Eigen::VectorXd& lambda,
                              const std::vector<int>& pairing) {
  Eigen::VectorXd out(lambda.size());
  for (Eigen::Index r = 0; r < lambda.size(); ++r) out(pairing[r]) = lambda(r);
  return out;
}

Eigen::VectorXd normalization_eps(const Eigen::VectorXd& lambda_stream,
                                  const Eigen::VectorXd& p, double sigma_r_sq) {
  return (lambda_stream.array().square() * p.array() + sigma_r_sq)
      .rsqrt()
      .matrix();
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> precoders(
    const channel::Scenario& s, const SvdDesign& d) {
  const int k = s.k;
  const auto rank_of = inverse_perm(d.pairing);
  Eigen::MatrixXcd f(s.m_b, k);
  Eigen::MatrixXcd u_sel(s.m_r, k);
  for (int st = 0; st < k; ++st) {
    f.col(st) = std::sqrt(d.p(st)) * d.v.col(rank_of[st]);
    u_sel.col(st) = d.u.col(rank_of[st]);
  }
  const Eigen::VectorXd gain = d.p_r.array().sqrt() * d.eps.array();
  const Eigen::MatrixXcd q =
      d.a * gain.asDiagonal() * u_sel.adjoint();
  return {f, q};
}

Eigen::MatrixXcd beamformers(const std::vector<Eigen::VectorXcd>& g,
                             const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& q_r,
                             const Eigen::VectorXd& sigma_k_sq) {
  const int k = int(g.size());
  if (alpha.size() != k || q_r.size() != k || sigma_k_sq.size() != k) {
    throw InvalidInputError("svd_relay::beamformers: length mismatch");
  }
  if ((q_r.array() <= 0.0).any() || (alpha.array() <= 0.0).any()) {
    throw InvalidInputError("svd_relay::beamformers: powers and alpha must be positive");
  }
  const Eigen::Index m_r = g.front().size();
  Eigen::MatrixXcd a(m_r, k);
  for (int u = 0; u < k; ++u) {
    ComplexMatrix rn = sigma_k_sq(u) * ComplexMatrix::Identity(m_r, m_r);
    for (int i = 0; i < k; ++i) {
      if (i == u) continue;
      rn += q_r(i) * (g[i] * g[i].adjoint());
    }
    const double own = inv_1p(alpha(u)) * q_r(u);
    if (own > 0.0) rn += own * (g[u] * g[u].adjoint());
    const auto eig =
        numerics::dominant_gen_eigvec(g[u], ratio_a(alpha(u)) * q_r(u), rn);
    a.col(u) = eig.vector.normalized();
  }
  return a;
}

Eigen::MatrixXcd effective_gains(const std::vector<Eigen::VectorXcd>& g,
                                 const Eigen::MatrixXcd& a) {
  const int k = int(g.size());
  Eigen::MatrixXcd g_hat(k, a.cols());
  for (int u = 0; u < k; ++u) {
    g_hat.row(u) = g[u].adjoint() * a;
  }
  return g_hat;
}

Eigen::MatrixXd extended_coupling(const Eigen::MatrixXcd& g_hat,
                                  const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& sigma_k_sq,
                                  double p_r_max, bool transpose_psi) {
  check_diag(g_hat);
  const Eigen::Index k = g_hat.rows();
  RealMatrix d = RealMatrix::Zero(k, k);
  RealMatrix e = RealMatrix::Zero(k, k);
  RealMatrix psi = RealMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    d(i, i) = d_entry(gamma(i), alpha(i), std::norm(g_hat(i, i)));
    e(i, i) = e_entry(gamma(i), alpha(i));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) psi(i, j) = std::norm(g_hat(i, j));
    }
  }
  const RealMatrix z =
      (transpose_psi ? RealMatrix(d * psi.transpose()) : RealMatrix(d * psi)) + e;
  const RealVector d_sigma = d.diagonal().cwiseProduct(sigma_k_sq);
  RealMatrix ext(k + 1, k + 1);
  ext.topLeftCorner(k, k) = z;
  ext.topRightCorner(k, 1) = d_sigma;
  ext.bottomLeftCorner(1, k) = z.colwise().sum() / p_r_max;
  ext(k, k) = d_sigma.sum() / p_r_max;
  return ext;
}

BalanceResult uplink_balance(const Eigen::MatrixXcd& g_hat,
                             const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& sigma_k_sq, double p_r_max) {
  const Eigen::Index k = g_hat.rows();
  const auto ext = extended_coupling(g_hat, alpha, gamma, sigma_k_sq, p_r_max);
  const auto pf = numerics::perron(ext);
  if ((pf.vector.array() <= 0.0).any() || pf.value <= 0.0) {
    throw NumericFailureError("svd_relay::uplink_balance: degenerate Perron vector");
  }
  BalanceResult res;
  res.c_u = 1.0 / pf.value;
  res.q_r = pf.vector.head(k) / pf.vector(k);
  return res;
}

namespace {

// gamma_k * (inverse end-to-end SINR of user k) over [p, p_r, (t)] variables;
// exact expansion of the two-hop expression.
gp::Posynomial two_hop_constraint(int num_vars, int k, int n_users,
                                  const Eigen::VectorXd& lambda_stream,
                                  const Eigen::MatrixXcd& g_hat,
                                  const Eigen::VectorXd& gamma,
                                  double sigma_r_sq,
                                  const Eigen::VectorXd& sigma_k_sq,
                                  int t_index) {
  const double own = std::norm(g_hat(k, k));
  const double lam_sq = lambda_stream(k) * lambda_stream(k);
  const int pr0 = n_users;  // relay power block offset
  auto with_t = [&](gp::Monomial m) {
    if (t_index >= 0) m = m * gp::variable(num_vars, t_index, -1.0);
    return m;
  };
  gp::Posynomial posy;
  for (int i = 0; i < n_users; ++i) {
    if (i == k) continue;
    const double cross = std::norm(g_hat(k, i));
    // lambda^2 p_k pr_i |g_ki|^2 term
    posy += with_t(gamma(k) * cross / own *
                   (gp::variable(num_vars, pr0 + i) *
                    gp::variable(num_vars, pr0 + k, -1.0)));
    // sigma_r^2 pr_i |g_ki|^2 term
    posy += with_t(gamma(k) * sigma_r_sq * cross / (own * lam_sq) *
                   (gp::variable(num_vars, pr0 + i) *
                    gp::variable(num_vars, k, -1.0) *
                    gp::variable(num_vars, pr0 + k, -1.0)));
  }
  // lambda^2 p_k sigma_k^2
  posy += with_t(gamma(k) * sigma_k_sq(k) / own *
                 gp::variable(num_vars, pr0 + k, -1.0));
  // sigma_r^2 sigma_k^2
  posy += with_t(gamma(k) * sigma_r_sq * sigma_k_sq(k) / (own * lam_sq) *
                 (gp::variable(num_vars, k, -1.0) *
                  gp::variable(num_vars, pr0 + k, -1.0)));
  // pr_k |g_kk|^2 sigma_r^2
  posy += with_t(gamma(k) * sigma_r_sq / lam_sq *
                 gp::variable(num_vars, k, -1.0));
  return posy;
}

gp::Posynomial sum_cap(int num_vars, int offset, int count, double cap) {
  gp::Posynomial posy;
  for (int i = 0; i < count; ++i) {
    posy += gp::variable(num_vars, offset + i, 1.0, 1.0 / cap);
  }
  return posy;
}

}  // namespace

SvdGpResult feasibility_gp(const Eigen::VectorXd& lambda_stream,
                           const Eigen::MatrixXcd& g_hat,
                           const Eigen::VectorXd& gamma, double sigma_r_sq,
                           const Eigen::VectorXd& sigma_k_sq, double p_b_max,
                           double p_r_max) {
  check_diag(g_hat);
  const int k = int(gamma.size());
  const int num_vars = 2 * k + 1;
  const int t_index = 2 * k;
  std::vector<gp::Posynomial> cons;
  for (int u = 0; u < k; ++u) {
    cons.push_back(two_hop_constraint(num_vars, u, k, lambda_stream, g_hat,
                                      gamma, sigma_r_sq, sigma_k_sq, t_index));
  }
  cons.push_back(sum_cap(num_vars, 0, k, p_b_max));
  cons.push_back(sum_cap(num_vars, k, k, p_r_max));

  gp::GpProblem prob;
  prob.num_vars = num_vars;
  prob.objective = gp::variable(num_vars, t_index);
  prob.constraints = std::move(cons);
  const auto sol = gp::solve(prob);

  SvdGpResult res;
  res.status = sol.status;
  res.objective = sol.variables(t_index);
  res.p = sol.variables.head(k);
  res.p_r = sol.variables.segment(k, k);
  return res;
}

SvdGpResult minpower_gp(const Eigen::VectorXd& lambda_stream,
                        const Eigen::MatrixXcd& g_hat,
                        const Eigen::VectorXd& gamma, double sigma_r_sq,
                        const Eigen::VectorXd& sigma_k_sq, double p_b_max,
                        double p_r_max) {
  check_diag(g_hat);
  const int k = int(gamma.size());
  const int num_vars = 2 * k;
  gp::Posynomial objective;
  for (int i = 0; i < 2 * k; ++i) objective += gp::variable(num_vars, i);
  std::vector<gp::Posynomial> cons;
  for (int u = 0; u < k; ++u) {
    cons.push_back(two_hop_constraint(num_vars, u, k, lambda_stream, g_hat,
                                      gamma, sigma_r_sq, sigma_k_sq, -1));
  }
  cons.push_back(sum_cap(num_vars, 0, k, p_b_max));
  cons.push_back(sum_cap(num_vars, k, k, p_r_max));

  const auto prob = gp::make_min_problem(num_vars, objective, std::move(cons));
  const auto sol = gp::solve(prob);

  SvdGpResult res;
  res.status = sol.status;
  res.p = sol.variables.head(k);
  res.p_r = sol.variables.segment(k, k);
  res.objective = res.p.sum() + res.p_r.sum();
  return res;
}

Eigen::VectorXd uplink_minpower(const Eigen::MatrixXcd& g_hat,
                                const Eigen::VectorXd& alpha,
                                const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& sigma_k_sq) {
  check_diag(g_hat);
  const Eigen::Index k = g_hat.rows();
  RealMatrix d = RealMatrix::Zero(k, k);
  RealMatrix z = RealMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    d(i, i) = d_entry(gamma(i), alpha(i), std::norm(g_hat(i, i)));
    z(i, i) = e_entry(gamma(i), alpha(i));
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) z(i, j) += d(i, i) * std::norm(g_hat(j, i));
    }
  }
  if (numerics::spectral_radius(z) >= 1.0) {
    throw InfeasibleAllocationError(
        "svd_relay::uplink_minpower: coupling spectral radius >= 1");
  }
  const RealVector d_sigma = d.diagonal().cwiseProduct(sigma_k_sq);
  Eigen::VectorXd q_r =
      numerics::solve_linear(RealMatrix(RealMatrix::Identity(k, k) - z), d_sigma);
  if ((q_r.array() <= 0.0).any()) {
    throw InfeasibleAllocationError("svd_relay::uplink_minpower: nonpositive power");
  }
  return q_r;
}

Eigen::VectorXd separability_chi(const Eigen::MatrixXcd& g_hat) {
  const Eigen::Index k = g_hat.rows();
  Eigen::VectorXd chi(k);
  for (Eigen::Index u = 0; u < k; ++u) {
    double cross = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != u) cross += std::norm(g_hat(i, u));
    }
    chi(u) = cross > 0.0 ? std::norm(g_hat(u, u)) / cross : kInf;
  }
  return chi;
}

std::vector<bool> sufficient_condition(const Eigen::MatrixXcd& g_hat,
                                       const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd chi = separability_chi(g_hat);
  std::vector<bool> ok(gamma.size());
  for (Eigen::Index u = 0; u < gamma.size(); ++u) {
    // alpha chi / (1 + alpha + chi), with chi = +inf collapsing to alpha
    const double bound =
        std::isinf(chi(u)) ? alpha(u)
                           : alpha(u) * chi(u) / (1.0 + alpha(u) + chi(u));
    ok[u] = gamma(u) < bound;
  }
  return ok;
}

namespace {

struct SvdSetup {
  Eigen::MatrixXcd u;
  Eigen::MatrixXcd v;
  Eigen::VectorXd lambda;  // descending, leading k
};

SvdSetup first_hop_svd(const channel::Scenario& s,
                       const channel::ChannelRealization& ch) {
  if (s.k > std::min(s.m_b, s.m_r)) {
    throw InvalidInputError("svd_relay: needs k <= min(m_b, m_r)");
  }
  const auto dec = numerics::svd(ch.h);
  SvdSetup setup;
  setup.u = dec.u.leftCols(s.k);
  setup.v = dec.v.leftCols(s.k);
  setup.lambda = dec.sigma.head(s.k);
  if (setup.lambda(s.k - 1) < kRankFloor) {
    throw UnsupportedInstanceError("svd_relay: first hop is rank deficient");
  }
  return setup;
}

Eigen::VectorXd first_hop_alpha(const Eigen::VectorXd& lambda_stream,
                                const Eigen::VectorXd& p, double sigma_r_sq) {
  return lambda_stream.array().square() * p.array() / sigma_r_sq;
}

Eigen::VectorXd broadcast_cinr(const Eigen::MatrixXcd& g_hat,
                               const Eigen::VectorXd& sigma_k_sq) {
  const Eigen::Index k = g_hat.rows();
  Eigen::VectorXd cinr(k);
  for (Eigen::Index u = 0; u < k; ++u) {
    double denom = sigma_k_sq(u);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != u) denom += std::norm(g_hat(u, i));
    }
    cinr(u) = std::norm(g_hat(u, u)) / denom;
  }
  return cinr;
}

std::vector<int> choose_pairing(const channel::Scenario& s,
                                const channel::ChannelRealization& ch,
                                const SvdSetup& setup, PairingMode mode) {
  if (mode == PairingMode::off) return identity_perm(s.k);
  // bootstrap round with identity assignment and uniform powers
  const Eigen::VectorXd p0 =
      Eigen::VectorXd::Constant(s.k, s.p_b_max / double(s.k));
  const Eigen::VectorXd q0 =
      Eigen::VectorXd::Constant(s.k, s.p_r_max / double(s.k));
  const Eigen::VectorXd alpha0 = first_hop_alpha(setup.lambda, p0, s.sigma_r_sq);
  const Eigen::MatrixXcd a0 = beamformers(ch.g, alpha0, q0, s.sigma_k_sq);
  const Eigen::MatrixXcd g_hat0 = effective_gains(ch.g, a0);

  HopCinr cinr;
  cinr.first_hop = setup.lambda / s.sigma_r_sq;
  cinr.second_hop = broadcast_cinr(g_hat0, s.sigma_k_sq);
  if (mode == PairingMode::heuristic) {
    return pair_subchannels(cinr);
  }
  if (s.k > 4) {
    throw InvalidInputError("svd_relay: exhaustive pairing limited to k <= 4");
  }
  std::vector<int> best = identity_perm(s.k);
  double best_power = kInf;
  std::vector<int> perm = identity_perm(s.k);
  do {
    const double power = pairing_power(cinr, perm, s.gamma);
    if (power < best_power) {
      best_power = power;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct SvdSnapshot {
  Eigen::MatrixXcd a;
  Eigen::MatrixXcd g_hat;
  Eigen::VectorXd p, p_r, q_r;
  double c_u = 0.0;
  double t = kInf;
};

SvdOutcome finalize(const channel::Scenario& s,
                    const channel::ChannelRealization& ch,
                    const SvdSetup& setup, const std::vector<int>& pairing,
                    SolveStatus status, const SvdSnapshot& snap, int outer,
                    int inner, std::vector<double> t_history) {
  SvdOutcome out;
  out.design = SvdDesign{setup.u,  setup.v,   setup.lambda,
                         snap.a,   snap.p,    snap.p_r,
                         snap.q_r, Eigen::VectorXd(), pairing};
  out.report.status = status;
  out.report.t = snap.t;
  out.report.balanced_level = snap.c_u;
  out.report.outer_iterations = outer;
  out.report.inner_iterations = inner;
  out.report.t_history = std::move(t_history);
  if (snap.p.size() == s.k && (snap.p.array() > 0.0).all() &&
      (snap.p_r.array() > 0.0).all()) {
    const Eigen::VectorXd lam = stream_lambda(setup.lambda, pairing);
    out.design.eps = normalization_eps(lam, snap.p, s.sigma_r_sq);
    const auto [f, q] = precoders(s, out.design);
    const auto rep = channel::verify_sinr(s, ch, f, q);
    out.report.achieved_sinr = rep.sinr;
    out.report.p_b = rep.p_b;
    out.report.p_r = rep.p_r;
    out.report.sum_power = rep.p_b + rep.p_r;
  } else {
    out.report.achieved_sinr = Eigen::VectorXd::Zero(s.k);
  }
  return out;
}

SvdOutcome degenerate_outcome(const channel::Scenario& s,
                              const SvdSetup& setup,
                              const std::vector<int>& pairing) {
  SvdOutcome out;
  out.design.u = setup.u;
  out.design.v = setup.v;
  out.design.lambda = setup.lambda;
  out.design.pairing = pairing;
  out.report.status = SolveStatus::infeasible;
  out.report.t = kInf;
  out.report.achieved_sinr = Eigen::VectorXd::Zero(s.k);
  return out;
}

}  // namespace

SvdOutcome feasibility(const channel::Scenario& s,
                       const channel::ChannelRealization& ch,
                       const SvdOptions& opts) {
  s.validate();
  const SvdSetup setup = first_hop_svd(s, ch);
  const auto pairing = choose_pairing(s, ch, setup, opts.pairing);
  const Eigen::VectorXd lam = stream_lambda(setup.lambda, pairing);

  Eigen::VectorXd p = Eigen::VectorXd::Constant(s.k, s.p_b_max / double(s.k));
  Eigen::VectorXd q_r = Eigen::VectorXd::Constant(s.k, s.p_r_max / double(s.k));

  SvdSnapshot snap;
  std::vector<double> t_history;
  int inner_total = 0;
  int outer = 0;
  double t_prev = kInf;
  SolveStatus status = SolveStatus::max_iter;

  while (outer < kOuterCap) {
    ++outer;
    Eigen::MatrixXcd a;
    Eigen::MatrixXcd g_hat;
    double c_u = 0.0;
    double c_prev = std::numeric_limits<double>::quiet_NaN();
    try {
      for (int m = 0; m < kInnerCap; ++m) {
        const Eigen::VectorXd alpha = first_hop_alpha(lam, p, s.sigma_r_sq);
        a = beamformers(ch.g, alpha, q_r, s.sigma_k_sq);
        g_hat = effective_gains(ch.g, a);
        const auto bal =
            uplink_balance(g_hat, alpha, s.gamma, s.sigma_k_sq, s.p_r_max);
        q_r = bal.q_r;
        c_u = bal.c_u;
        ++inner_total;
        if (m > 0 && std::abs(c_u - c_prev) < kEps * std::max(1.0, std::abs(c_prev))) {
          break;
        }
        c_prev = c_u;
      }
    } catch (const NumericFailureError&) {
      return degenerate_outcome(s, setup, pairing);
    }

    const auto gpres = feasibility_gp(lam, g_hat, s.gamma, s.sigma_r_sq,
                                      s.sigma_k_sq, s.p_b_max, s.p_r_max);
    if (gpres.status == gp::GpStatus::max_iter) {
      status = SolveStatus::max_iter;
      break;
    }
    const double t = gpres.objective;
    if (t > snap.t + 1e-12) {
      status = snap.t <= 1.0 ? SolveStatus::feasible : SolveStatus::infeasible;
      break;
    }
    snap = SvdSnapshot{a, g_hat, gpres.p, gpres.p_r, q_r, c_u, t};
    p = gpres.p;
    t_history.push_back(t);

    if (t <= 1.0) {
      status = SolveStatus::feasible;
      break;
    }
    if (std::abs(t - t_prev) < kEps * std::max(1.0, t_prev)) {
      status = SolveStatus::infeasible;
      break;
    }
    t_prev = t;
  }
  if (status == SolveStatus::max_iter && snap.t <= 1.0) {
    status = SolveStatus::feasible;
  }
  return finalize(s, ch, setup, pairing, status, snap, outer, inner_total,
                  std::move(t_history));
}

SvdOutcome minimize(const channel::Scenario& s,
                    const channel::ChannelRealization& ch,
                    const SvdDesign& warm) {
  s.validate();
  const SvdSetup setup{warm.u, warm.v, warm.lambda};
  const auto& pairing = warm.pairing;
  const Eigen::VectorXd lam = stream_lambda(setup.lambda, pairing);
  if (warm.p.size() != s.k || (warm.p.array() <= 0.0).any() ||
      warm.q_r.size() != s.k || (warm.q_r.array() <= 0.0).any()) {
    throw InvalidInputError("svd_relay::minimize: warm start must carry positive p, q_r");
  }

  Eigen::VectorXd p = warm.p;
  Eigen::VectorXd q_r = warm.q_r;

  SvdSnapshot snap;
  std::vector<double> t_history;
  int inner_total = 0;
  int outer = 0;
  double t_prev = kInf;
  SolveStatus status = SolveStatus::max_iter;

  while (outer < kOuterCap) {
    ++outer;
    Eigen::MatrixXcd a;
    Eigen::MatrixXcd g_hat;
    try {
      double sum_prev = q_r.sum();
      for (int m = 0; m < kInnerCap; ++m) {
        const Eigen::VectorXd alpha = first_hop_alpha(lam, p, s.sigma_r_sq);
        a = beamformers(ch.g, alpha, q_r, s.sigma_k_sq);
        g_hat = effective_gains(ch.g, a);
        q_r = uplink_minpower(g_hat, alpha, s.gamma, s.sigma_k_sq);
        ++inner_total;
        if (std::abs(q_r.sum() - sum_prev) < kEps * std::max(1.0, sum_prev)) break;
        sum_prev = q_r.sum();
      }
    } catch (const NumericFailureError&) {
      return degenerate_outcome(s, setup, pairing);
    } catch (const InfeasibleAllocationError&) {
      return degenerate_outcome(s, setup, pairing);
    }

    const auto gpres = minpower_gp(lam, g_hat, s.gamma, s.sigma_r_sq,
                                   s.sigma_k_sq, s.p_b_max, s.p_r_max);
    if (gpres.status != gp::GpStatus::optimal) {
      status = gpres.status == gp::GpStatus::max_iter ? SolveStatus::max_iter
                                                      : SolveStatus::infeasible;
      break;
    }
    const double t = gpres.objective;
    if (t > snap.t + 1e-12) {
      status = SolveStatus::feasible;
      break;
    }
    snap = SvdSnapshot{a, g_hat, gpres.p, gpres.p_r, q_r, snap.c_u, t};
    p = gpres.p;
    t_history.push_back(t);
    if (std::abs(t - t_prev) < kEps * std::max(1.0, t_prev)) {
      status = SolveStatus::feasible;
      break;
    }
    t_prev = t;
  }
  if (status == SolveStatus::max_iter && std::isfinite(snap.t)) {
    status = SolveStatus::feasible;
  }

  auto out = finalize(s, ch, setup, pairing, status, snap, outer, inner_total,
                      std::move(t_history));
  if (out.report.achieved_sinr.size() == s.k &&
      out.report.achieved_sinr.minCoeff() > 0.0) {
    out.report.t =
        (s.gamma.array() / out.report.achieved_sinr.array()).maxCoeff();
    if (out.report.status == SolveStatus::feasible) {
      const bool ok =
          (out.report.achieved_sinr.array() >= s.gamma.array() * (1.0 - 1e-4)).all() &&
          out.report.p_b <= s.p_b_max + 1e-8 && out.report.p_r <= s.p_r_max + 1e-8;
      if (!ok) out.report.status = SolveStatus::infeasible;
    }
  }
  return out;
}

std::vector<int> pair_subchannels(const HopCinr& cinr) {
  const Eigen::Index k = cinr.first_hop.size();
  if (k != cinr.second_hop.size() || k < 1) {
    throw InvalidInputError("pair_subchannels: mismatched scores");
  }
  const auto order2 = order_ascending(cinr.second_hop);
  std::vector<int> pairing(k);
  for (Eigen::Index r = 0; r < k; ++r) pairing[r] = order2[r];
  return pairing;
}

double pairing_power(const HopCinr& cinr, const std::vector<int>& rank_to_stream,
                     const Eigen::VectorXd& gamma) {
  const int k = int(gamma.size());
  const auto order1 = order_descending(cinr.first_hop);
  Eigen::VectorXd c1(k), c2(k);
  for (int r = 0; r < k; ++r) {
    const int stream = rank_to_stream[r];
    c1(stream) = cinr.first_hop(order1[r]);
    c2(stream) = cinr.second_hop(stream);
  }
  // min sum(p + q) s.t. p q C1 C2 / (1 + p C1 + q C2) >= gamma per stream
  const int num_vars = 2 * k;
  gp::Posynomial objective;
  for (int i = 0; i < num_vars; ++i) objective += gp::variable(num_vars, i);
  std::vector<gp::Posynomial> cons;
  for (int st = 0; st < k; ++st) {
    gp::Posynomial posy;
    posy += gamma(st) / (c1(st) * c2(st)) *
            (gp::variable(num_vars, st, -1.0) *
             gp::variable(num_vars, k + st, -1.0));
    posy += gp::variable(num_vars, k + st, -1.0, gamma(st) / c2(st));
    posy += gp::variable(num_vars, st, -1.0, gamma(st) / c1(st));
    cons.push_back(std::move(posy));
  }
  const auto sol = gp::solve(gp::make_min_problem(num_vars, objective, std::move(cons)));
  if (sol.status != gp::GpStatus::optimal) {
    throw NumericFailureError("pairing_power: allocation did not solve");
  }
  return sol.variables.head(num_vars).sum();
}

double multihop_sinr(std::span<const double> per_hop_sinrs) {
  double acc = kInf;
  for (double s : per_hop_sinrs) {
    if (s < 0.0) throw InvalidInputError("multihop_sinr: negative input");
    if (std::isinf(acc)) {
      acc = s;
    } else if (!std::isinf(s)) {
      acc = acc * s / (1.0 + acc + s);
    }
    // an infinite hop leaves the accumulated value unchanged
  }
  return acc;
}

namespace {

int station_count(const MultihopProblem& mp) {
  return int(mp.p_r_max.size()) + 1;
}

// Accumulated inverse SINR through the point-to-point hops as a posynomial;
// station j's powers occupy variables [j*k, (j+1)*k).
gp::Posynomial accumulated_inverse(const MultihopProblem& mp, int num_vars,
                                   int stream) {
  const int k = int(mp.gamma.size());
  gp::Posynomial inv;
  for (size_t j = 0; j < mp.hop_lambda.size(); ++j) {
    const double lam = mp.hop_lambda[j](stream);
    const gp::Monomial m = gp::variable(
        num_vars, int(j) * k + stream, -1.0, mp.sigma_r_sq / (lam * lam));
    if (inv.terms.empty()) {
      inv += m;
    } else {
      gp::Posynomial next = inv * m;
      next += inv;
      next += m;
      inv = std::move(next);
    }
  }
  return inv;
}

gp::Posynomial broadcast_inverse(const MultihopProblem& mp, int num_vars,
                                 int stream) {
  const int k = int(mp.gamma.size());
  const int offset = (station_count(mp) - 1) * k;
  const double own = std::norm(mp.g_hat(stream, stream));
  gp::Posynomial b;
  for (int i = 0; i < k; ++i) {
    if (i == stream) continue;
    b += std::norm(mp.g_hat(stream, i)) / own *
         (gp::variable(num_vars, offset + i) *
          gp::variable(num_vars, offset + stream, -1.0));
  }
  b += gp::variable(num_vars, offset + stream, -1.0,
                    mp.sigma_k_sq(stream) / own);
  return b;
}

gp::Posynomial end_to_end_inverse(const MultihopProblem& mp, int num_vars,
                                  int stream) {
  const gp::Posynomial inv = accumulated_inverse(mp, num_vars, stream);
  const gp::Posynomial b = broadcast_inverse(mp, num_vars, stream);
  if (inv.terms.empty()) return b;  // no point-to-point hops
  gp::Posynomial total = inv * b;
  total += inv;
  total += b;
  return total;
}

std::vector<gp::Posynomial> station_caps(const MultihopProblem& mp, int num_vars) {
  const int k = int(mp.gamma.size());
  std::vector<gp::Posynomial> cons;
  cons.push_back(sum_cap(num_vars, 0, k, mp.p_b_max));
  for (size_t n = 0; n < mp.p_r_max.size(); ++n) {
    cons.push_back(sum_cap(num_vars, int(n + 1) * k, k, mp.p_r_max[n]));
  }
  return cons;
}

MultihopGpResult read_stations(const MultihopProblem& mp,
                               const gp::GpSolution& sol) {
  const int k = int(mp.gamma.size());
  MultihopGpResult res;
  res.status = sol.status;
  for (int j = 0; j < station_count(mp); ++j) {
    res.station_powers.push_back(sol.variables.segment(j * k, k));
  }
  return res;
}

}  // namespace

MultihopGpResult multihop_feasibility_gp(const MultihopProblem& mp) {
  check_diag(mp.g_hat);
  const int k = int(mp.gamma.size());
  const int num_vars = station_count(mp) * k + 1;
  const int t_index = num_vars - 1;
  std::vector<gp::Posynomial> cons;
  for (int u = 0; u < k; ++u) {
    gp::Posynomial posy = end_to_end_inverse(mp, num_vars, u) *
                          gp::variable(num_vars, t_index, -1.0, mp.gamma(u));
    cons.push_back(std::move(posy));
  }
  for (auto& c : station_caps(mp, num_vars)) cons.push_back(std::move(c));

  gp::GpProblem prob;
  prob.num_vars = num_vars;
  prob.objective = gp::variable(num_vars, t_index);
  prob.constraints = std::move(cons);
  const auto sol = gp::solve(prob);
  auto res = read_stations(mp, sol);
  res.objective = sol.variables(t_index);
  return res;
}

MultihopGpResult multihop_minpower_gp(const MultihopProblem& mp) {
  check_diag(mp.g_hat);
  const int k = int(mp.gamma.size());
  const int num_vars = station_count(mp) * k;
  gp::Posynomial objective;
  for (int i = 0; i < num_vars; ++i) objective += gp::variable(num_vars, i);
  std::vector<gp::Posynomial> cons;
  for (int u = 0; u < k; ++u) {
    gp::Posynomial posy = end_to_end_inverse(mp, num_vars, u) *
                          gp::constant(num_vars, mp.gamma(u));
    cons.push_back(std::move(posy));
  }
  for (auto& c : station_caps(mp, num_vars)) cons.push_back(std::move(c));

  const auto sol = gp::solve(gp::make_min_problem(num_vars, objective, std::move(cons)));
  auto res = read_stations(mp, sol);
  res.objective = 0.0;
  for (const auto& block : res.station_powers) res.objective += block.sum();
  return res;
}

std::vector<std::vector<int>> multihop_pairing(
    const std::vector<Eigen::VectorXd>& cinr_per_hop) {
  if (cinr_per_hop.empty()) {
    throw InvalidInputError("multihop_pairing: no hops");
  }
  const Eigen::Index k = cinr_per_hop.front().size();
  Eigen::VectorXd acc = cinr_per_hop.front();  // chain c starts on subchannel c
  std::vector<std::vector<int>> perms;
  for (size_t h = 1; h < cinr_per_hop.size(); ++h) {
    const auto rank_of = order_descending(acc);
    const auto weakest = order_ascending(cinr_per_hop[h]);
    std::vector<int> perm(k);
    Eigen::VectorXd acc_next(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const int chain = rank_of[r];
      const int assigned = weakest[r];
      perm[r] = assigned;
      const double hop = cinr_per_hop[h](assigned);
      acc_next(chain) = std::isinf(acc(chain))
                            ? hop
                            : acc(chain) * hop / (1.0 + acc(chain) + hop);
    }
    acc = acc_next;
    perms.push_back(std::move(perm));
  }
  return perms;
}

MultihopOutcome multihop_solve(const channel::MultihopScenario& ms,
                               bool minimize_power, const SvdOptions& opts,
                               const MultihopOutcome* warm) {
  ms.validate();
  const int k = ms.k;
  const int n_relays = ms.n_relays;
  if (int(ms.hop_channels.size()) != n_relays ||
      int(ms.p_r_max_per_hop.size()) != n_relays) {
    throw InvalidInputError("multihop_solve: inconsistent hop data");
  }
  if (k > ms.m_r) throw InvalidInputError("multihop_solve: needs k <= m_r");

  // per-hop singular values, canonical (descending) order
  std::vector<Eigen::VectorXd> hop_lambda_ranked;
  for (const auto& h : ms.hop_channels) {
    const auto dec = numerics::svd(h);
    Eigen::VectorXd lam = dec.sigma.head(k);
    if (lam(k - 1) < kRankFloor) {
      throw UnsupportedInstanceError("multihop_solve: rank deficient hop");
    }
    hop_lambda_ranked.push_back(std::move(lam));
  }

  const double broadcast_cap =
      n_relays > 0 ? ms.p_r_max_per_hop.back() : ms.p_b_max;

  MultihopProblem mp;
  mp.gamma = ms.gamma;
  mp.sigma_r_sq = ms.sigma_r_sq;
  mp.sigma_k_sq = ms.sigma_k_sq;
  mp.p_b_max = ms.p_b_max;
  mp.p_r_max = ms.p_r_max_per_hop;
  mp.hop_lambda = hop_lambda_ranked;  // identity assignment to start

  MultihopOutcome out;
  out.report.status = SolveStatus::max_iter;
  out.report.t = kInf;
  out.report.achieved_sinr = Eigen::VectorXd::Zero(k);

  // station powers: warm start when given, uniform otherwise
  std::vector<Eigen::VectorXd> powers;
  Eigen::VectorXd q_r;
  if (warm && int(warm->station_powers.size()) == n_relays + 1 &&
      warm->q_r.size() == k) {
    powers = warm->station_powers;
    q_r = warm->q_r;
  } else {
    powers.push_back(Eigen::VectorXd::Constant(k, ms.p_b_max / double(k)));
    for (int n = 0; n < n_relays; ++n) {
      powers.push_back(
          Eigen::VectorXd::Constant(k, ms.p_r_max_per_hop[n] / double(k)));
    }
    q_r = Eigen::VectorXd::Constant(k, broadcast_cap / double(k));
  }

  auto accumulated_alpha = [&](const std::vector<Eigen::VectorXd>& pw) {
    Eigen::VectorXd alpha(k);
    for (int u = 0; u < k; ++u) {
      std::vector<double> hops;
      for (int j = 0; j < n_relays; ++j) {
        const double lam = mp.hop_lambda[j](u);
        hops.push_back(pw[j](u) * lam * lam / ms.sigma_r_sq);
      }
      alpha(u) = multihop_sinr(hops);
    }
    return alpha;
  };

  // pairing bootstrap, accumulated-score heuristic
  if (opts.pairing != PairingMode::off && n_relays > 0) {
    const Eigen::VectorXd alpha0 = accumulated_alpha(powers);
    const Eigen::MatrixXcd a0 = beamformers(ms.g, alpha0, q_r, ms.sigma_k_sq);
    const Eigen::MatrixXcd g_hat0 = effective_gains(ms.g, a0);
    std::vector<Eigen::VectorXd> scores;
    for (const auto& lam : hop_lambda_ranked) {
      scores.push_back(lam / ms.sigma_r_sq);
    }
    scores.push_back(broadcast_cinr(g_hat0, ms.sigma_k_sq));
    out.pairing = multihop_pairing(scores);

    // replay the chain assignments to map users to per-hop subchannels
    Eigen::VectorXd acc = scores.front();
    std::vector<std::vector<int>> chain_sub;
    chain_sub.resize(size_t(n_relays));
    chain_sub[0] = identity_perm(k);
    std::vector<int> user_of_chain(k);
    for (size_t h = 1; h < scores.size(); ++h) {
      const auto rank_of = order_descending(acc);
      const auto& perm = out.pairing[h - 1];
      Eigen::VectorXd acc_next(k);
      for (int r = 0; r < k; ++r) {
        const int chain = rank_of[r];
        const int assigned = perm[r];
        if (h < scores.size() - 1) {
          chain_sub[h].resize(k);
          chain_sub[h][chain] = assigned;
        } else {
          user_of_chain[chain] = assigned;
        }
        const double hop = scores[h](assigned);
        acc_next(chain) = std::isinf(acc(chain))
                              ? hop
                              : acc(chain) * hop / (1.0 + acc(chain) + hop);
      }
      acc = acc_next;
    }
    for (int j = 0; j < n_relays; ++j) {
      Eigen::VectorXd lam(k);
      for (int chain = 0; chain < k; ++chain) {
        lam(user_of_chain[chain]) = hop_lambda_ranked[j](chain_sub[j][chain]);
      }
      mp.hop_lambda[j] = lam;
    }
  }

  std::vector<double> t_history;
  int inner_total = 0;
  int outer = 0;
  double t_prev = kInf;
  double best_t = kInf;
  SolveStatus status = SolveStatus::max_iter;
  Eigen::MatrixXcd a;
  Eigen::MatrixXcd g_hat;
  double c_u = 0.0;

  while (outer < kOuterCap) {
    ++outer;
    try {
      double conv_prev = std::numeric_limits<double>::quiet_NaN();
      for (int m = 0; m < kInnerCap; ++m) {
        const Eigen::VectorXd alpha = accumulated_alpha(powers);
        a = beamformers(ms.g, alpha, q_r, ms.sigma_k_sq);
        g_hat = effective_gains(ms.g, a);
        mp.g_hat = g_hat;
        double conv;
        if (minimize_power) {
          q_r = uplink_minpower(g_hat, alpha, ms.gamma, ms.sigma_k_sq);
          conv = q_r.sum();
        } else {
          const auto bal =
              uplink_balance(g_hat, alpha, ms.gamma, ms.sigma_k_sq, broadcast_cap);
          q_r = bal.q_r;
          c_u = bal.c_u;
          conv = c_u;
        }
        ++inner_total;
        if (m > 0 && std::abs(conv - conv_prev) < kEps * std::max(1.0, std::abs(conv_prev))) {
          break;
        }
        conv_prev = conv;
      }
    } catch (const NumericFailureError&) {
      out.report.status = SolveStatus::infeasible;
      return out;
    } catch (const InfeasibleAllocationError&) {
      out.report.status = SolveStatus::infeasible;
      return out;
    }

    const auto gpres =
        minimize_power ? multihop_minpower_gp(mp) : multihop_feasibility_gp(mp);
    if (gpres.status == gp::GpStatus::max_iter) {
      status = SolveStatus::max_iter;
      break;
    }
    if (gpres.status == gp::GpStatus::infeasible) {
      status = SolveStatus::infeasible;
      break;
    }
    const double t = gpres.objective;
    if (t > best_t + 1e-12) {
      status = minimize_power || best_t <= 1.0 ? SolveStatus::feasible
                                               : SolveStatus::infeasible;
      break;
    }
    best_t = t;
    powers = gpres.station_powers;
    out.station_powers = powers;
    out.a = a;
    t_history.push_back(t);

    if (!minimize_power && t <= 1.0) {
      status = SolveStatus::feasible;
      break;
    }
    if (std::abs(t - t_prev) < kEps * std::max(1.0, t_prev)) {
      status = minimize_power ? SolveStatus::feasible : SolveStatus::infeasible;
      break;
    }
    t_prev = t;
  }
  if (status == SolveStatus::max_iter && std::isfinite(best_t) &&
      (minimize_power || best_t <= 1.0)) {
    status = SolveStatus::feasible;
  }

  out.report.status = status;
  out.report.outer_iterations = outer;
  out.report.inner_iterations = inner_total;
  out.report.t_history = std::move(t_history);
  out.report.balanced_level = c_u;
  out.q_r = q_r;
  if (!out.station_powers.empty()) {
    // model-exact end-to-end SINRs at the final powers
    const Eigen::VectorXd alpha = accumulated_alpha(out.station_powers);
    const auto& bc = out.station_powers.back();
    Eigen::VectorXd sinr(k);
    for (int u = 0; u < k; ++u) {
      double denom = ms.sigma_k_sq(u);
      for (int i = 0; i < k; ++i) {
        if (i != u) denom += bc(i) * std::norm(mp.g_hat(u, i));
      }
      const double beta = bc(u) * std::norm(mp.g_hat(u, u)) / denom;
      const double hops[2] = {alpha(u), beta};
      sinr(u) = multihop_sinr(hops);
    }
    out.report.achieved_sinr = sinr;
    out.report.p_b = out.station_powers.front().sum();
    out.report.sum_power = 0.0;
    for (const auto& block : out.station_powers) {
      out.report.sum_power += block.sum();
    }
    out.report.p_r = out.report.sum_power - out.report.p_b;
    out.report.t = minimize_power
                       ? (ms.gamma.array() / sinr.array()).maxCoeff()
                       : best_t;
  }
  return out;
}

}  // namespace relaybf::svd_relay
