#include "relaybf/af.hpp"

#include <cmath>
#include <limits>

#include "relaybf/errors.hpp"
#include "relaybf/numerics.hpp"

namespace relaybf::af {

namespace {

constexpr double kEps = 1e-3;       // convergence threshold for all loops
constexpr int kInnerCap = 200;
constexpr int kOuterCap = 50;
constexpr double kDiagFloor = 1e-12;

using numerics::ComplexMatrix;
using numerics::ComplexVector;
using numerics::RealMatrix;
using numerics::RealVector;

bool degenerate_diag(const ComplexMatrix& h_hat) {
  for (Eigen::Index k = 0; k < h_hat.rows(); ++k) {
    if (std::abs(h_hat(k, k)) < kDiagFloor) return true;
  }
  return false;
}

// D, Psi and noise of the balancing eigensystem.  The relay power gain is
// folded into the coupling entries so the system balances the uplink SINRs
// with amplified interference.
struct CouplingParts {
  RealMatrix d;    // diagonal
  RealMatrix psi;  // zero diagonal
  RealVector d_sigma;
};

CouplingParts coupling_parts(const ComplexMatrix& h_hat, double g_r,
                             const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& noise) {
  const Eigen::Index k = h_hat.rows();
  if (degenerate_diag(h_hat)) {
    throw NumericFailureError("af coupling: user orthogonal to its own beam");
  }
  CouplingParts parts;
  parts.d = RealMatrix::Zero(k, k);
  parts.psi = RealMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    parts.d(i, i) = gamma(i) / (g_r * std::norm(h_hat(i, i)));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) parts.psi(i, j) = g_r * std::norm(h_hat(i, j));
    }
  }
  parts.d_sigma = parts.d.diagonal().cwiseProduct(noise);
  return parts;
}

double user_gain_sq(const channel::ChannelRealization& ch, int u) {
  return ch.g[u].squaredNorm();
}

// Inverse-SINR posynomial of user k over variables [p_1..p_K, g_r, (t)];
// the common g_r factor cancels everywhere except against the local noise.
gp::Posynomial inverse_sinr_constraint(const channel::Scenario& s,
                                       const AfEffectiveChannel& eff,
                                       const channel::ChannelRealization& ch,
                                       int num_vars, int k, int t_index) {
  const int n = s.k;
  const double own = std::norm(eff.h_hat(k, k));
  gp::Posynomial posy;
  for (int i = 0; i < n; ++i) {
    if (i == k) continue;
    gp::Monomial m = gp::variable(num_vars, i);
    m = (s.gamma(k) * std::norm(eff.h_hat(k, i)) / own) * m;
    m = m * gp::variable(num_vars, k, -1.0);
    if (t_index >= 0) m = m * gp::variable(num_vars, t_index, -1.0);
    posy += m;
  }
  {
    gp::Monomial m = gp::variable(num_vars, k, -1.0,
                                  s.gamma(k) * s.sigma_r_sq * user_gain_sq(ch, k) / own);
    if (t_index >= 0) m = m * gp::variable(num_vars, t_index, -1.0);
    posy += m;
  }
  {
    gp::Monomial m = gp::variable(num_vars, k, -1.0,
                                  s.gamma(k) * s.sigma_k_sq(k) / own);
    m = m * gp::variable(num_vars, n, -1.0);  // 1/g_r
    if (t_index >= 0) m = m * gp::variable(num_vars, t_index, -1.0);
    posy += m;
  }
  return posy;
}

gp::Posynomial bs_power_constraint(const channel::Scenario& s, int num_vars) {
  gp::Posynomial posy;
  for (int i = 0; i < s.k; ++i) {
    posy += gp::variable(num_vars, i, 1.0, 1.0 / s.p_b_max);
  }
  return posy;
}

// RS transmit power g_r (sum_k p_k ||H w_k||^2 + m_r sigma_r^2) <= cap.
gp::Posynomial rs_power_posy(const channel::Scenario& s,
                             const AfEffectiveChannel& eff, int num_vars,
                             double scale) {
  gp::Posynomial posy;
  for (int i = 0; i < s.k; ++i) {
    gp::Monomial m = gp::variable(num_vars, i, 1.0,
                                  scale * eff.h_r.col(i).squaredNorm());
    posy += m * gp::variable(num_vars, s.k);
  }
  posy += gp::variable(num_vars, s.k, 1.0, scale * double(s.m_r) * s.sigma_r_sq);
  return posy;
}

struct DriverSnapshot {
  Eigen::MatrixXcd w;
  AfEffectiveChannel eff;
  Eigen::VectorXd q;
  double c_u = 0.0;
  Eigen::VectorXd p;
  double g_r = 1.0;
  double t = std::numeric_limits<double>::infinity();
};

AfOutcome finalize(const channel::Scenario& s,
                   const channel::ChannelRealization& ch,
                   SolveStatus status, const DriverSnapshot& snap,
                   int outer, int inner, std::vector<double> t_history) {
  AfOutcome out;
  out.design = AfDesign{snap.w, snap.p, snap.g_r, snap.q};
  out.report.status = status;
  out.report.t = snap.t;
  out.report.balanced_level = snap.c_u;
  out.report.outer_iterations = outer;
  out.report.inner_iterations = inner;
  out.report.t_history = std::move(t_history);
  if (snap.p.size() == s.k && (snap.p.array() > 0.0).all()) {
    const Eigen::MatrixXcd f =
        snap.w * snap.p.array().sqrt().matrix().asDiagonal();
    const auto rep = channel::verify_sinr(s, ch, f, relay_matrix(s.m_r, snap.g_r));
    out.report.achieved_sinr = rep.sinr;
    out.report.p_b = rep.p_b;
    out.report.p_r = rep.p_r;
    out.report.sum_power = rep.p_b + rep.p_r;
  }
  return out;
}

AfOutcome degenerate_outcome(const channel::Scenario& s) {
  AfOutcome out;
  out.report.status = SolveStatus::infeasible;
  out.report.t = std::numeric_limits<double>::infinity();
  out.report.achieved_sinr = Eigen::VectorXd::Zero(s.k);
  return out;
}

}  // namespace

Eigen::MatrixXcd relay_matrix(int m_r, double g_r) {
  return std::sqrt(g_r) * Eigen::MatrixXcd::Identity(m_r, m_r);
}

AfEffectiveChannel effective_channel(const channel::Scenario& s,
                                     const channel::ChannelRealization& ch,
                                     const Eigen::MatrixXcd& w, double g_r) {
  AfEffectiveChannel eff;
  eff.h_r = ch.h * w;
  eff.h_hat.resize(s.k, s.k);
  for (int x = 0; x < s.k; ++x) {
    eff.h_hat.row(x) = ch.g[x].adjoint() * eff.h_r;
  }
  eff.sigma_hat_sq.resize(s.k);
  for (int u = 0; u < s.k; ++u) {
    eff.sigma_hat_sq(u) = g_r * s.sigma_r_sq * user_gain_sq(ch, u) + s.sigma_k_sq(u);
  }
  return eff;
}

Eigen::MatrixXcd beamformers(const channel::Scenario& s,
                             const channel::ChannelRealization& ch,
                             double g_r, const Eigen::VectorXd& q) {
  if (q.size() != s.k || (q.array() <= 0.0).any() || g_r <= 0.0) {
    throw InvalidInputError("af::beamformers: powers must be positive");
  }
  std::vector<ComplexVector> h_tilde(s.k);
  Eigen::VectorXd sigma_hat_sq(s.k);
  const double amp = std::sqrt(g_r);
  for (int u = 0; u < s.k; ++u) {
    h_tilde[u] = amp * (ch.h.adjoint() * ch.g[u]);
    sigma_hat_sq(u) = g_r * s.sigma_r_sq * user_gain_sq(ch, u) + s.sigma_k_sq(u);
  }
  Eigen::MatrixXcd w(s.m_b, s.k);
  for (int u = 0; u < s.k; ++u) {
    ComplexMatrix rn = ComplexMatrix::Identity(s.m_b, s.m_b);
    for (int i = 0; i < s.k; ++i) {
      if (i == u) continue;
      rn += (q(i) / sigma_hat_sq(i)) * (h_tilde[i] * h_tilde[i].adjoint());
    }
    const auto eig =
        numerics::dominant_gen_eigvec(h_tilde[u], q(u) / sigma_hat_sq(u), rn);
    w.col(u) = eig.vector.normalized();
  }
  return w;
}

Eigen::MatrixXd extended_coupling(const Eigen::MatrixXcd& h_hat, double g_r,
                                  const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& noise,
                                  double power_cap, bool transpose_psi) {
  const auto parts = coupling_parts(h_hat, g_r, gamma, noise);
  const Eigen::Index k = h_hat.rows();
  const RealMatrix coupling =
      transpose_psi ? RealMatrix(parts.d * parts.psi.transpose())
                    : RealMatrix(parts.d * parts.psi);
  RealMatrix ext(k + 1, k + 1);
  ext.topLeftCorner(k, k) = coupling;
  ext.topRightCorner(k, 1) = parts.d_sigma;
  ext.bottomLeftCorner(1, k) = coupling.colwise().sum() / power_cap;
  ext(k, k) = parts.d_sigma.sum() / power_cap;
  return ext;
}

BalanceResult uplink_balance(const Eigen::MatrixXcd& h_hat, double g_r,
                             const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& noise, double p_b_max) {
  const Eigen::Index k = h_hat.rows();
  const auto ext = extended_coupling(h_hat, g_r, gamma, noise, p_b_max);
  const auto pf = numerics::perron(ext);
  if ((pf.vector.array() <= 0.0).any() || pf.value <= 0.0) {
    throw NumericFailureError("af::uplink_balance: degenerate Perron vector");
  }
  BalanceResult res;
  res.c_u = 1.0 / pf.value;
  res.q = pf.vector.head(k) / pf.vector(k);
  return res;
}

GpPowerResult feasibility_gp(const channel::Scenario& s,
                             const AfEffectiveChannel& eff,
                             const channel::ChannelRealization& ch) {
  const int num_vars = s.k + 2;  // p_1..p_K, g_r, t
  const int t_index = s.k + 1;
  std::vector<gp::Posynomial> cons;
  for (int k = 0; k < s.k; ++k) {
    cons.push_back(inverse_sinr_constraint(s, eff, ch, num_vars, k, t_index));
  }
  cons.push_back(bs_power_constraint(s, num_vars));
  cons.push_back(rs_power_posy(s, eff, num_vars, 1.0 / s.p_r_max));

  gp::GpProblem prob;
  prob.num_vars = num_vars;
  prob.objective = gp::variable(num_vars, t_index);
  prob.constraints = std::move(cons);
  const auto sol = gp::solve(prob);

  GpPowerResult res;
  res.status = sol.status;
  res.objective = sol.variables(t_index);
  res.p = sol.variables.head(s.k);
  res.g_r = sol.variables(s.k);
  return res;
}

GpPowerResult minpower_gp(const channel::Scenario& s,
                          const AfEffectiveChannel& eff,
                          const channel::ChannelRealization& ch) {
  const int num_vars = s.k + 2;  // p_1..p_K, g_r, t
  const int t_index = s.k + 1;
  std::vector<gp::Posynomial> cons;

  // P_b + P_r <= t
  gp::Posynomial total = bs_power_constraint(s, num_vars) *
                         gp::constant(num_vars, s.p_b_max);
  total += rs_power_posy(s, eff, num_vars, 1.0);
  cons.push_back(total / gp::variable(num_vars, t_index));

  for (int k = 0; k < s.k; ++k) {
    cons.push_back(inverse_sinr_constraint(s, eff, ch, num_vars, k, -1));
  }
  cons.push_back(bs_power_constraint(s, num_vars));
  cons.push_back(rs_power_posy(s, eff, num_vars, 1.0 / s.p_r_max));

  gp::GpProblem prob;
  prob.num_vars = num_vars;
  prob.objective = gp::variable(num_vars, t_index);
  prob.constraints = std::move(cons);
  const auto sol = gp::solve(prob);

  GpPowerResult res;
  res.status = sol.status;
  res.objective = sol.variables(t_index);
  res.p = sol.variables.head(s.k);
  res.g_r = sol.variables(s.k);
  return res;
}

Eigen::VectorXd uplink_minpower(const Eigen::MatrixXcd& h_hat, double g_r,
                                const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& noise) {
  const auto parts = coupling_parts(h_hat, g_r, gamma, noise);
  const RealMatrix coupling = parts.d * parts.psi.transpose();
  if (numerics::spectral_radius(coupling) >= 1.0) {
    throw InfeasibleAllocationError(
        "af::uplink_minpower: coupling spectral radius >= 1");
  }
  const Eigen::Index k = h_hat.rows();
  const RealMatrix m = RealMatrix::Identity(k, k) - coupling;
  Eigen::VectorXd q = numerics::solve_linear(m, parts.d_sigma);
  if ((q.array() <= 0.0).any()) {
    throw InfeasibleAllocationError("af::uplink_minpower: nonpositive power");
  }
  return q;
}

AfOutcome feasibility(const channel::Scenario& s,
                      const channel::ChannelRealization& ch) {
  s.validate();
  DriverSnapshot snap;
  snap.q = Eigen::VectorXd::Constant(s.k, s.p_b_max / double(s.k));
  snap.g_r = 1.0;

  std::vector<double> t_history;
  int inner_total = 0;
  int outer = 0;
  double t_prev = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::max_iter;

  Eigen::VectorXd q = snap.q;
  double g_r = snap.g_r;

  while (outer < kOuterCap) {
    ++outer;
    Eigen::MatrixXcd w;
    AfEffectiveChannel eff;
    double c_u = 0.0;
    double c_prev = std::numeric_limits<double>::quiet_NaN();
    try {
      for (int m = 0; m < kInnerCap; ++m) {
        w = beamformers(s, ch, g_r, q);
        eff = effective_channel(s, ch, w, g_r);
        const auto bal =
            uplink_balance(eff.h_hat, g_r, s.gamma, eff.sigma_hat_sq, s.p_b_max);
        q = bal.q;
        c_u = bal.c_u;
        ++inner_total;
        if (m > 0 && std::abs(c_u - c_prev) < kEps * std::max(1.0, std::abs(c_prev))) {
          break;
        }
        c_prev = c_u;
      }
    } catch (const NumericFailureError&) {
      return degenerate_outcome(s);
    }

    const auto gpres = feasibility_gp(s, eff, ch);
    if (gpres.status == gp::GpStatus::max_iter) {
      status = SolveStatus::max_iter;
      break;
    }
    const double t = gpres.objective;
    if (t > snap.t + 1e-12) {
      // no further improvement from the new beamformers; keep the best iterate
      status = snap.t <= 1.0 ? SolveStatus::feasible : SolveStatus::infeasible;
      break;
    }
    snap = DriverSnapshot{w, eff, q, c_u, gpres.p, gpres.g_r, t};
    g_r = gpres.g_r;
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
    // cap reached but the last accepted iterate already met the targets
    status = SolveStatus::feasible;
  }
  return finalize(s, ch, status, snap, outer, inner_total, std::move(t_history));
}

AfOutcome minimize(const channel::Scenario& s,
                   const channel::ChannelRealization& ch,
                   const AfDesign& warm) {
  s.validate();
  if (warm.q.size() != s.k || (warm.q.array() <= 0.0).any() || warm.g_r <= 0.0) {
    throw InvalidInputError("af::minimize: warm start must carry positive q, g_r");
  }
  Eigen::VectorXd q = warm.q;
  const double g_r = warm.g_r;  // frozen during the inner loop
  Eigen::MatrixXcd w;
  AfEffectiveChannel eff;
  int inner_total = 0;

  try {
    double sum_prev = q.sum();
    for (int m = 0; m < kInnerCap; ++m) {
      w = beamformers(s, ch, g_r, q);
      eff = effective_channel(s, ch, w, g_r);
      q = uplink_minpower(eff.h_hat, g_r, s.gamma, eff.sigma_hat_sq);
      ++inner_total;
      if (std::abs(q.sum() - sum_prev) < kEps * std::max(1.0, sum_prev)) break;
      sum_prev = q.sum();
    }
  } catch (const NumericFailureError&) {
    return degenerate_outcome(s);
  } catch (const InfeasibleAllocationError&) {
    return degenerate_outcome(s);
  }

  const auto gpres = minpower_gp(s, eff, ch);
  DriverSnapshot snap{w, eff, q, 0.0, gpres.p, gpres.g_r, 0.0};
  SolveStatus status = gpres.status == gp::GpStatus::optimal
                           ? SolveStatus::feasible
                           : (gpres.status == gp::GpStatus::max_iter
                                  ? SolveStatus::max_iter
                                  : SolveStatus::infeasible);
  auto out = finalize(s, ch, status, snap, 1, inner_total, {});
  out.report.sum_power = out.report.p_b + out.report.p_r;
  if (out.report.achieved_sinr.size() == s.k) {
    out.report.t = (s.gamma.array() / out.report.achieved_sinr.array()).maxCoeff();
    if (status == SolveStatus::feasible) {
      const bool ok =
          (out.report.achieved_sinr.array() >= s.gamma.array() * (1.0 - 1e-4)).all() &&
          out.report.p_b <= s.p_b_max + 1e-8 && out.report.p_r <= s.p_r_max + 1e-8;
      if (!ok) out.report.status = SolveStatus::infeasible;
    }
  }
  return out;
}

}  // namespace relaybf::af
