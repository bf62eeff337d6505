#pragma once

#include <Eigen/Dense>
#include <utility>

#include "relaybf/channel.hpp"
#include "relaybf/gp.hpp"
#include "relaybf/report.hpp"

// Amplify-and-forward relaying: the RS applies a common power gain g_r to
// every antenna, BS beamformers come from the virtual uplink, and all power
// allocation is done by geometric programming and Perron eigensystems.
namespace relaybf::af {

// Complete set of design variables for the AF scheme.  g_r is the power
// (not amplitude) gain; the relay matrix is Q = sqrt(g_r) * I.
struct AfDesign {
  Eigen::MatrixXcd w;   // m_b x k, unit-norm columns
  Eigen::VectorXd p;    // BS downlink powers
  double g_r = 1.0;
  Eigen::VectorXd q;    // virtual-uplink powers
};

// Scalar channels seen once the BS beamformers are fixed.
struct AfEffectiveChannel {
  Eigen::MatrixXcd h_hat;       // h_hat(x, y) = g_x^H H w_y
  Eigen::MatrixXcd h_r;         // H W, source-to-RS equivalent channel
  Eigen::VectorXd sigma_hat_sq; // g_r sigma_r^2 ||g_k||^2 + sigma_k^2
};

struct AfOutcome {
  SolveReport report;
  AfDesign design;
};

Eigen::MatrixXcd relay_matrix(int m_r, double g_r);

AfEffectiveChannel effective_channel(const channel::Scenario& s,
                                     const channel::ChannelRealization& ch,
                                     const Eigen::MatrixXcd& w, double g_r);

/// Per-user BS beamformers as dominant generalized eigenvectors of the
/// noise-normalized virtual-uplink covariances.
Eigen::MatrixXcd beamformers(const channel::Scenario& s,
                             const channel::ChannelRealization& ch,
                             double g_r, const Eigen::VectorXd& q);

/// Extended coupling matrix of the uplink balancing eigensystem.  With
/// transpose_psi=false the same ingredients describe the downlink problem,
/// which is what the duality checks compare against.
Eigen::MatrixXd extended_coupling(const Eigen::MatrixXcd& h_hat, double g_r,
                                  const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& noise,
                                  double power_cap, bool transpose_psi = true);

struct BalanceResult {
  double c_u = 0.0;      // common value of SINR_k^U / gamma_k
  Eigen::VectorXd q;     // powers, sum equals the cap
};

/// Max-min uplink power balancing under a sum power cap via the Perron
/// eigenpair of the extended coupling matrix.
BalanceResult uplink_balance(const Eigen::MatrixXcd& h_hat, double g_r,
                             const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& noise, double p_b_max);

struct GpPowerResult {
  double objective = 0.0;  // t for the feasibility problem, sum power otherwise
  Eigen::VectorXd p;
  double g_r = 1.0;
  gp::GpStatus status = gp::GpStatus::optimal;
};

GpPowerResult feasibility_gp(const channel::Scenario& s,
                             const AfEffectiveChannel& eff,
                             const channel::ChannelRealization& ch);

GpPowerResult minpower_gp(const channel::Scenario& s,
                          const AfEffectiveChannel& eff,
                          const channel::ChannelRealization& ch);

/// Exact-target uplink powers q = (I - D Psi^T)^{-1} D sigma; requires the
/// spectral radius of D Psi^T to be below one.
Eigen::VectorXd uplink_minpower(const Eigen::MatrixXcd& h_hat, double g_r,
                                const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& noise);

/// Two-loop feasibility test: beamformer/uplink-balance fixed point inside,
/// downlink GP outside, until t <= 1 or the objective stops improving.
AfOutcome feasibility(const channel::Scenario& s,
                      const channel::ChannelRealization& ch);

/// Sum-power minimization warm-started from a passed feasibility run.
AfOutcome minimize(const channel::Scenario& s,
                   const channel::ChannelRealization& ch,
                   const AfDesign& warm);

}  // namespace relaybf::af
