#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "relaybf/channel.hpp"
#include "relaybf/gp.hpp"
#include "relaybf/report.hpp"

// SVD relaying: the RS receive-beamforms along the first hop's singular
// vectors, normalizes each stream, re-allocates power and transmit-beamforms
// per stream.  Duality is applied at the RS side.
namespace relaybf::svd_relay {

struct SvdDesign {
  Eigen::MatrixXcd u;        // m_r x k leading left singular vectors of H
  Eigen::MatrixXcd v;        // m_b x k leading right singular vectors
  Eigen::VectorXd lambda;    // k leading singular values, descending
  Eigen::MatrixXcd a;        // m_r x k unit-norm RS transmit beamformers
  Eigen::VectorXd p;         // BS powers per stream
  Eigen::VectorXd p_r;       // RS downlink powers
  Eigen::VectorXd q_r;       // virtual uplink powers
  Eigen::VectorXd eps;       // per-stream receive normalization factors
  std::vector<int> pairing;  // rank r -> stream, identity when pairing is off
};

struct SvdEffectiveChannel {
  Eigen::MatrixXcd g_hat;  // g_hat(k, i) = g_k^H a_i
  Eigen::VectorXd alpha;   // first-hop per-stream SINRs
  Eigen::VectorXd chi;     // spatial separability ratios, +inf when decoupled
};

// Per-stream channel quality scores used by subchannel pairing.
struct HopCinr {
  Eigen::VectorXd first_hop;
  Eigen::VectorXd second_hop;
};

enum class PairingMode { off, heuristic, exhaustive };

struct SvdOptions {
  PairingMode pairing = PairingMode::off;
};

struct SvdOutcome {
  SolveReport report;
  SvdDesign design;
};

/// Singular values per stream once the rank->stream pairing is applied.
Eigen::VectorXd stream_lambda(const Eigen::VectorXd& lambda,
                              const std::vector<int>& pairing);

/// Receive normalization factors of the per-stream power scaling.
Eigen::VectorXd normalization_eps(const Eigen::VectorXd& lambda_stream,
                                  const Eigen::VectorXd& p, double sigma_r_sq);

/// Builds the precoder pair (F, Q) realized by a design; feeding these to
/// channel::verify_sinr reproduces the scheme's SINR model exactly.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> precoders(
    const channel::Scenario& s, const SvdDesign& d);

/// RS transmit beamformers from the virtual uplink; alpha entries may be
/// +inf, which removes the first-hop noise terms.
Eigen::MatrixXcd beamformers(const std::vector<Eigen::VectorXcd>& g,
                             const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& q_r,
                             const Eigen::VectorXd& sigma_k_sq);

Eigen::MatrixXcd effective_gains(const std::vector<Eigen::VectorXcd>& g,
                                 const Eigen::MatrixXcd& a);

Eigen::MatrixXd extended_coupling(const Eigen::MatrixXcd& g_hat,
                                  const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& sigma_k_sq,
                                  double p_r_max, bool transpose_psi = true);

struct BalanceResult {
  double c_u = 0.0;
  Eigen::VectorXd q_r;
};

BalanceResult uplink_balance(const Eigen::MatrixXcd& g_hat,
                             const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& sigma_k_sq, double p_r_max);

struct SvdGpResult {
  double objective = 0.0;
  Eigen::VectorXd p;
  Eigen::VectorXd p_r;
  gp::GpStatus status = gp::GpStatus::optimal;
};

SvdGpResult feasibility_gp(const Eigen::VectorXd& lambda_stream,
                           const Eigen::MatrixXcd& g_hat,
                           const Eigen::VectorXd& gamma, double sigma_r_sq,
                           const Eigen::VectorXd& sigma_k_sq, double p_b_max,
                           double p_r_max);

SvdGpResult minpower_gp(const Eigen::VectorXd& lambda_stream,
                        const Eigen::MatrixXcd& g_hat,
                        const Eigen::VectorXd& gamma, double sigma_r_sq,
                        const Eigen::VectorXd& sigma_k_sq, double p_b_max,
                        double p_r_max);

/// Exact-target uplink powers q^r = [I - (D Psi^T + E)]^{-1} D sigma.
Eigen::VectorXd uplink_minpower(const Eigen::MatrixXcd& g_hat,
                                const Eigen::VectorXd& alpha,
                                const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& sigma_k_sq);

/// Per-user sufficient condition for a positive uplink power solution;
/// conservative, never necessary.
std::vector<bool> sufficient_condition(const Eigen::MatrixXcd& g_hat,
                                       const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& gamma);

Eigen::VectorXd separability_chi(const Eigen::MatrixXcd& g_hat);

SvdOutcome feasibility(const channel::Scenario& s,
                       const channel::ChannelRealization& ch,
                       const SvdOptions& opts = {});

SvdOutcome minimize(const channel::Scenario& s,
                    const channel::ChannelRealization& ch,
                    const SvdDesign& warm);

/// Heuristic pairing: the rank-r strongest first-hop subchannel feeds the
/// stream with the r-th weakest second-hop score; ties keep original order.
std::vector<int> pair_subchannels(const HopCinr& cinr);

/// Total power of the coupling-free two-hop allocation under a given
/// rank->stream assignment; used to score and analyze pairings.
double pairing_power(const HopCinr& cinr, const std::vector<int>& rank_to_stream,
                     const Eigen::VectorXd& gamma);

/// Folds per-hop SINRs of a normalized non-regenerative chain into the
/// end-to-end SINR.
double multihop_sinr(std::span<const double> per_hop_sinrs);

// ---- multi-hop generalization -------------------------------------------

// Power allocation view of a relay chain: per-hop subchannel gains after
// pairing, the final-hop effective gains, and per-station caps.
struct MultihopProblem {
  std::vector<Eigen::VectorXd> hop_lambda;  // one per point-to-point hop
  Eigen::MatrixXcd g_hat;
  Eigen::VectorXd gamma;
  double sigma_r_sq = 1.0;
  Eigen::VectorXd sigma_k_sq;
  double p_b_max = 1.0;
  std::vector<double> p_r_max;  // one per relay
};

struct MultihopGpResult {
  double objective = 0.0;
  // station 0 is the BS, stations 1..N the relays; the last station's
  // powers drive the broadcast hop
  std::vector<Eigen::VectorXd> station_powers;
  gp::GpStatus status = gp::GpStatus::optimal;
};

MultihopGpResult multihop_feasibility_gp(const MultihopProblem& mp);
MultihopGpResult multihop_minpower_gp(const MultihopProblem& mp);

/// Chain-to-subchannel assignments per hop by accumulated-score pairing.
/// cinr_per_hop holds the point-to-point hop scores followed by the
/// broadcast-hop scores; returns one rank->stream permutation per entry
/// after the first.
std::vector<std::vector<int>> multihop_pairing(
    const std::vector<Eigen::VectorXd>& cinr_per_hop);

struct MultihopOutcome {
  SolveReport report;
  std::vector<Eigen::VectorXd> station_powers;
  Eigen::VectorXd q_r;  // virtual uplink powers at the broadcast station
  Eigen::MatrixXcd a;
  std::vector<std::vector<int>> pairing;  // per-hop assignments when enabled
};

/// Table-style iterative driver generalized to a relay chain; hops == 1
/// degenerates to the relay-free broadcast design.  Minimization runs are
/// warm-started from a passed feasibility outcome.
MultihopOutcome multihop_solve(const channel::MultihopScenario& ms,
                               bool minimize_power,
                               const SvdOptions& opts = {},
                               const MultihopOutcome* warm = nullptr);

}  // namespace relaybf::svd_relay
