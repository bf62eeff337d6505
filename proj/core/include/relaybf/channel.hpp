#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace relaybf::channel {

// One problem instance: geometry, noise, power caps and per-user SINR
// targets (linear scale).
struct Scenario {
  int m_b = 0;                  // BS antennas
  int m_r = 0;                  // RS antennas
  int k = 0;                    // users
  Eigen::VectorXd gamma;        // per-user SINR targets, linear
  double sigma_r_sq = 1.0;      // RS noise variance
  Eigen::VectorXd sigma_k_sq;   // per-user noise variances
  double p_b_max = 1.0;
  double p_r_max = 1.0;
  double d_bs_rs = 1.0;
  Eigen::VectorXd d_rs_ms;
  double eta = 4.0;             // path loss exponent
  double d0 = 1.0;              // reference distance

  void validate() const;        // throws InvalidInputError on bad fields
};

struct ChannelRealization {
  Eigen::MatrixXcd h;                 // m_r x m_b first hop
  std::vector<Eigen::VectorXcd> g;    // k vectors of length m_r, second hop
  std::uint64_t seed = 0;
};

// Chain of relays: n_relays point-to-point MIMO hops followed by the final
// broadcast hop to the users.  Carries one drawn set of hop channels.
struct MultihopScenario : Scenario {
  int n_relays = 0;
  std::vector<Eigen::MatrixXcd> hop_channels;  // n_relays square matrices
  std::vector<Eigen::VectorXcd> g;             // final-hop user vectors
  std::vector<double> p_r_max_per_hop;         // n_relays relay caps
  std::uint64_t seed = 0;
};

// Deterministic counter-based generator (splitmix64 output function);
// per-trial substreams come from seed ^ trial_index.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  std::complex<double> complex_gaussian();  // CN(0, 1)

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial) {
  return seed ^ trial;
}

double path_loss(double d, double d0, double eta);

/// Draws H and g_1..g_K with i.i.d. circularly symmetric complex Gaussian
/// entries; entry variance is the reciprocal distance-dependent path loss.
ChannelRealization generate(const Scenario& s, std::uint64_t seed);

/// Draws the hop chain for `hops` total hops (hops-1 relays) with stations
/// spaced uniformly over the scenario's BS-to-MS distance.
MultihopScenario generate_multihop(const Scenario& s, int hops, std::uint64_t seed);

struct SinrReport {
  Eigen::VectorXd sinr;
  double p_b = 0.0;
  double p_r = 0.0;
};

/// Ground-truth oracle: exact per-user SINR and station powers for an
/// arbitrary precoder pair (F at the BS, Q at the RS).
SinrReport verify_sinr(const Scenario& s, const ChannelRealization& ch,
                       const Eigen::MatrixXcd& f, const Eigen::MatrixXcd& q);

}  // namespace relaybf::channel
