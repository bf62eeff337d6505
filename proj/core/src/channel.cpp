#include "relaybf/channel.hpp"

#include <cmath>
#include <numbers>

#include "relaybf/errors.hpp"

namespace relaybf::channel {

void Scenario::validate() const {
  if (m_b < 1 || m_r < 1 || k < 1) {
    throw InvalidInputError("scenario: antenna and user counts must be >= 1");
  }
  if (gamma.size() != k || sigma_k_sq.size() != k || d_rs_ms.size() != k) {
    throw InvalidInputError("scenario: per-user arrays must have length k");
  }
  if ((gamma.array() <= 0.0).any() || (sigma_k_sq.array() <= 0.0).any() ||
      (d_rs_ms.array() <= 0.0).any() || sigma_r_sq <= 0.0 || p_b_max <= 0.0 ||
      p_r_max <= 0.0 || d_bs_rs <= 0.0 || d0 <= 0.0) {
    throw InvalidInputError("scenario: targets, variances, caps and distances must be positive");
  }
}

std::uint64_t CounterRng::next_u64() {
  // splitmix64: the counter walks a Weyl sequence, the mix scrambles it
  std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

std::complex<double> CounterRng::complex_gaussian() {
  // |z|^2 ~ Exp(1), phase uniform: unit-variance circularly symmetric
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

double path_loss(double d, double d0, double eta) {
  if (d <= 0.0 || d0 <= 0.0) {
    throw InvalidInputError("path_loss: distances must be positive");
  }
  return std::pow(d / d0, eta);
}

namespace {

Eigen::MatrixXcd draw_matrix(CounterRng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = scale * rng.complex_gaussian();
    }
  }
  return m;
}

}  // namespace

ChannelRealization generate(const Scenario& s, std::uint64_t seed) {
  s.validate();
  CounterRng rng(seed);
  ChannelRealization ch;
  ch.seed = seed;
  const double bs_rs_scale = 1.0 / std::sqrt(path_loss(s.d_bs_rs, s.d0, s.eta));
  ch.h = draw_matrix(rng, s.m_r, s.m_b, bs_rs_scale);
  ch.g.reserve(s.k);
  for (int u = 0; u < s.k; ++u) {
    const double scale = 1.0 / std::sqrt(path_loss(s.d_rs_ms(u), s.d0, s.eta));
    ch.g.push_back(draw_matrix(rng, s.m_r, 1, scale));
  }
  return ch;
}

MultihopScenario generate_multihop(const Scenario& s, int hops, std::uint64_t seed) {
  s.validate();
  if (hops < 1) throw InvalidInputError("generate_multihop: hops must be >= 1");
  if (s.m_b != s.m_r) {
    throw InvalidInputError("generate_multihop: point-to-point hops need m_b == m_r");
  }
  for (int u = 1; u < s.k; ++u) {
    if (s.d_rs_ms(u) != s.d_rs_ms(0)) {
      throw InvalidInputError("generate_multihop: users must share one distance");
    }
  }
  MultihopScenario ms;
  static_cast<Scenario&>(ms) = s;
  ms.n_relays = hops - 1;
  ms.seed = seed;
  const double total = s.d_bs_rs + s.d_rs_ms(0);
  const double hop_d = total / double(hops);
  ms.d_bs_rs = hop_d;
  ms.d_rs_ms.setConstant(s.k, hop_d);
  ms.p_r_max_per_hop.assign(ms.n_relays, s.p_r_max);

  CounterRng rng(seed);
  const double hop_scale = 1.0 / std::sqrt(path_loss(hop_d, s.d0, s.eta));
  for (int n = 0; n < ms.n_relays; ++n) {
    ms.hop_channels.push_back(draw_matrix(rng, s.m_r, s.m_r, hop_scale));
  }
  for (int u = 0; u < s.k; ++u) {
    ms.g.push_back(draw_matrix(rng, s.m_r, 1, hop_scale));
  }
  return ms;
}

SinrReport verify_sinr(const Scenario& s, const ChannelRealization& ch,
                       const Eigen::MatrixXcd& f, const Eigen::MatrixXcd& q) {
  if (ch.h.rows() != s.m_r || ch.h.cols() != s.m_b || int(ch.g.size()) != s.k) {
    throw InvalidInputError("verify_sinr: channel does not match scenario");
  }
  if (f.rows() != s.m_b || f.cols() != s.k || q.rows() != s.m_r || q.cols() != s.m_r) {
    throw InvalidInputError("verify_sinr: precoder dimensions mismatch");
  }
  SinrReport rep;
  rep.p_b = f.squaredNorm();  // Tr(F F^H)
  const Eigen::MatrixXcd hf = ch.h * f;
  rep.p_r = (q * hf).squaredNorm() + s.sigma_r_sq * q.squaredNorm();
  rep.sinr.resize(s.k);
  for (int u = 0; u < s.k; ++u) {
    const Eigen::RowVectorXcd gq = ch.g[u].adjoint() * q;  // g_k^H Q
    const Eigen::RowVectorXcd eff = gq * hf;               // per-stream gains
    const double signal = std::norm(eff(u));
    double denom = s.sigma_r_sq * gq.squaredNorm() + s.sigma_k_sq(u);
    for (int i = 0; i < s.k; ++i) {
      if (i != u) denom += std::norm(eff(i));
    }
    rep.sinr(u) = signal / denom;
  }
  return rep;
}

}  // namespace relaybf::channel
