#pragma once

#include <string>
#include <vector>

#include "relaybf/channel.hpp"

namespace relaybf::config {

// Scenario plus the multi-hop extras a config file may carry.  SINR targets
// are written in dB in the file and converted to linear scale on load.
struct LoadedScenario {
  channel::Scenario scenario;
  int hops = 2;
  std::vector<double> p_r_max_hops;
};

/// Parses flat `key = value` text; arrays are bracketed, '#' starts a
/// comment.  Keys: m_b, m_r, k, gamma (dB), sigma_r_sq, sigma_k_sq,
/// p_b_max, p_r_max, d_bs_rs, d_rs_ms, eta, d0, hops, p_r_max_hops.
LoadedScenario parse_scenario(const std::string& text);

LoadedScenario load_scenario(const std::string& path);

}  // namespace relaybf::config
