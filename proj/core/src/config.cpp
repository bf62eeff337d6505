#include "relaybf/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "relaybf/errors.hpp"

namespace relaybf::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_values(const std::string& raw, const std::string& key) {
  std::string body = raw;
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') {
      throw InvalidInputError("config: unterminated array for " + key);
    }
    body = body.substr(1, body.size() - 2);
    for (auto& c : body) {
      if (c == ',') c = ' ';
    }
  }
  std::vector<double> out;
  std::istringstream in(body);
  double v;
  while (in >> v) out.push_back(v);
  if (out.empty()) {
    throw InvalidInputError("config: no value for " + key);
  }
  return out;
}

double scalar(const std::map<std::string, std::vector<double>>& kv,
              const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InvalidInputError("config: missing key " + key);
  if (it->second.size() != 1) {
    throw InvalidInputError("config: " + key + " must be a single value");
  }
  return it->second.front();
}

Eigen::VectorXd per_user(const std::map<std::string, std::vector<double>>& kv,
                         const std::string& key, int k) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InvalidInputError("config: missing key " + key);
  const auto& vals = it->second;
  Eigen::VectorXd out(k);
  if (int(vals.size()) == k) {
    for (int i = 0; i < k; ++i) out(i) = vals[i];
  } else if (vals.size() == 1) {
    out.setConstant(vals.front());
  } else {
    throw InvalidInputError("config: " + key + " must have 1 or k entries");
  }
  return out;
}

}  // namespace

LoadedScenario parse_scenario(const std::string& text) {
  std::map<std::string, std::vector<double>> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInputError("config: expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    kv[key] = parse_values(value, key);
  }

  LoadedScenario out;
  auto& s = out.scenario;
  s.m_b = int(scalar(kv, "m_b"));
  s.m_r = int(scalar(kv, "m_r"));
  s.k = int(scalar(kv, "k"));
  const Eigen::VectorXd gamma_db = per_user(kv, "gamma", s.k);
  s.gamma = Eigen::pow(10.0, gamma_db.array() / 10.0);
  s.sigma_r_sq = scalar(kv, "sigma_r_sq");
  s.sigma_k_sq = per_user(kv, "sigma_k_sq", s.k);
  s.p_b_max = scalar(kv, "p_b_max");
  s.p_r_max = scalar(kv, "p_r_max");
  s.d_bs_rs = scalar(kv, "d_bs_rs");
  s.d_rs_ms = per_user(kv, "d_rs_ms", s.k);
  s.eta = scalar(kv, "eta");
  s.d0 = scalar(kv, "d0");
  if (kv.count("hops")) out.hops = int(scalar(kv, "hops"));
  if (kv.count("p_r_max_hops")) out.p_r_max_hops = kv.at("p_r_max_hops");
  s.validate();
  if (out.hops < 1) throw InvalidInputError("config: hops must be >= 1");
  return out;
}

LoadedScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace relaybf::config
