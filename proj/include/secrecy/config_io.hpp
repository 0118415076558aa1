#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "secrecy/errors.hpp"
#include "secrecy/model.hpp"

namespace secrecy {

inline constexpr const char* kConfigKeys[] = {
    "lambda_p", "lambda_s",      "lambda_e",      "alpha",     "r_p_m",
    "r_s_m",    "p_p_dbm",       "n_s",           "mu",        "gamma_th_p_db",
    "gamma_th_s_db", "rho_out_p", "r_s_rate_bits"};

// Flat JSON object; powers in dBm, thresholds in dB. Keys beginning with '_' are ignored.
inline NetworkConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  std::set<std::string> known(std::begin(kConfigKeys), std::end(kConfigKeys));
  known.insert("p_s_dbm");
  for (const auto& [k, v] : j.items()) {
    if (!k.empty() && k[0] == '_') continue;
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  }
  auto num = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
    return v.get<double>();
  };
  NetworkConfig c;
  c.lambda_p = num("lambda_p");
  c.lambda_s = num("lambda_s");
  c.lambda_e = num("lambda_e");
  c.alpha = num("alpha");
  c.r_p = num("r_p_m");
  c.r_s = num("r_s_m");
  c.p_p = dbm_to_watt(num("p_p_dbm"));
  const double n = num("n_s");
  if (n != std::floor(n) || n < 1 || n > 1e6) throw ConfigError("config: n_s must be a positive integer");
  c.n_s = static_cast<int>(n);
  c.mu = num("mu");
  c.gamma_th_p = db_to_linear(num("gamma_th_p_db"));
  c.gamma_th_s = db_to_linear(num("gamma_th_s_db"));
  c.rho_out_p = num("rho_out_p");
  c.r_s_rate = num("r_s_rate_bits");
  if (j.contains("p_s_dbm") && !j.at("p_s_dbm").is_null()) c.p_s = dbm_to_watt(num("p_s_dbm"));
  c.validate();
  return c;
}

inline nlohmann::json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

inline NetworkConfig load_config(const std::string& path) {
  return config_from_json(load_config_json(path));
}

}  // namespace secrecy
