#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

#include "secrecy/model.hpp"

namespace secrecy {

enum class PowerBranch { equal_power, general, asymptotic };

inline std::string_view to_string(PowerBranch b) {
  switch (b) {
    case PowerBranch::equal_power: return "equal_power";
    case PowerBranch::general: return "general";
    case PowerBranch::asymptotic: return "asymptotic";
  }
  return "unknown";
}

struct PowerRegion {
  std::optional<double> p_s_max;  // W, present only when feasible
  bool feasible = false;
  PowerBranch binding_branch = PowerBranch::general;
  double theta = 0.0;
};

inline PowerRegion max_permissive_power(const NetworkConfig& cfg) {
  cfg.validate();
  PowerRegion r;
  r.theta = theta(cfg);
  r.binding_branch = equal_power_branch(cfg) ? PowerBranch::equal_power : PowerBranch::general;
  r.feasible = r.theta < 0.0;
  if (r.feasible)
    r.p_s_max = std::pow(-r.theta / (interference_moment(cfg) * cfg.lambda_s), cfg.alpha / 2.0) *
                cfg.p_p;
  return r;
}

// Large-array version: the interference weight moment is replaced by its N_s -> inf limit.
inline PowerRegion max_permissive_power_asymptotic(const NetworkConfig& cfg,
                                                   const numerics::QuadratureSpec& spec = {}) {
  cfg.validate();
  PowerRegion r;
  r.theta = theta(cfg);
  r.binding_branch = PowerBranch::asymptotic;
  r.feasible = r.theta < 0.0;
  if (r.feasible) {
    const double j = large_array_moment(cfg.mu, cfg.q(), spec);
    r.p_s_max = std::pow(-r.theta / (j * cfg.lambda_s), cfg.alpha / 2.0) * cfg.p_p;
  }
  return r;
}

inline double pu_outage(const NetworkConfig& cfg, double p_s) {
  cfg.validate();
  if (!(p_s > 0.0)) throw DomainError("pu_outage: p_s must be > 0");
  const double q = cfg.q();
  const double delta = std::tgamma(1.0 - q) * std::pow(cfg.gamma_th_p, q) * cfg.r_p * cfg.r_p;
  const double load = cfg.lambda_p * std::tgamma(1.0 + q) +
                      cfg.lambda_s * std::pow(p_s / cfg.p_p, q) * interference_moment(cfg);
  return -std::expm1(-std::numbers::pi * load * delta);
}

}  // namespace secrecy
