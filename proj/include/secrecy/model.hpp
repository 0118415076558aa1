#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "secrecy/errors.hpp"
#include "secrecy/numerics.hpp"

namespace secrecy {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// All quantities linear: densities per m^2, distances in m, powers in W, thresholds as ratios.
struct NetworkConfig {
  double lambda_p = 1e-4;
  double lambda_s = 1e-3;
  double lambda_e = 1e-4;
  double alpha = 4.0;
  double r_p = 15.0;
  double r_s = 10.0;
  double p_p = 1.0;
  int n_s = 4;
  double mu = 1.0;
  double gamma_th_p = 1.0;
  double gamma_th_s = 1.0;
  double rho_out_p = 0.1;
  double r_s_rate = 0.0;
  std::optional<double> p_s;

  double q() const { return 2.0 / alpha; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be finite and > 0");
    };
    positive(lambda_p, "lambda_p");
    positive(lambda_s, "lambda_s");
    positive(lambda_e, "lambda_e");
    positive(r_p, "r_p");
    positive(r_s, "r_s");
    positive(p_p, "p_p");
    positive(gamma_th_p, "gamma_th_p");
    positive(gamma_th_s, "gamma_th_s");
    if (!(alpha > 2.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 2");
    if (n_s < 1) throw ConfigError("n_s must be >= 1");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1]");
    if (n_s == 1 && mu < 1.0)
      throw ConfigError("n_s = 1 leaves no null space for artificial noise; mu must be 1");
    if (!(rho_out_p > 0.0 && rho_out_p < 1.0)) throw ConfigError("rho_out_p must lie in (0, 1)");
    if (!(r_s_rate >= 0.0) || !std::isfinite(r_s_rate)) throw ConfigError("r_s_rate must be >= 0");
    if (p_s) positive(*p_s, "p_s");
  }
};

inline constexpr double kBranchTolerance = 1e-12;

inline bool equal_power_branch(double mu, int n_s) {
  return std::abs(mu - 1.0 / n_s) < kBranchTolerance;
}
inline bool equal_power_branch(const NetworkConfig& cfg) {
  return equal_power_branch(cfg.mu, cfg.n_s);
}

namespace detail {

// E[W^q] for W = mu*E + (1-mu)/(n_s-1) * G, E ~ Exp(1), G ~ Gamma(n_s-1, 1).
// Continuous across mu = 1/n_s; chooses between the finite closed form and a convergent series
// about the equal-weight point to avoid cancellation near it.
inline double an_moment(double mu, int n_s, double q) {
  if (n_s == 1 || mu == 1.0) return std::tgamma(1.0 + q);
  if (equal_power_branch(mu, n_s))
    return std::exp(q * std::log(mu) + std::lgamma(n_s + q) - std::lgamma(static_cast<double>(n_s)));
  const double a = mu;
  const double b = (1.0 - mu) / (n_s - 1);
  const double c = 1.0 - b / a;
  const double pref = std::pow(b, q + 1.0) / a;
  if (std::abs(c) <= 0.95) {
    // sum_j c^j Gamma(j + n_s + q) / Gamma(j + n_s)
    double t = std::exp(std::lgamma(n_s + q) - std::lgamma(static_cast<double>(n_s)));
    numerics::KahanSum acc;
    for (int j = 0; j < 20000; ++j) {
      acc += t;
      t *= c * (j + n_s + q) / (j + n_s);
      if (std::abs(t) < 1e-18 * std::abs(acc.value())) break;
    }
    return pref * acc.value();
  }
  numerics::KahanSum inner;
  double ck = 1.0;
  for (int k = 0; k <= n_s - 2; ++k) {
    inner += ck * std::exp(std::lgamma(k + 1.0 + q) - std::lgamma(k + 1.0));
    ck *= c;
  }
  const double head = std::pow(a, q) * std::tgamma(1.0 + q);
  return std::pow(c, 1.0 - n_s) * (head - pref * inner.value());
}

}  // namespace detail

// Upsilon_1 for mu != 1/n_s.
inline double upsilon1(double mu, int n_s, double alpha) {
  if (!(alpha > 2.0)) throw DomainError("upsilon1: alpha must be > 2");
  if (n_s < 2) throw DomainError("upsilon1: n_s must be >= 2");
  if (!(mu > 0.0 && mu <= 1.0)) throw DomainError("upsilon1: mu must lie in (0, 1]");
  if (equal_power_branch(mu, n_s))
    throw BranchError("upsilon1: mu = 1/n_s, use the Gamma-moment branch");
  return detail::an_moment(mu, n_s, 2.0 / alpha);
}

// Normalised interference-weight moment: Upsilon_1 off the equal branch,
// mu^q Gamma(n_s + q) / Gamma(n_s) on it, Gamma(1 + q) for pure beamforming.
inline double interference_moment(const NetworkConfig& cfg) {
  return detail::an_moment(cfg.mu, cfg.n_s, cfg.q());
}

inline double theta(const NetworkConfig& cfg) {
  cfg.validate();
  const double q = cfg.q();
  const double delta = std::tgamma(1.0 - q) * std::pow(cfg.gamma_th_p, q) * cfg.r_p * cfg.r_p;
  return std::log1p(-cfg.rho_out_p) / (std::numbers::pi * delta) +
         cfg.lambda_p * std::tgamma(1.0 + q);
}

// int_0^inf (mu t + 1 - mu)^q e^{-t} dt
inline double large_array_moment(double mu, double q, const numerics::QuadratureSpec& spec = {}) {
  if (mu == 1.0) return std::tgamma(1.0 + q);
  auto f = [mu, q](double t) { return std::pow(mu * t + 1.0 - mu, q) * std::exp(-t); };
  return numerics::quad_semi_infinite(f, spec).value;
}

// P_s when the config fixes it, otherwise the largest power meeting the PU outage target.
inline double resolved_p_s(const NetworkConfig& cfg) {
  cfg.validate();
  if (cfg.p_s) return *cfg.p_s;
  const double th = theta(cfg);
  if (!(th < 0.0)) throw InfeasibleError("PU outage target unreachable even with P_s -> 0");
  return std::pow(-th / (interference_moment(cfg) * cfg.lambda_s), cfg.alpha / 2.0) * cfg.p_p;
}

inline NetworkConfig with_resolved_power(NetworkConfig cfg) {
  cfg.p_s = resolved_p_s(cfg);
  return cfg;
}

// E[exp(-s I)] for the aggregate SU interference I = sum_i W_i |X_i|^{-alpha}.
inline double laplace_su_interference(double s, const NetworkConfig& cfg) {
  if (!(s > 0.0)) throw DomainError("laplace_su_interference: s must be > 0");
  const double q = cfg.q();
  const double p_s = resolved_p_s(cfg);
  return std::exp(-cfg.lambda_s * std::numbers::pi * std::pow(p_s, q) * interference_moment(cfg) *
                  std::tgamma(1.0 - q) * std::pow(s, q));
}

inline double lambda_l(const NetworkConfig& cfg) {
  const double q = cfg.q();
  const double eta = resolved_p_s(cfg) / cfg.p_p;
  const double g1 = std::tgamma(1.0 - q);
  if (equal_power_branch(cfg)) {
    const double ratio = std::exp(std::lgamma(cfg.n_s + q) - std::lgamma(double(cfg.n_s)));
    return std::numbers::pi *
           (cfg.lambda_s * ratio +
            cfg.lambda_p * std::tgamma(1.0 + q) * std::pow(cfg.mu * eta, -q)) *
           g1;
  }
  return std::numbers::pi *
         (cfg.lambda_p * std::tgamma(1.0 + q) * std::pow(eta, -q) +
          cfg.lambda_s * upsilon1(cfg.mu, cfg.n_s, cfg.alpha)) *
         g1 * std::pow(cfg.mu, -q);
}

inline double xi(const NetworkConfig& cfg, const numerics::QuadratureSpec& spec = {}) {
  const double q = cfg.q();
  const double eta = resolved_p_s(cfg) / cfg.p_p;
  return cfg.lambda_p * std::tgamma(1.0 + q) +
         cfg.lambda_s * std::pow(eta, q) * large_array_moment(cfg.mu, q, spec);
}

struct DerivedConstants {
  double p_s = 0.0;
  double sigma_s_sq = 0.0;  // information power
  double sigma_n_sq = 0.0;  // AN power per null-space dimension (0 when n_s = 1)
  double p_a = 0.0;         // total AN power
  double eta = 0.0;
  double upsilon1 = 0.0;    // interference_moment(); equals Upsilon_1 off the equal branch
  double theta = 0.0;
  double lambda_l = 0.0;
  double xi = 0.0;
};

inline DerivedConstants derive_constants(const NetworkConfig& cfg) {
  cfg.validate();
  DerivedConstants d;
  d.p_s = resolved_p_s(cfg);
  d.sigma_s_sq = cfg.mu * d.p_s;
  d.p_a = d.p_s - d.sigma_s_sq;
  d.sigma_n_sq = cfg.n_s > 1 ? d.p_a / (cfg.n_s - 1) : 0.0;
  d.eta = d.p_s / cfg.p_p;
  d.upsilon1 = interference_moment(cfg);
  d.theta = theta(cfg);
  NetworkConfig fixed = cfg;
  fixed.p_s = d.p_s;
  d.lambda_l = lambda_l(fixed);
  d.xi = xi(fixed);
  return d;
}

}  // namespace secrecy
