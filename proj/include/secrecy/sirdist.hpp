#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string_view>
#include <vector>

#include "secrecy/model.hpp"
#include "secrecy/numerics.hpp"
#include "secrecy/partitions.hpp"

namespace secrecy {

enum class SirKind { su_exact, eve_exact, su_asym_gilpelaez, su_asym_alpha4, eve_asym };

struct SirCdf {
  std::function<double(double)> evaluate;
  SirKind kind = SirKind::su_exact;
  double operator()(double gamma) const { return evaluate(gamma); }
};

namespace detail {

// Complementary SU CDF with y = Lambda_l * gamma^q * r_s^2:
//   1 - F = e^{-y} * sum_{m < n_s} u_m,  sum_m u_m t^m = exp(y (1 - (1 - t)^q)).
// u_m is the m-th Faa di Bruno term of the Laplace-transform derivative, (-1)^m B_m(a)/m! with
// a_j = -y q (q-1) ... (q-j+1). For 0 < q < 1 every u_m is positive.
inline double su_ccdf_from_y(double y, double q, int n_s) {
  if (y <= 0.0) return 1.0;
  if (n_s == 1) return std::exp(-y);
  if (y > 1e4) return 0.0;
  const int m_max = n_s - 1;
  std::vector<double> u(static_cast<std::size_t>(m_max) + 1, 0.0);
  u[0] = 1.0;
  if (m_max <= kPartitionTableMax) {
    std::vector<double> a;
    a.reserve(m_max);
    double falling = 1.0;
    for (int j = 1; j <= m_max; ++j) {
      falling *= (q - (j - 1));
      a.push_back(-y * falling);
    }
    double m_fact = 1.0;
    for (int m = 1; m <= m_max; ++m) {
      m_fact *= m;
      const std::vector<double> head(a.begin(), a.begin() + m);
      u[m] = ((m % 2) ? -1.0 : 1.0) * faa_di_bruno_exp(head, m) / m_fact;
    }
  } else {
    // Power-series form of the derivative recurrence f^{(m)} = sum C(m-1,k) g^{(m-k)} f^{(k)}.
    std::vector<double> d(static_cast<std::size_t>(m_max) + 1, 0.0);
    double binom = 1.0;
    for (int j = 1; j <= m_max; ++j) {
      binom *= (q - (j - 1)) / j;
      d[j] = ((j % 2) ? 1.0 : -1.0) * y * binom;
    }
    for (int m = 1; m <= m_max; ++m) {
      numerics::KahanSum acc;
      for (int k = 1; k <= m; ++k) acc += k * d[k] * u[m - k];
      u[m] = acc.value() / m;
    }
  }
  numerics::KahanSum s;
  for (int m = 0; m <= m_max; ++m) {
    if (u[m] != 0.0) s += std::exp(std::log(std::abs(u[m])) - y) * (u[m] < 0 ? -1.0 : 1.0);
    const double v = s.value();
    if (v < -1e-9 || v > 1.0 + 1e-9)
      throw CancellationError("cdf_sir_su: partition sum left [0, 1]", m);
  }
  return std::clamp(s.value(), 0.0, 1.0);
}

inline double eve_an_factor(const NetworkConfig& cfg, double gamma) {
  if (cfg.mu == 1.0 || cfg.n_s == 1) return 1.0;
  const double b = (1.0 - cfg.mu) / ((cfg.n_s - 1) * cfg.mu);
  return std::pow(b * gamma + 1.0, 1.0 - cfg.n_s);
}

inline void require_positive_gamma(double gamma, const char* who) {
  if (!(gamma > 0.0)) throw DomainError(std::string(who) + ": gamma must be > 0");
}

}  // namespace detail

// Exact SU SIR CDF; Lambda_l may be precomputed by callers that evaluate many points.
inline double cdf_sir_su_with(double gamma, const NetworkConfig& cfg, double lam) {
  if (gamma <= 0.0) return 0.0;
  const double q = cfg.q();
  const double y = lam * std::pow(gamma, q) * cfg.r_s * cfg.r_s;
  if (cfg.n_s == 1) return -std::expm1(-y);
  return 1.0 - detail::su_ccdf_from_y(y, q, cfg.n_s);
}

inline double cdf_sir_su(double gamma, const NetworkConfig& cfg) {
  detail::require_positive_gamma(gamma, "cdf_sir_su");
  cfg.validate();
  return cdf_sir_su_with(gamma, cfg, lambda_l(cfg));
}

inline double cdf_sir_eve_with(double gamma, const NetworkConfig& cfg, double lam) {
  if (gamma <= 0.0) return 0.0;
  const double a = std::numbers::pi * cfg.lambda_e / lam;
  return std::exp(-a * std::pow(gamma, -cfg.q()) * detail::eve_an_factor(cfg, gamma));
}

inline double cdf_sir_eve(double gamma, const NetworkConfig& cfg) {
  detail::require_positive_gamma(gamma, "cdf_sir_eve");
  cfg.validate();
  return cdf_sir_eve_with(gamma, cfg, lambda_l(cfg));
}

// d/dgamma of the exact eavesdropper CDF.
inline double pdf_sir_eve_with(double gamma, const NetworkConfig& cfg, double lam) {
  if (gamma <= 0.0) return 0.0;
  const double q = cfg.q();
  const double a = std::numbers::pi * cfg.lambda_e / lam;
  const double an = detail::eve_an_factor(cfg, gamma);
  const double core = a * std::pow(gamma, -q) * an;
  const double cdf = std::exp(-core);
  if (cdf == 0.0) return 0.0;
  double bracket = q / gamma;
  if (cfg.mu < 1.0 && cfg.n_s > 1) {
    const double b = (1.0 - cfg.mu) / ((cfg.n_s - 1) * cfg.mu);
    bracket += (cfg.n_s - 1) * b / (b * gamma + 1.0);
  }
  return cdf * core * bracket;
}

struct AsymptoticEveParams {
  double k = 0.0;     // lambda_e (mu eta)^q / (Xi Gamma(1-q))
  double beta = 0.0;  // 1 - 1/mu
};

inline AsymptoticEveParams asymptotic_eve_params(const NetworkConfig& cfg, double xi_value) {
  const double q = cfg.q();
  const double eta = resolved_p_s(cfg) / cfg.p_p;
  return {cfg.lambda_e * std::pow(cfg.mu * eta, q) / (xi_value * std::tgamma(1.0 - q)),
          1.0 - 1.0 / cfg.mu};
}

inline double cdf_sir_eve_asym_with(double gamma, const AsymptoticEveParams& p, double q) {
  if (gamma <= 0.0) return 0.0;
  return std::exp(-p.k * std::exp(p.beta * gamma) * std::pow(gamma, -q));
}

inline double pdf_sir_eve_asym_with(double gamma, const AsymptoticEveParams& p, double q) {
  if (gamma <= 0.0) return 0.0;
  const double core = p.k * std::exp(p.beta * gamma) * std::pow(gamma, -q);
  const double cdf = std::exp(-core);
  if (cdf == 0.0) return 0.0;
  return cdf * core * (q / gamma - p.beta);
}

inline double cdf_sir_eve_asym(double gamma, const NetworkConfig& cfg) {
  detail::require_positive_gamma(gamma, "cdf_sir_eve_asym");
  cfg.validate();
  return cdf_sir_eve_asym_with(gamma, asymptotic_eve_params(cfg, xi(cfg)), cfg.q());
}

// Characteristic function of the large-array aggregate interference,
// psi(w) = exp(-C (-jw)^q) with C = pi Xi Gamma(1-q) eta^{-q}, principal branch.
inline numerics::CharacteristicFunction large_array_interference_cf(double c, double q) {
  numerics::CharacteristicFunction cf;
  cf.evaluate = [c, q](std::complex<double> w) {
    return std::exp(-c * std::pow(std::complex<double>(0.0, -1.0) * w, q));
  };
  cf.decay_exponent = q;
  cf.envelope_rate = c * std::cos(std::numbers::pi * q / 2.0);
  // Half of the widest sector in which the continuation stays analytic and decaying.
  const double alpha = 2.0 / q;
  cf.tilt = 0.5 * std::min(std::numbers::pi / 2.0, std::numbers::pi * (alpha - 2.0) / 4.0);
  return cf;
}

inline double large_array_scale(const NetworkConfig& cfg, double xi_value) {
  const double q = cfg.q();
  const double eta = resolved_p_s(cfg) / cfg.p_p;
  return std::numbers::pi * xi_value * std::tgamma(1.0 - q) * std::pow(eta, -q);
}

inline double cdf_sir_su_asym_with(double gamma, const NetworkConfig& cfg,
                                   const numerics::CharacteristicFunction& cf,
                                   const numerics::QuadratureSpec& spec = {}) {
  if (gamma <= 0.0) return 0.0;
  const double point = cfg.mu * cfg.n_s / (gamma * std::pow(cfg.r_s, cfg.alpha));
  return 1.0 - numerics::gil_pelaez_cdf(cf, point, spec);
}

inline double cdf_sir_su_asym(double gamma, const NetworkConfig& cfg,
                              const numerics::QuadratureSpec& spec = {}) {
  detail::require_positive_gamma(gamma, "cdf_sir_su_asym");
  cfg.validate();
  const auto cf = large_array_interference_cf(large_array_scale(cfg, xi(cfg, spec)), cfg.q());
  return cdf_sir_su_asym_with(gamma, cfg, cf, spec);
}

inline double cdf_sir_su_asym_alpha4_with(double gamma, const NetworkConfig& cfg,
                                          double xi_value) {
  if (gamma <= 0.0) return 0.0;
  const double eta = resolved_p_s(cfg) / cfg.p_p;
  const double arg = std::numbers::pi * xi_value / 2.0 *
                     std::sqrt(std::numbers::pi * gamma * std::pow(cfg.r_s, 4.0) /
                               (cfg.mu * cfg.n_s * eta));
  return numerics::phi_fn(arg);
}

inline double cdf_sir_su_asym_alpha4(double gamma, const NetworkConfig& cfg) {
  if (cfg.alpha != 4.0) throw DomainError("cdf_sir_su_asym_alpha4: alpha must be exactly 4");
  detail::require_positive_gamma(gamma, "cdf_sir_su_asym_alpha4");
  cfg.validate();
  return cdf_sir_su_asym_alpha4_with(gamma, cfg, xi(cfg));
}

// Bundles a CDF with its constants precomputed, for repeated evaluation.
inline SirCdf make_sir_cdf(SirKind kind, const NetworkConfig& cfg_in,
                           const numerics::QuadratureSpec& spec = {}) {
  cfg_in.validate();
  const NetworkConfig cfg = with_resolved_power(cfg_in);
  switch (kind) {
    case SirKind::su_exact: {
      const double lam = lambda_l(cfg);
      return {[cfg, lam](double g) { return cdf_sir_su_with(g, cfg, lam); }, kind};
    }
    case SirKind::eve_exact: {
      const double lam = lambda_l(cfg);
      return {[cfg, lam](double g) { return cdf_sir_eve_with(g, cfg, lam); }, kind};
    }
    case SirKind::su_asym_gilpelaez: {
      const auto cf = large_array_interference_cf(large_array_scale(cfg, xi(cfg, spec)), cfg.q());
      return {[cfg, cf, spec](double g) { return cdf_sir_su_asym_with(g, cfg, cf, spec); }, kind};
    }
    case SirKind::su_asym_alpha4: {
      if (cfg.alpha != 4.0) throw DomainError("make_sir_cdf: alpha4 route needs alpha = 4");
      const double x = xi(cfg, spec);
      return {[cfg, x](double g) { return cdf_sir_su_asym_alpha4_with(g, cfg, x); }, kind};
    }
    case SirKind::eve_asym: {
      const auto p = asymptotic_eve_params(cfg, xi(cfg, spec));
      const double q = cfg.q();
      return {[p, q](double g) { return cdf_sir_eve_asym_with(g, p, q); }, kind};
    }
  }
  throw DomainError("make_sir_cdf: unknown kind");
}

inline std::string_view to_string(SirKind k) {
  switch (k) {
    case SirKind::su_exact: return "su_exact";
    case SirKind::eve_exact: return "eve_exact";
    case SirKind::su_asym_gilpelaez: return "su_asym_gilpelaez";
    case SirKind::su_asym_alpha4: return "su_asym_alpha4";
    case SirKind::eve_asym: return "eve_asym";
  }
  return "unknown";
}

}  // namespace secrecy
