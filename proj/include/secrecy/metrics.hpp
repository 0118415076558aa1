#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

#include "secrecy/model.hpp"
#include "secrecy/numerics.hpp"
#include "secrecy/power.hpp"
#include "secrecy/sirdist.hpp"

namespace secrecy {

enum class MetricRoute { exact, asymptotic, asymptotic_alpha4 };

inline std::string_view to_string(MetricRoute r) {
  switch (r) {
    case MetricRoute::exact: return "exact";
    case MetricRoute::asymptotic: return "asymptotic";
    case MetricRoute::asymptotic_alpha4: return "asymptotic_alpha4";
  }
  return "unknown";
}

// How the large-array SU CDF is evaluated. `automatic` takes the erf closed form at alpha = 4.
enum class AsymptoticSuRoute { automatic, gil_pelaez, alpha4 };

struct SecrecyResult {
  double value = 0.0;
  double quadrature_error = 0.0;
  bool qos_violated = false;
  MetricRoute route = MetricRoute::exact;
  double p_s = 0.0;  // transmit power the value was computed at
};

namespace detail {

// Gamma at which a CDF of the form exp(-h(gamma)), h decreasing, crosses 1/2.
template <class Cdf>
double cdf_median(Cdf&& cdf) {
  double lo = 1.0, hi = 1.0;
  while (cdf(lo) >= 0.5 && lo > 1e-300) lo *= 1e-2;
  while (cdf(hi) < 0.5 && hi < 1e300) hi *= 1e2;
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-10; ++i) {
    const double mid = std::sqrt(lo * hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

// Power used for an evaluation plus the QoS tag: an explicit P_s above the permitted maximum,
// or any point where the PU target is unreachable, is flagged rather than rejected.
struct PowerResolution {
  NetworkConfig cfg;
  bool qos_violated = false;
};

inline PowerResolution resolve_for_route(const NetworkConfig& cfg, bool asymptotic,
                                         const numerics::QuadratureSpec& spec) {
  cfg.validate();
  const PowerRegion region =
      asymptotic ? max_permissive_power_asymptotic(cfg, spec) : max_permissive_power(cfg);
  PowerResolution out{cfg, false};
  if (cfg.p_s) {
    out.qos_violated = !region.feasible || *cfg.p_s > *region.p_s_max;
  } else {
    if (!region.feasible)
      throw InfeasibleError("PU outage target unreachable even with P_s -> 0");
    out.cfg.p_s = *region.p_s_max;
  }
  return out;
}

}  // namespace detail

inline SecrecyResult average_secrecy_rate(const NetworkConfig& cfg_in,
                                          const numerics::QuadratureSpec& spec = {}) {
  const auto res = detail::resolve_for_route(cfg_in, false, spec);
  const NetworkConfig& cfg = res.cfg;
  const double lam = lambda_l(cfg);
  auto fe = [&](double x) { return cdf_sir_eve_with(x, cfg, lam); };
  auto integrand = [&](double x) {
    const double e = fe(x);
    if (e == 0.0) return 0.0;
    return e * (1.0 - cdf_sir_su_with(x, cfg, lam)) / (1.0 + x);
  };
  const auto r = numerics::quad_log_split(integrand, detail::cdf_median(fe), spec);
  return {r.value / std::numbers::ln2, r.abs_error / std::numbers::ln2, res.qos_violated,
          MetricRoute::exact, *cfg.p_s};
}

inline SecrecyResult secrecy_outage(const NetworkConfig& cfg_in, double rate,
                                    const numerics::QuadratureSpec& spec = {}) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("secrecy_outage: rate must be >= 0");
  const auto res = detail::resolve_for_route(cfg_in, false, spec);
  const NetworkConfig& cfg = res.cfg;
  const double lam = lambda_l(cfg);
  const double scale = std::exp2(rate);
  auto fe = [&](double x) { return cdf_sir_eve_with(x, cfg, lam); };
  auto integrand = [&](double x) {
    const double pdf = pdf_sir_eve_with(x, cfg, lam);
    if (pdf == 0.0) return 0.0;
    return pdf * cdf_sir_su_with(scale * (1.0 + x) - 1.0, cfg, lam);
  };
  const auto r = numerics::quad_log_split(integrand, detail::cdf_median(fe), spec);
  return {std::clamp(r.value, 0.0, 1.0), r.abs_error, res.qos_violated, MetricRoute::exact,
          *cfg.p_s};
}

namespace detail {

struct AsymptoticContext {
  NetworkConfig cfg;
  bool qos_violated = false;
  SirCdf su;
  AsymptoticEveParams eve;
  MetricRoute route = MetricRoute::asymptotic;
};

inline AsymptoticContext asymptotic_context(const NetworkConfig& cfg_in, AsymptoticSuRoute su_route,
                                            const numerics::QuadratureSpec& spec) {
  const auto res = resolve_for_route(cfg_in, true, spec);
  AsymptoticContext ctx;
  ctx.cfg = res.cfg;
  ctx.qos_violated = res.qos_violated;
  const bool closed_form = su_route == AsymptoticSuRoute::alpha4 ||
                           (su_route == AsymptoticSuRoute::automatic && ctx.cfg.alpha == 4.0);
  ctx.su = make_sir_cdf(closed_form ? SirKind::su_asym_alpha4 : SirKind::su_asym_gilpelaez,
                        ctx.cfg, spec);
  ctx.route = closed_form ? MetricRoute::asymptotic_alpha4 : MetricRoute::asymptotic;
  ctx.eve = asymptotic_eve_params(ctx.cfg, xi(ctx.cfg, spec));
  return ctx;
}

}  // namespace detail

inline SecrecyResult asr_asymptotic(const NetworkConfig& cfg_in,
                                    AsymptoticSuRoute su_route = AsymptoticSuRoute::automatic,
                                    const numerics::QuadratureSpec& spec = {}) {
  const auto ctx = detail::asymptotic_context(cfg_in, su_route, spec);
  const double q = ctx.cfg.q();
  auto fe = [&](double x) { return cdf_sir_eve_asym_with(x, ctx.eve, q); };
  auto integrand = [&](double x) {
    const double e = fe(x);
    if (e == 0.0) return 0.0;
    return e * (1.0 - ctx.su(x)) / (1.0 + x);
  };
  const auto r = numerics::quad_log_split(integrand, detail::cdf_median(fe), spec);
  return {r.value / std::numbers::ln2, r.abs_error / std::numbers::ln2, ctx.qos_violated,
          ctx.route, *ctx.cfg.p_s};
}

inline SecrecyResult sop_asymptotic(const NetworkConfig& cfg_in, double rate,
                                    AsymptoticSuRoute su_route = AsymptoticSuRoute::automatic,
                                    const numerics::QuadratureSpec& spec = {}) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("sop_asymptotic: rate must be >= 0");
  const auto ctx = detail::asymptotic_context(cfg_in, su_route, spec);
  const double q = ctx.cfg.q();
  const double scale = std::exp2(rate);
  auto fe = [&](double x) { return cdf_sir_eve_asym_with(x, ctx.eve, q); };
  auto integrand = [&](double x) {
    const double pdf = pdf_sir_eve_asym_with(x, ctx.eve, q);
    if (pdf == 0.0) return 0.0;
    const double g = scale * (1.0 + x) - 1.0;
    return g > 0.0 ? pdf * ctx.su(g) : 0.0;
  };
  const auto r = numerics::quad_log_split(integrand, detail::cdf_median(fe), spec);
  return {std::clamp(r.value, 0.0, 1.0), r.abs_error, ctx.qos_violated, ctx.route, *ctx.cfg.p_s};
}

}  // namespace secrecy
