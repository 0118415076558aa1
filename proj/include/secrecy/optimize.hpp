#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secrecy/metrics.hpp"
#include "secrecy/model.hpp"
#include "secrecy/montecarlo.hpp"
#include "secrecy/power.hpp"

namespace secrecy {

struct MuOptimum {
  double mu_star = 1.0;
  double asr_star = 0.0;
  bool non_unimodal = false;  // grid profile had more than one local maximum
  int evaluations = 0;
};

// mu maximising the exact average secrecy rate with P_s at its permitted maximum for each mu.
inline MuOptimum optimal_mu(const NetworkConfig& cfg_in, double grid_step = 0.02,
                            double refine_tol = 1e-3, const numerics::QuadratureSpec& spec = {}) {
  if (!(grid_step > 0.0 && grid_step <= 0.25))
    throw DomainError("optimal_mu: grid_step must lie in (0, 0.25]");
  if (!(refine_tol > 0.0)) throw DomainError("optimal_mu: refine_tol must be > 0");
  NetworkConfig base = cfg_in;
  base.p_s.reset();
  base.mu = 1.0;
  base.validate();
  MuOptimum out;
  auto asr_at = [&](double mu) {
    NetworkConfig c = base;
    c.mu = mu;
    ++out.evaluations;
    return average_secrecy_rate(c, spec).value;
  };
  if (base.n_s == 1) {
    out.mu_star = 1.0;
    out.asr_star = asr_at(1.0);
    return out;
  }

  std::vector<double> mus;
  const int steps = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));
  for (int k = 1; k <= steps; ++k) mus.push_back(std::min(1.0, k * grid_step));
  if (mus.back() < 1.0) mus.push_back(1.0);
  std::vector<double> vals;
  for (double m : mus) vals.push_back(asr_at(m));

  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i)
    if (vals[i] >= vals[best]) best = i;
  int peaks = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const bool left = i == 0 || vals[i] > vals[i - 1];
    const bool right = i + 1 == vals.size() || vals[i] >= vals[i + 1];
    if (left && right) ++peaks;
  }
  out.non_unimodal = peaks > 1;
  out.mu_star = mus[best];
  out.asr_star = vals[best];

  // Golden-section search inside the bracket around the grid argmax.
  double lo = best == 0 ? mus[0] * 0.5 : mus[best - 1];
  double hi = best + 1 == mus.size() ? mus[best] : mus[best + 1];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - invphi * (hi - lo), b = lo + invphi * (hi - lo);
  double fa = asr_at(a), fb = asr_at(b);
  while (hi - lo > refine_tol) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - invphi * (hi - lo);
      fa = asr_at(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + invphi * (hi - lo);
      fb = asr_at(b);
    }
  }
  const double cand = fa > fb ? a : b;
  const double fcand = std::max(fa, fb);
  if (fcand > out.asr_star) {
    out.mu_star = cand;
    out.asr_star = fcand;
  }
  return out;
}

enum class SweepMetric { asr, sop, p_s_max, pu_outage };
enum class SweepRoute { exact, asymptotic, montecarlo };

inline std::string_view to_string(SweepMetric m) {
  switch (m) {
    case SweepMetric::asr: return "asr";
    case SweepMetric::sop: return "sop";
    case SweepMetric::p_s_max: return "p_s_max";
    case SweepMetric::pu_outage: return "pu_outage";
  }
  return "unknown";
}
inline std::string_view to_string(SweepRoute r) {
  switch (r) {
    case SweepRoute::exact: return "exact";
    case SweepRoute::asymptotic: return "asymptotic";
    case SweepRoute::montecarlo: return "montecarlo";
  }
  return "unknown";
}

inline SweepMetric parse_sweep_metric(std::string_view s) {
  if (s == "asr") return SweepMetric::asr;
  if (s == "sop") return SweepMetric::sop;
  if (s == "p_s_max") return SweepMetric::p_s_max;
  if (s == "pu_outage") return SweepMetric::pu_outage;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}
inline SweepRoute parse_sweep_route(std::string_view s) {
  if (s == "exact") return SweepRoute::exact;
  if (s == "asymptotic") return SweepRoute::asymptotic;
  if (s == "montecarlo" || s == "mc") return SweepRoute::montecarlo;
  throw ConfigError("unknown route '" + std::string(s) + "'");
}

// Sets one named parameter. Names follow the JSON config keys; linear aliases are accepted
// for powers and thresholds (p_s and p_p in W, gamma_th_* as ratios).
inline NetworkConfig apply_axis(NetworkConfig cfg, std::string_view name, double v) {
  if (name == "lambda_p") cfg.lambda_p = v;
  else if (name == "lambda_s") cfg.lambda_s = v;
  else if (name == "lambda_e") cfg.lambda_e = v;
  else if (name == "alpha") cfg.alpha = v;
  else if (name == "r_p" || name == "r_p_m") cfg.r_p = v;
  else if (name == "r_s" || name == "r_s_m") cfg.r_s = v;
  else if (name == "p_p") cfg.p_p = v;
  else if (name == "p_p_dbm") cfg.p_p = dbm_to_watt(v);
  else if (name == "n_s") {
    if (v != std::floor(v) || v < 1 || v > 1e6) throw ConfigError("n_s must be a positive integer");
    cfg.n_s = static_cast<int>(v);
  } else if (name == "mu") cfg.mu = v;
  else if (name == "gamma_th_p") cfg.gamma_th_p = v;
  else if (name == "gamma_th_p_db") cfg.gamma_th_p = db_to_linear(v);
  else if (name == "gamma_th_s") cfg.gamma_th_s = v;
  else if (name == "gamma_th_s_db") cfg.gamma_th_s = db_to_linear(v);
  else if (name == "rho_out_p") cfg.rho_out_p = v;
  else if (name == "r_s_rate" || name == "r_s_rate_bits") cfg.r_s_rate = v;
  else if (name == "p_s") cfg.p_s = v;
  else if (name == "p_s_dbm") cfg.p_s = dbm_to_watt(v);
  else throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
  return cfg;
}

struct SweepSpec {
  std::string axis;
  std::vector<double> values;
  SweepMetric metric = SweepMetric::asr;
  SweepRoute route = SweepRoute::exact;
  mc::McOptions mc = {};
  numerics::QuadratureSpec quad = {};

  void validate() const {
    if (values.empty()) throw ConfigError("sweep: no axis values");
    const bool up = values.size() < 2 || values[1] > values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
      if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1]))
        throw ConfigError("sweep: axis values must be strictly monotone");
    apply_axis(NetworkConfig{}, axis, values.front());
  }
};

struct SweepRow {
  double axis_value = 0.0;
  double metric_value = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();  // Monte Carlo only
  bool qos_violated = false;
  double p_s = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

namespace detail {

inline double asymptotic_pu_outage(const NetworkConfig& cfg, double p_s,
                                   const numerics::QuadratureSpec& spec) {
  const double q = cfg.q();
  const double delta = std::tgamma(1.0 - q) * std::pow(cfg.gamma_th_p, q) * cfg.r_p * cfg.r_p;
  const double load = cfg.lambda_p * std::tgamma(1.0 + q) +
                      cfg.lambda_s * std::pow(p_s / cfg.p_p, q) * large_array_moment(cfg.mu, q, spec);
  return -std::expm1(-std::numbers::pi * load * delta);
}

inline SweepRow evaluate_point(const NetworkConfig& cfg, const SweepSpec& spec) {
  SweepRow row;
  const bool asym = spec.route == SweepRoute::asymptotic;
  const PowerRegion region = asym ? max_permissive_power_asymptotic(cfg, spec.quad)
                                  : max_permissive_power(cfg);
  switch (spec.metric) {
    case SweepMetric::p_s_max:
      row.qos_violated = !region.feasible;
      row.metric_value = region.feasible ? *region.p_s_max : 0.0;
      if (!region.feasible) row.error = "infeasible";
      return row;
    case SweepMetric::pu_outage: {
      if (!cfg.p_s && !region.feasible) {
        row.qos_violated = true;
        row.error = "infeasible";
        return row;
      }
      const double p_s = cfg.p_s ? *cfg.p_s : *region.p_s_max;
      row.p_s = p_s;
      if (spec.route == SweepRoute::montecarlo) {
        const auto e = mc::estimate_pu_outage(cfg, p_s, spec.mc);
        row.metric_value = e.mean;
        row.std_error = e.std_error;
      } else {
        row.metric_value = asym ? asymptotic_pu_outage(cfg, p_s, spec.quad) : pu_outage(cfg, p_s);
      }
      row.qos_violated = !region.feasible || p_s > *region.p_s_max ||
                         row.metric_value > cfg.rho_out_p * (1.0 + 1e-12);
      return row;
    }
    case SweepMetric::asr:
    case SweepMetric::sop: {
      if (!cfg.p_s && !region.feasible) {
        row.qos_violated = true;
        row.error = "infeasible";
        return row;
      }
      const bool sop = spec.metric == SweepMetric::sop;
      if (spec.route == SweepRoute::montecarlo) {
        NetworkConfig c = cfg;
        if (!c.p_s) c.p_s = *region.p_s_max;
        const auto e = sop ? mc::estimate_sop(c, c.r_s_rate, spec.mc) : mc::estimate_asr(c, spec.mc);
        row.metric_value = e.mean;
        row.std_error = e.std_error;
        row.p_s = *c.p_s;
        row.qos_violated = !region.feasible || *c.p_s > *region.p_s_max;
        return row;
      }
      SecrecyResult r;
      if (asym) {
        r = sop ? sop_asymptotic(cfg, cfg.r_s_rate, AsymptoticSuRoute::automatic, spec.quad)
                : asr_asymptotic(cfg, AsymptoticSuRoute::automatic, spec.quad);
      } else {
        r = sop ? secrecy_outage(cfg, cfg.r_s_rate, spec.quad) : average_secrecy_rate(cfg, spec.quad);
      }
      row.metric_value = r.value;
      row.qos_violated = r.qos_violated;
      row.p_s = r.p_s;
      return row;
    }
  }
  return row;
}

}  // namespace detail

// Rows follow spec.values order. A failing point records its error and the sweep continues.
inline std::vector<SweepRow> sweep(const NetworkConfig& cfg, const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (double v : spec.values) {
    SweepRow row;
    try {
      const NetworkConfig point = apply_axis(cfg, spec.axis, v);
      point.validate();
      row = detail::evaluate_point(point, spec);
    } catch (const CancelledError&) {
      throw;
    } catch (const std::exception& e) {
      row = SweepRow{};
      row.error = e.what();
    }
    row.axis_value = v;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct AntennaGapSide {
  std::optional<int> n_s;  // smallest N_s reaching the target, if any up to the cap
  std::string note;
};

struct AntennaGap {
  AntennaGapSide a, b;
  std::optional<int> gap;  // n_b - n_a when both sides reach the target
};

namespace detail {

inline AntennaGapSide smallest_antennas(const NetworkConfig& cfg, double target, int cap,
                                        const numerics::QuadratureSpec& spec) {
  AntennaGapSide side;
  const int first = cfg.mu < 1.0 ? 2 : 1;
  auto reaches = [&](int n) {
    NetworkConfig c = cfg;
    c.n_s = n;
    return asr_asymptotic(c, AsymptoticSuRoute::automatic, spec).value >= target;
  };
  try {
    if (reaches(first)) {
      side.n_s = first;
      return side;
    }
    int lo = first, hi = first;
    while (true) {
      if (hi >= cap) {
        side.note = "target not reached with n_s <= " + std::to_string(cap);
        return side;
      }
      lo = hi;
      hi = std::min(cap, hi * 2);
      if (reaches(hi)) break;
    }
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      (reaches(mid) ? hi : lo) = mid;
    }
    side.n_s = hi;
  } catch (const InfeasibleError& e) {
    side.note = e.what();
  }
  return side;
}

}  // namespace detail

// Antennas needed under each configuration to reach target_asr on the large-array route.
inline AntennaGap antenna_gap(const NetworkConfig& cfg_a, const NetworkConfig& cfg_b,
                              double target_asr, int cap = 4096,
                              const numerics::QuadratureSpec& spec = {}) {
  if (!(target_asr > 0.0)) throw DomainError("antenna_gap: target must be > 0");
  AntennaGap g;
  g.a = detail::smallest_antennas(cfg_a, target_asr, cap, spec);
  g.b = detail::smallest_antennas(cfg_b, target_asr, cap, spec);
  if (g.a.n_s && g.b.n_s) g.gap = *g.b.n_s - *g.a.n_s;
  return g;
}

}  // namespace secrecy
