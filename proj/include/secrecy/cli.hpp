#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "secrecy/config_io.hpp"
#include "secrecy/metrics.hpp"
#include "secrecy/montecarlo.hpp"
#include "secrecy/optimize.hpp"
#include "secrecy/power.hpp"
#include "secrecy/sirdist.hpp"

namespace secrecy::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInfeasible = 2, kUsage = 64, kConvergence = 70, kFailure = 1 };

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// Parses "start:stop:step" into an inclusive list (endpoint kept when within 1e-9 of a step).
inline std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad range component '" + item + "'");
    }
  }
  if (parts.size() != 3) throw ConfigError("range must look like start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step != 0.0) || (stop - start) / step < 0.0) throw ConfigError("range step has wrong sign");
  const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 100000) throw ConfigError("range has too many points");
  std::vector<double> out;
  for (long i = 0; i < count; ++i) out.push_back(start + i * step);
  return out;
}

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::optional<double> p_s;
  std::string route;
  std::optional<std::uint64_t> seed;
  std::optional<long> snapshots;
  std::optional<double> radius;
  double wall_seconds = 0.0;

  void write(std::ostream& os) const {
    os << "# tool: secrecy " << kVersion << "\n";
    os << "# command: " << command << "\n";
    os << "# config: " << config.dump() << "\n";
    os << "# resolved_p_s_w: " << (p_s ? fmt(*p_s) : std::string("n/a")) << "\n";
    os << "# route: " << route << "\n";
    if (seed) os << "# seed: " << *seed << "\n";
    if (snapshots) os << "# snapshots: " << *snapshots << "\n";
    if (radius) os << "# radius_m: " << fmt(*radius) << "\n";
    os << "# wall_time_s: " << fmt(wall_seconds) << "\n";
  }
};

inline std::string join_args(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct McFlags {
  bool enabled = false;
  long snapshots = 100000;
  std::uint64_t seed = 1;
  std::optional<double> radius;

  mc::McOptions options() const {
    mc::McOptions o;
    o.n = snapshots;
    o.seed = seed;
    o.radius = radius;
    return o;
  }
};

inline void add_mc_flags(CLI::App* cmd, McFlags& f, bool with_switch) {
  if (with_switch) cmd->add_flag("--mc", f.enabled, "Use the Monte Carlo simulator");
  cmd->add_option("--snapshots", f.snapshots, "Monte Carlo snapshot count")->check(CLI::Range(1000L, 1000000000L));
  cmd->add_option("--seed", f.seed, "Monte Carlo seed");
  cmd->add_option("--radius", f.radius, "Simulation disk radius in m")->check(CLI::PositiveNumber);
}

// Writes to --out when given, else to the supplied stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open output file '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::string command = join_args(argc, argv);

  CLI::App app{"Secrecy performance of underlay spectrum-sharing networks with BF&AN"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, config_b_path, out_path, vary, metric_name = "asr", route_name = "exact";
  bool asymptotic = false, compare = false;
  std::optional<double> rate;
  double target = 0.0, step = 0.02, tol = 1e-3;
  McFlags mcf;

  auto* power_cmd = app.add_subcommand("power-region", "Maximum permissive SU transmit power");
  power_cmd->add_option("config", config_path, "Config JSON")->required();
  power_cmd->add_flag("--asymptotic", asymptotic, "Large-array power bound");

  auto* asr_cmd = app.add_subcommand("asr", "Average secrecy rate");
  auto* sop_cmd = app.add_subcommand("sop", "Secrecy outage probability");
  for (auto* cmd : {asr_cmd, sop_cmd}) {
    cmd->add_option("config", config_path, "Config JSON")->required();
    cmd->add_flag("--asymptotic", asymptotic, "Large-array closed forms");
    cmd->add_flag("--compare", compare, "Print analytical and Monte Carlo values side by side");
    cmd->add_option("--out", out_path, "Write CSV here instead of stdout");
    add_mc_flags(cmd, mcf, true);
  }
  sop_cmd->add_option("--rate", rate, "Target secrecy rate R_s in bits")->check(CLI::NonNegativeNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a metric along one parameter axis");
  sweep_cmd->add_option("config", config_path, "Config JSON")->required();
  sweep_cmd->add_option("--vary", vary, "name=start:stop:step")->required();
  sweep_cmd->add_option("--metric", metric_name, "asr | sop | p_s_max | pu_outage");
  sweep_cmd->add_option("--route", route_name, "exact | asymptotic | montecarlo");
  sweep_cmd->add_option("--rate", rate, "Target secrecy rate R_s for sop")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--out", out_path, "Output CSV");
  add_mc_flags(sweep_cmd, mcf, false);

  auto* opt_cmd = app.add_subcommand("optimize-mu", "Power allocation factor maximising the ASR");
  opt_cmd->add_option("config", config_path, "Config JSON")->required();
  opt_cmd->add_option("--step", step, "Coarse grid step")->check(CLI::Range(1e-6, 0.25));
  opt_cmd->add_option("--tol", tol, "Refinement tolerance on mu")->check(CLI::PositiveNumber);

  auto* gap_cmd = app.add_subcommand("antenna-gap", "Extra antennas needed to hold a target ASR");
  gap_cmd->add_option("config_a", config_path, "Baseline config JSON")->required();
  gap_cmd->add_option("config_b", config_b_path, "Modified config JSON")->required();
  gap_cmd->add_option("--target", target, "Target ASR in bits")->required()->check(CLI::PositiveNumber);

  auto* val_cmd = app.add_subcommand("mc-validate", "Closed forms against the simulator");
  val_cmd->add_option("config", config_path, "Config JSON")->required();
  add_mc_flags(val_cmd, mcf, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    const nlohmann::json cfg_json = load_config_json(config_path);
    const NetworkConfig cfg = config_from_json(cfg_json);
    Manifest man;
    man.command = command;
    man.config = cfg_json;

    if (power_cmd->parsed()) {
      const PowerRegion r = asymptotic ? max_permissive_power_asymptotic(cfg) : max_permissive_power(cfg);
      out << "theta: " << fmt(r.theta) << "\n";
      out << "branch: " << to_string(r.binding_branch) << "\n";
      if (!r.feasible) {
        out << "feasible: no\n";
        err << "infeasible: PU outage target cannot be met even as P_s -> 0\n";
        return kInfeasible;
      }
      out << "feasible: yes\n";
      out << "p_s_max_w: " << fmt(*r.p_s_max) << "\n";
      out << "p_s_max_dbm: " << fmt(watt_to_dbm(*r.p_s_max)) << "\n";
      out << "pu_outage_at_max: " << fmt(pu_outage(cfg, *r.p_s_max)) << "\n";
      return kOk;
    }

    if (asr_cmd->parsed() || sop_cmd->parsed()) {
      const bool is_sop = sop_cmd->parsed();
      if (mcf.enabled && compare) throw CLI::ValidationError("--mc", "conflicts with --compare");
      if (mcf.enabled && asymptotic) throw CLI::ValidationError("--mc", "conflicts with --asymptotic");
      const double r_s = rate.value_or(cfg.r_s_rate);
      Sink sink(out_path, out);
      auto& os = sink.stream();

      std::optional<SecrecyResult> analytic;
      if (!mcf.enabled) {
        analytic = is_sop ? (asymptotic ? sop_asymptotic(cfg, r_s) : secrecy_outage(cfg, r_s))
                          : (asymptotic ? asr_asymptotic(cfg) : average_secrecy_rate(cfg));
      }
      std::optional<mc::McEstimate> sim;
      if (mcf.enabled || compare) {
        NetworkConfig c = cfg;
        if (!c.p_s) c.p_s = analytic ? analytic->p_s : resolved_p_s(cfg);
        const auto opts = mcf.options();
        sim = is_sop ? mc::estimate_sop(c, r_s, opts) : mc::estimate_asr(c, opts);
        man.p_s = c.p_s;
        man.seed = mcf.seed;
        man.snapshots = mcf.snapshots;
        man.radius = sim->radius_m;
      }
      if (analytic) man.p_s = analytic->p_s;
      man.route = analytic ? std::string(to_string(analytic->route)) : std::string("montecarlo");
      if (analytic && sim) man.route += "+montecarlo";
      man.wall_seconds = elapsed();
      man.write(os);
      const char* metric = is_sop ? "sop" : "asr";
      const bool violated = analytic && analytic->qos_violated;
      if (analytic && sim) {
        const double d = sim->mean - analytic->value;
        os << "metric,analytic,montecarlo,stderr,abs_delta,rel_delta,qos_violated\n";
        os << metric << ',' << fmt(analytic->value) << ',' << fmt(sim->mean) << ','
           << fmt(sim->std_error) << ',' << fmt(std::abs(d)) << ','
           << fmt(analytic->value != 0.0 ? std::abs(d / analytic->value) : std::nan("")) << ','
           << (violated ? "true" : "false") << "\n";
      } else {
        os << "metric,route,value,stderr,qos_violated\n";
        if (analytic)
          os << metric << ',' << to_string(analytic->route) << ',' << fmt(analytic->value) << ",,"
             << (violated ? "true" : "false") << "\n";
        else
          os << metric << ",montecarlo," << fmt(sim->mean) << ',' << fmt(sim->std_error)
             << ",false\n";
      }
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      const auto eq = vary.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--vary", "expected name=start:stop:step");
      SweepSpec spec;
      spec.axis = vary.substr(0, eq);
      spec.values = parse_range(vary.substr(eq + 1));
      spec.metric = parse_sweep_metric(metric_name);
      spec.route = parse_sweep_route(route_name);
      spec.mc = mcf.options();
      NetworkConfig base = cfg;
      if (rate) base.r_s_rate = *rate;
      spec.validate();
      const auto rows = sweep(base, spec);
      Sink sink(out_path, out);
      auto& os = sink.stream();
      man.route = std::string(to_string(spec.route));
      if (spec.route == SweepRoute::montecarlo) {
        man.seed = mcf.seed;
        man.snapshots = mcf.snapshots;
        man.radius = mcf.radius ? *mcf.radius : mc::default_radius(cfg);
      }
      if (cfg.p_s) man.p_s = cfg.p_s;
      man.wall_seconds = elapsed();
      man.write(os);
      os << "# axis: " << spec.axis << "\n# metric: " << to_string(spec.metric) << "\n";
      os << "axis_value,metric_value,stderr,qos_violated,p_s_w,error\n";
      for (const auto& r : rows) {
        os << fmt(r.axis_value) << ',' << fmt(r.metric_value) << ','
           << (std::isnan(r.std_error) ? std::string() : fmt(r.std_error)) << ','
           << (r.qos_violated ? "true" : "false") << ','
           << (std::isnan(r.p_s) ? std::string() : fmt(r.p_s)) << ',';
        std::string e = r.error;
        for (auto& ch : e)
          if (ch == ',' || ch == '\n') ch = ';';
        os << e << "\n";
      }
      return kOk;
    }

    if (opt_cmd->parsed()) {
      const MuOptimum m = optimal_mu(cfg, step, tol);
      out << "mu_star: " << std::fixed << std::setprecision(3) << m.mu_star << "\n";
      out << std::defaultfloat << std::setprecision(17);
      out << "asr_star_bits: " << m.asr_star << "\n";
      out << "non_unimodal: " << (m.non_unimodal ? "yes" : "no") << "\n";
      out << "evaluations: " << m.evaluations << "\n";
      return kOk;
    }

    if (gap_cmd->parsed()) {
      const NetworkConfig cfg_b = load_config(config_b_path);
      const AntennaGap g = antenna_gap(cfg, cfg_b, target);
      auto side = [&](const char* name, const AntennaGapSide& s) {
        out << name << ": " << (s.n_s ? std::to_string(*s.n_s) : std::string("unreachable"));
        if (!s.note.empty()) out << " (" << s.note << ")";
        out << "\n";
      };
      side("n_a", g.a);
      side("n_b", g.b);
      out << "gap: " << (g.gap ? std::to_string(*g.gap) : std::string("n/a")) << "\n";
      return g.gap ? kOk : kInfeasible;
    }

    if (val_cmd->parsed()) {
      const NetworkConfig c = with_resolved_power(cfg);
      const auto opts = mcf.options();
      const auto su = mc::sample_sir(mc::SirSource::su, c, opts);
      const auto eve = mc::sample_sir(mc::SirSource::eve, c, opts);
      const auto su_cdf = make_sir_cdf(SirKind::su_exact, c);
      const auto eve_cdf = make_sir_cdf(SirKind::eve_exact, c);
      const auto pu = mc::estimate_pu_outage(c, *c.p_s, opts);
      man.p_s = c.p_s;
      man.route = "exact+montecarlo";
      man.seed = mcf.seed;
      man.snapshots = mcf.snapshots;
      man.radius = su.radius_m;
      man.wall_seconds = elapsed();
      man.write(out);
      out << "check,analytic,montecarlo,stderr,distance\n";
      out << "su_cdf_ks,,,," << fmt(mc::ks_distance(su.values, su_cdf.evaluate)) << "\n";
      out << "eve_cdf_ks,,,," << fmt(mc::ks_distance(eve.values, eve_cdf.evaluate)) << "\n";
      const double analytic_pu = pu_outage(c, *c.p_s);
      out << "pu_outage," << fmt(analytic_pu) << ',' << fmt(pu.mean) << ',' << fmt(pu.std_error)
          << ',' << fmt(std::abs(pu.mean - analytic_pu)) << "\n";
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "numerical convergence failure: " << e.what() << " (estimate " << fmt(e.estimate())
        << ", error bound " << fmt(e.error_bound()) << ")\n";
    return kConvergence;
  } catch (const CancellationError& e) {
    err << "numerical cancellation: " << e.what() << " at m = " << e.order() << "\n";
    return kConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace secrecy::cli
