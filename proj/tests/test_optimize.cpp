#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "secrecy/config_io.hpp"
#include "secrecy/optimize.hpp"

using namespace secrecy;

namespace {

NetworkConfig load(const std::string& name) {
  return load_config(std::string(SECRECY_SOURCE_DIR) + "/configs/" + name);
}

double asr_at(NetworkConfig c, double mu) {
  c.p_s.reset();
  c.mu = mu;
  return average_secrecy_rate(c).value;
}

}  // namespace

TEST(OptimalMu, InteriorOptimumMatchesFineGrid) {
  const auto c = load("fig4_mu_tradeoff.json");
  double best_mu = 0.0, best = -1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double mu = k * 1e-3;
    const double v = asr_at(c, mu);
    if (v >= best) {
      best = v;
      best_mu = mu;
    }
  }
  const auto opt = optimal_mu(c);
  EXPECT_GT(opt.mu_star, 0.05);
  EXPECT_LT(opt.mu_star, 0.95);
  EXPECT_NEAR(opt.mu_star, best_mu, 2e-3);
  EXPECT_GE(opt.asr_star, best - 1e-9);
  EXPECT_FALSE(opt.non_unimodal);
  EXPECT_GT(opt.evaluations, 50);
}

TEST(OptimalMu, RiseThenFall) {
  const auto c = load("fig4_mu_tradeoff.json");
  const auto opt = optimal_mu(c);
  EXPECT_LT(asr_at(c, 0.1), opt.asr_star);
  EXPECT_LT(asr_at(c, 1.0), opt.asr_star);
}

TEST(OptimalMu, FewEavesdroppersNeedNoNoise) {
  const auto opt = optimal_mu(load("fig5_small_ratio.json"));
  EXPECT_DOUBLE_EQ(opt.mu_star, 1.0);
}

TEST(OptimalMu, GuardsAndSingleAntenna) {
  auto c = load("fig5_small_ratio.json");
  EXPECT_THROW(optimal_mu(c, 0.0), DomainError);
  EXPECT_THROW(optimal_mu(c, 0.5), DomainError);
  EXPECT_THROW(optimal_mu(c, 0.02, 0.0), DomainError);
  c.n_s = 1;
  const auto opt = optimal_mu(c);
  EXPECT_EQ(opt.mu_star, 1.0);
  EXPECT_EQ(opt.evaluations, 1);
}

TEST(Sweep, AxisNamesAndAliases) {
  NetworkConfig c;
  EXPECT_EQ(apply_axis(c, "r_p_m", 7.0).r_p, 7.0);
  EXPECT_EQ(apply_axis(c, "r_s", 4.0).r_s, 4.0);
  EXPECT_NEAR(apply_axis(c, "p_p_dbm", 30.0).p_p, 1.0, 1e-15);
  EXPECT_NEAR(*apply_axis(c, "p_s_dbm", 0.0).p_s, 1e-3, 1e-18);
  EXPECT_NEAR(apply_axis(c, "gamma_th_p_db", 10.0).gamma_th_p, 10.0, 1e-12);
  EXPECT_EQ(apply_axis(c, "n_s", 8.0).n_s, 8);
  EXPECT_THROW(apply_axis(c, "n_s", 2.5), ConfigError);
  EXPECT_THROW(apply_axis(c, "bogus", 1.0), ConfigError);
  EXPECT_EQ(parse_sweep_metric("p_s_max"), SweepMetric::p_s_max);
  EXPECT_EQ(parse_sweep_route("mc"), SweepRoute::montecarlo);
  EXPECT_THROW(parse_sweep_metric("x"), ConfigError);
  EXPECT_THROW(parse_sweep_route("x"), ConfigError);
  EXPECT_EQ(to_string(SweepMetric::pu_outage), "pu_outage");
  EXPECT_EQ(to_string(SweepRoute::asymptotic), "asymptotic");
}

TEST(Sweep, RowsFollowValuesAndMatchDirectCalls) {
  const auto c = load("fig2_power_adaptation.json");
  SweepSpec s;
  s.axis = "mu";
  s.values = {0.2, 0.4, 0.6};
  const auto rows = sweep(c, s);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].axis_value, s.values[i]);
    EXPECT_NEAR(rows[i].metric_value, asr_at(c, s.values[i]), 1e-12);
    EXPECT_TRUE(rows[i].error.empty());
    EXPECT_FALSE(rows[i].qos_violated);
  }
}

TEST(Sweep, PowerWallShiftsWithDensity) {
  const auto c = load("fig3_density_wall.json");
  SweepSpec s;
  s.axis = "lambda_s";
  s.metric = SweepMetric::p_s_max;
  s.values = {2e-4, 5e-4, 1e-3, 2e-3};
  const auto rows = sweep(c, s);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].metric_value, rows[i - 1].metric_value);
}

TEST(Sweep, ErrorsAreRecordedPerRow) {
  auto c = load("fig2_power_adaptation.json");
  SweepSpec s;
  s.axis = "lambda_p";
  s.values = {1e-4, 1e-2};
  const auto rows = sweep(c, s);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_EQ(rows[1].error, "infeasible");
  EXPECT_TRUE(rows[1].qos_violated);
  EXPECT_TRUE(std::isnan(rows[1].metric_value));
  s.axis = "n_s";
  s.values = {1.0, 2.0};
  const auto bad = sweep(c, s);
  EXPECT_FALSE(bad[0].error.empty());
  EXPECT_TRUE(bad[1].error.empty());
}

TEST(Sweep, SpecValidation) {
  const auto c = load("fig2_power_adaptation.json");
  SweepSpec s;
  s.axis = "mu";
  EXPECT_THROW(sweep(c, s), ConfigError);
  s.values = {0.2, 0.2};
  EXPECT_THROW(sweep(c, s), ConfigError);
  s.values = {0.4, 0.2, 0.3};
  EXPECT_THROW(sweep(c, s), ConfigError);
  s.values = {0.6, 0.4};
  EXPECT_NO_THROW(sweep(c, s));
  s.axis = "nope";
  EXPECT_THROW(sweep(c, s), ConfigError);
}

TEST(Sweep, PuOutageRoutes) {
  const auto c = load("fig2_power_adaptation.json");
  SweepSpec s;
  s.axis = "mu";
  s.values = {0.4};
  s.metric = SweepMetric::pu_outage;
  EXPECT_NEAR(sweep(c, s)[0].metric_value, c.rho_out_p, 1e-9);
  s.route = SweepRoute::montecarlo;
  s.mc.n = 2000;
  const auto row = sweep(c, s)[0];
  EXPECT_NEAR(row.metric_value, c.rho_out_p, 4 * row.std_error + 0.01);
  EXPECT_GT(row.std_error, 0.0);
}

TEST(AntennaGap, SmallestArraysBracketTarget) {
  auto a = load("fig7_asymptotic_asr.json");
  auto b = load("fig7_asymptotic_asr_dense.json");
  const double target = 6.0;
  const auto g = antenna_gap(a, b, target);
  ASSERT_TRUE(g.a.n_s && g.b.n_s);
  for (auto [cfg, n] : {std::pair{a, *g.a.n_s}, std::pair{b, *g.b.n_s}}) {
    cfg.n_s = n;
    EXPECT_GE(asr_asymptotic(cfg).value, target);
    cfg.n_s = n - 1;
    EXPECT_LT(asr_asymptotic(cfg).value, target);
  }
  EXPECT_EQ(*g.gap, *g.b.n_s - *g.a.n_s);
  EXPECT_GT(*g.gap, 0);
}

TEST(AntennaGap, CapAndGuards) {
  const auto a = load("fig7_asymptotic_asr.json");
  const auto g = antenna_gap(a, a, 40.0, 64);
  EXPECT_FALSE(g.a.n_s.has_value());
  EXPECT_FALSE(g.gap.has_value());
  EXPECT_FALSE(g.a.note.empty());
  EXPECT_THROW(antenna_gap(a, a, 0.0), DomainError);
}
