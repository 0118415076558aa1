#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "secrecy/sirdist.hpp"

using namespace secrecy;

namespace {

NetworkConfig fig3() {
  NetworkConfig c;
  c.lambda_p = 1e-4;
  c.lambda_s = 1e-3;
  c.lambda_e = 1e-4;
  c.alpha = 4.0;
  c.r_p = 15.0;
  c.r_s = 10.0;
  c.p_p = dbm_to_watt(36.0);
  c.n_s = 6;
  c.mu = 0.8;
  c.gamma_th_p = 1.0;
  c.gamma_th_s = 1.0;
  c.rho_out_p = 0.15;
  c.r_s_rate = 1.0;
  return with_resolved_power(c);
}

// 1 - F_s from the Taylor coefficients of exp(y (1 - (1 - t)^q)) read off a circle |t| = 1/2
// with the trapezoidal rule: P(G > s I) for G ~ Gamma(n, 1) and L_I(s) = exp(-c s^q).
double su_ccdf_cauchy(double y, double q, int n) {
  constexpr int kNodes = 8192;
  const double radius = 0.9;
  std::vector<std::complex<double>> vals(kNodes);
  for (int k = 0; k < kNodes; ++k) {
    const auto t = std::polar(radius, 2 * std::numbers::pi * k / kNodes);
    vals[k] = std::exp(y * (1.0 - std::pow(1.0 - t, q)) - y);
  }
  double total = 0.0;
  for (int m = 0; m < n; ++m) {
    std::complex<double> c = 0.0;
    for (int k = 0; k < kNodes; ++k)
      c += vals[k] * std::polar(1.0, -2 * std::numbers::pi * k * m / kNodes);
    total += c.real() / kNodes / std::pow(radius, m);
  }
  return total;
}

// P(I <= x) for a positive stable law with E[exp(-s I)] = exp(-c s^q), by its convergent series.
double stable_cdf_series(double x, double c, double q) {
  long double sum = 0.0L, z = 1.0L;
  const long double w = c * std::pow(x, -q);
  for (int k = 1; k < 400; ++k) {
    z *= w / k;
    const long double magnitude = z * std::tgamma(k * q);
    sum += (k % 2 ? 1.0L : -1.0L) * magnitude * std::sin(std::numbers::pi * k * q);
    if (k > 10 && magnitude < 1e-20L) break;
  }
  return static_cast<double>(1.0L - sum / std::numbers::pi_v<long double>);
}

double richardson(const std::function<double(double)>& f, double x) {
  const double h = 1e-3 * x;
  auto d = [&](double s) { return (f(x + s) - f(x - s)) / (2 * s); };
  return (4 * d(h / 2) - d(h)) / 3;
}

}  // namespace

TEST(SuCdf, MatchesContourOracle) {
  for (int n : {2, 4, 6, 12, 21}) {
    for (double alpha : {3.0, 4.0}) {
      auto c = fig3();
      c.n_s = n;
      c.alpha = alpha;
      c.r_p = 6.0;
      c.mu = 0.7;
      c.p_s.reset();
      c = with_resolved_power(c);
      const double lam = lambda_l(c);
      for (double g : {0.05, 0.5, 2.0, 10.0}) {
        const double y = lam * std::pow(g, c.q()) * c.r_s * c.r_s;
        EXPECT_NEAR(cdf_sir_su(g, c), 1.0 - su_ccdf_cauchy(y, c.q(), n), 1e-10)
            << n << " " << alpha << " " << g;
      }
    }
  }
}

TEST(SuCdf, RecurrenceRouteForLargeArrays) {
  for (int n : {22, 30, 48}) {
    auto c = fig3();
    c.n_s = n;
    c.mu = 0.5;
    const double lam = lambda_l(c);
    for (double g : {0.3, 3.0, 30.0}) {
      const double y = lam * std::pow(g, c.q()) * c.r_s * c.r_s;
      EXPECT_NEAR(cdf_sir_su(g, c), 1.0 - su_ccdf_cauchy(y, c.q(), n), 1e-9) << n << " " << g;
    }
  }
}

TEST(SuCdf, SingleAntennaIsExponential) {
  auto c = fig3();
  c.n_s = 1;
  c.mu = 1.0;
  const double lam = lambda_l(c);
  for (double g : {0.1, 1.0, 10.0})
    EXPECT_NEAR(cdf_sir_su(g, c), 1.0 - std::exp(-lam * std::sqrt(g) * 100.0), 1e-14);
}

TEST(SuCdf, MonotoneWithLimits) {
  const auto c = fig3();
  double prev = 0.0;
  for (double g = 1e-4; g < 1e6; g *= 1.5) {
    const double v = cdf_sir_su(g, c);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_LT(cdf_sir_su(1e-8, c), 1e-3);
  EXPECT_GT(prev, 1.0 - 1e-6);
  EXPECT_THROW(cdf_sir_su(0.0, c), DomainError);
  EXPECT_EQ(cdf_sir_su_with(-1.0, c, lambda_l(c)), 0.0);
}

TEST(EveCdf, MatchesVoidProbabilityQuadrature) {
  // exp(-lambda_e int 2 pi r P(SIR_e(r) > gamma) dr), with the per-eavesdropper success probability
  // L_I(gamma r^alpha / sigma_s^2) E[exp(-gamma sigma_n^2 G / sigma_s^2)].
  for (double mu : {0.3, 0.8, 1.0}) {
    auto c = fig3();
    c.mu = mu;
    const double q = c.q();
    const double ss = mu * *c.p_s;
    const double b = (1 - mu) / ((c.n_s - 1) * mu);
    for (double g : {0.01, 0.2, 3.0}) {
      auto success = [&](double r) {
        const double s = g * std::pow(r, c.alpha) / ss;
        if (!(s > 0.0)) return 2 * std::numbers::pi * r * std::pow(1 + g * b, 1.0 - c.n_s);
        const double pu = c.lambda_p * std::numbers::pi * std::tgamma(1 + q) * std::tgamma(1 - q) *
                          std::pow(s * c.p_p, q);
        return 2 * std::numbers::pi * r * laplace_su_interference(s, c) * std::exp(-pu) *
               std::pow(1 + g * b, 1.0 - c.n_s);
      };
      boost::math::quadrature::exp_sinh<double> es;
      const double expected = std::exp(-c.lambda_e * es.integrate(success, 1e-12));
      EXPECT_NEAR(cdf_sir_eve(g, c), expected, 1e-10) << mu << " " << g;
    }
  }
}

TEST(EveCdf, PdfIsDerivative) {
  for (double mu : {0.3, 1.0}) {
    auto c = fig3();
    c.mu = mu;
    const double lam = lambda_l(c);
    auto f = [&](double g) { return cdf_sir_eve_with(g, c, lam); };
    for (double g : {0.005, 0.05, 0.5, 5.0})
      EXPECT_NEAR(pdf_sir_eve_with(g, c, lam), richardson(f, g), 1e-7 * std::max(1.0, richardson(f, g)));
  }
}

TEST(EveCdf, LimitsAndErrors) {
  auto c = fig3();
  c.lambda_e = 1e-12;
  EXPECT_GT(cdf_sir_eve(1e-3, c), 1.0 - 1e-6);
  c = fig3();
  c.lambda_e = 10.0;
  EXPECT_LT(cdf_sir_eve(1.0, c), 1e-6);
  EXPECT_THROW(cdf_sir_eve(-1.0, fig3()), DomainError);
}

TEST(AsymptoticEve, LimitOfExactForLargeArrays) {
  auto c = fig3();
  c.mu = 0.6;
  const double q = c.q();
  double prev = INFINITY;
  for (int n : {8, 64, 512, 4096}) {
    c.n_s = n;
    const auto p = asymptotic_eve_params(c, xi(c));
    const double lam = lambda_l(c);
    double gap = 0.0;
    for (double g : {0.05, 0.3, 1.0, 3.0})
      gap = std::max(gap, std::abs(cdf_sir_eve_with(g, c, lam) - cdf_sir_eve_asym_with(g, p, q)));
    EXPECT_LT(gap, prev) << n;
    prev = gap;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(AsymptoticEve, PdfIsDerivative) {
  const auto c = fig3();
  const auto p = asymptotic_eve_params(c, xi(c));
  auto f = [&](double g) { return cdf_sir_eve_asym_with(g, p, c.q()); };
  for (double g : {0.01, 0.1, 1.0, 4.0})
    EXPECT_NEAR(pdf_sir_eve_asym_with(g, p, c.q()), richardson(f, g), 1e-7 * std::max(1.0, richardson(f, g)));
}

TEST(AsymptoticSu, GilPelaezEqualsErfFormAtAlpha4) {
  const auto c = fig3();
  const auto gp = make_sir_cdf(SirKind::su_asym_gilpelaez, c);
  const auto a4 = make_sir_cdf(SirKind::su_asym_alpha4, c);
  for (int i = 0; i < 20; ++i) {
    const double g = std::pow(10.0, -3.0 + 6.0 * i / 19.0);
    EXPECT_NEAR(gp(g), a4(g), 1e-4) << g;
  }
}

TEST(AsymptoticSu, GilPelaezAgainstStableSeries) {
  for (double alpha : {3.0, 4.0, 5.0}) {
    auto c = fig3();
    c.alpha = alpha;
    c.r_p = 6.0;
    c.p_s.reset();
    c = with_resolved_power(c);
    const double q = c.q();
    const double scale = large_array_scale(c, xi(c));
    const auto cf = large_array_interference_cf(scale, q);
    for (double g : {0.1, 1.0, 10.0}) {
      const double point = c.mu * c.n_s / (g * std::pow(c.r_s, c.alpha));
      if (scale * std::pow(point, -q) > 15.0) continue;
      EXPECT_NEAR(cdf_sir_su_asym_with(g, c, cf), 1.0 - stable_cdf_series(point, scale, q), 1e-7)
          << alpha << " " << g;
    }
  }
}

TEST(AsymptoticSu, ErfFormIsLevyLaw) {
  // At alpha = 4 the interference is Levy with scale C^2 / 2.
  const auto c = fig3();
  const double cc = large_array_scale(c, xi(c));
  for (double g : {0.1, 1.0, 10.0}) {
    const double point = c.mu * c.n_s / (g * std::pow(c.r_s, 4.0));
    const double levy = boost::math::erfc(std::sqrt(cc * cc / 2.0 / (2.0 * point)));
    EXPECT_NEAR(cdf_sir_su_asym_alpha4(g, c), 1.0 - levy, 1e-12);
  }
  auto c3 = c;
  c3.alpha = 3.0;
  EXPECT_THROW(cdf_sir_su_asym_alpha4(1.0, c3), DomainError);
  EXPECT_THROW(make_sir_cdf(SirKind::su_asym_alpha4, c3), DomainError);
}

TEST(AsymptoticSu, ApproachesExactForLargeArrays) {
  auto c = fig3();
  c.mu = 0.6;
  double prev = INFINITY;
  for (int n : {8, 32, 128}) {
    c.n_s = n;
    const auto ex = make_sir_cdf(SirKind::su_exact, c);
    const auto as = make_sir_cdf(SirKind::su_asym_alpha4, c);
    double gap = 0.0;
    for (double g : {0.1, 1.0, 10.0}) gap = std::max(gap, std::abs(ex(g) - as(g)));
    EXPECT_LT(gap, prev) << n;
    prev = gap;
  }
}

TEST(SirCdfBundle, MatchesDirectCalls) {
  const auto c = fig3();
  for (double g : {0.1, 2.0}) {
    EXPECT_DOUBLE_EQ(make_sir_cdf(SirKind::su_exact, c)(g), cdf_sir_su(g, c));
    EXPECT_DOUBLE_EQ(make_sir_cdf(SirKind::eve_exact, c)(g), cdf_sir_eve(g, c));
    EXPECT_DOUBLE_EQ(make_sir_cdf(SirKind::eve_asym, c)(g), cdf_sir_eve_asym(g, c));
    EXPECT_NEAR(make_sir_cdf(SirKind::su_asym_gilpelaez, c)(g), cdf_sir_su_asym(g, c), 1e-15);
  }
  EXPECT_EQ(to_string(SirKind::eve_asym), "eve_asym");
}
