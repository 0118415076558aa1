#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "secrecy/metrics.hpp"
#include "secrecy/montecarlo.hpp"

using namespace secrecy;
using namespace secrecy::mc;

namespace {

NetworkConfig fig2() {
  NetworkConfig c;
  c.lambda_p = 1e-4;
  c.lambda_s = 1e-3;
  c.lambda_e = 1e-4;
  c.alpha = 4.0;
  c.r_p = 15.0;
  c.r_s = 10.0;
  c.p_p = dbm_to_watt(36.0);
  c.n_s = 4;
  c.mu = 0.4;
  c.gamma_th_p = 1.0;
  c.gamma_th_s = 1.0;
  c.rho_out_p = 0.15;
  c.r_s_rate = 1.0;
  return c;
}

McOptions opts(long n, std::uint64_t seed = 11) {
  McOptions o;
  o.n = n;
  o.seed = seed;
  return o;
}

// Two-sided 99.9% Kolmogorov bound.
double ks_bound(long n) { return 1.95 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST(Rng, MomentsOfBaseDraws) {
  Rng rng(42);
  constexpr int n = 200000;
  double u = 0, e = 0, g = 0, g2 = 0, g20 = 0, cn = 0;
  long p = 0;
  for (int i = 0; i < n; ++i) {
    u += rng.uniform();
    e += rng.exponential();
    const double x = rng.gamma(5);
    g += x;
    g2 += x * x;
    g20 += rng.gamma(20);
    cn += std::norm(rng.complex_normal());
    p += rng.poisson(3.5);
  }
  EXPECT_NEAR(u / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(e / n, 1.0, 4 / std::sqrt(double(n)));
  EXPECT_NEAR(g / n, 5.0, 4 * std::sqrt(5.0 / n));
  EXPECT_NEAR(g2 / n - (g / n) * (g / n), 5.0, 0.1);
  EXPECT_NEAR(g20 / n, 20.0, 4 * std::sqrt(20.0 / n));
  EXPECT_NEAR(cn / n, 1.0, 4 / std::sqrt(double(n)));
  EXPECT_NEAR(double(p) / n, 3.5, 4 * std::sqrt(3.5 / n));
  EXPECT_EQ(rng.gamma(0), 0.0);
  EXPECT_EQ(rng.poisson(0.0), 0);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  EXPECT_EQ(stream_key(1, 5, Stream::su), stream_key(1, 5, Stream::su));
  EXPECT_NE(stream_key(1, 5, Stream::su), stream_key(1, 5, Stream::eve));
  EXPECT_NE(stream_key(1, 5, Stream::su), stream_key(1, 6, Stream::su));
  EXPECT_NE(stream_key(1, 5, Stream::su), stream_key(2, 5, Stream::su));
  Rng a(stream_key(3, 0, Stream::pu)), b(stream_key(3, 0, Stream::pu));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  EXPECT_NE(child_key(7, 1), child_key(7, 2));
}

TEST(Hppp, CountAndRadialLaw) {
  Rng rng(9);
  const double lambda = 1e-3, radius = 200.0;
  const double mean = lambda * std::numbers::pi * radius * radius;
  double total = 0;
  std::vector<double> r2;
  for (int k = 0; k < 400; ++k) {
    const auto pts = sample_hppp(lambda, radius, rng);
    total += static_cast<double>(pts.size());
    for (const auto& p : pts) r2.push_back((p.x * p.x + p.y * p.y) / (radius * radius));
  }
  EXPECT_NEAR(total / 400, mean, 4 * std::sqrt(mean / 400));
  EXPECT_LT(ks_distance(r2, [](double v) { return std::clamp(v, 0.0, 1.0); }),
            ks_bound(static_cast<long>(r2.size())));
  EXPECT_THROW(sample_hppp(1.0, 1e4, rng), ResourceError);
  EXPECT_THROW(sample_hppp(-1.0, 10.0, rng), DomainError);
}

TEST(NullSpace, OrthonormalAndOrthogonalToChannel) {
  Rng rng(5);
  for (int n : {2, 4, 9}) {
    ComplexVector h(static_cast<std::size_t>(n));
    for (auto& v : h) v = rng.complex_normal();
    const auto basis = null_space_basis(h);
    ASSERT_EQ(basis.size(), static_cast<std::size_t>(n - 1));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      std::complex<double> dh = 0.0;
      for (int k = 0; k < n; ++k) dh += std::conj(h[k]) * basis[i][k];
      EXPECT_LT(std::abs(dh), 1e-12);
      for (std::size_t j = 0; j < basis.size(); ++j) {
        std::complex<double> d = 0.0;
        for (int k = 0; k < n; ++k) d += std::conj(basis[i][k]) * basis[j][k];
        EXPECT_NEAR(std::abs(d), i == j ? 1.0 : 0.0, 1e-12);
      }
    }
  }
  EXPECT_THROW(null_space_basis({{1.0, 0.0}}), DomainError);
}

TEST(FullVectorModel, InterfererWeightHasMarkedLaw) {
  // sigma_s^2 |h w|^2 + sigma_n^2 ||h G||^2 against sigma_s^2 Exp(1) + sigma_n^2 Gamma(N_s - 1).
  constexpr int n = 20000;
  const double ss = 0.7, sn = 0.1;
  Rng a(101), b(202);
  std::vector<double> full(n), marked(n);
  for (int i = 0; i < n; ++i) {
    full[i] = full_vector_interferer_weight(4, ss, sn, a);
    marked[i] = ss * b.exponential() + sn * b.gamma(3);
  }
  EXPECT_LT(ks_two_sample(full, marked), 1.95 * std::sqrt(2.0 / n));
}

TEST(FullVectorModel, LargeArrayGainsConcentrate) {
  // ||h||^2 / N_s and ||h G||^2 / (N_s - 1) both tend to one.
  constexpr int n_s = 64, draws = 10000;
  Rng rng(77);
  double sum_h = 0, sum_h2 = 0, sum_g = 0, sum_g2 = 0;
  for (int d = 0; d < draws; ++d) {
    ComplexVector h(n_s), z(n_s);
    for (auto& v : h) v = rng.complex_normal();
    for (auto& v : z) v = rng.complex_normal();
    double hn = 0;
    for (const auto& v : h) hn += std::norm(v);
    double an = 0;
    for (const auto& col : null_space_basis(h)) {
      std::complex<double> s = 0;
      for (int k = 0; k < n_s; ++k) s += z[k] * col[k];
      an += std::norm(s);
    }
    const double x = hn / n_s, y = an / (n_s - 1);
    sum_h += x;
    sum_h2 += x * x;
    sum_g += y;
    sum_g2 += y * y;
  }
  const double mh = sum_h / draws, mg = sum_g / draws;
  const double sh = std::sqrt((sum_h2 / draws - mh * mh) / draws);
  const double sg = std::sqrt((sum_g2 / draws - mg * mg) / draws);
  EXPECT_NEAR(mh, 1.0, 3 * sh);
  EXPECT_NEAR(mg, 1.0, 3 * sg);
}

TEST(Simulator, SuSirMatchesClosedForm) {
  const auto c = with_resolved_power(fig2());
  const auto s = sample_sir(SirSource::su, c, opts(20000));
  EXPECT_LT(ks_distance(s.values, make_sir_cdf(SirKind::su_exact, c).evaluate), ks_bound(20000));
}

TEST(Simulator, EveSirMatchesClosedForm) {
  // Shared interference across eavesdroppers leaves a small bias against the product form.
  const auto c = with_resolved_power(fig2());
  const auto s = sample_sir(SirSource::eve, c, opts(5000));
  EXPECT_LT(ks_distance(s.values, make_sir_cdf(SirKind::eve_exact, c).evaluate), 0.035);
}

TEST(Simulator, PuOutageMatchesClosedForm) {
  const auto c = fig2();
  const double p = *max_permissive_power(c).p_s_max;
  const auto e = estimate_pu_outage(c, p, opts(20000));
  EXPECT_NEAR(e.mean, pu_outage(c, p), 4 * e.std_error + 2e-3);
  const auto lo = estimate_pu_outage(c, 0.1 * p, opts(20000));
  EXPECT_NEAR(lo.mean, pu_outage(c, 0.1 * p), 4 * lo.std_error + 2e-3);
}

TEST(Simulator, LargeArrayInterferenceLaplace) {
  // E[exp(-s I)] = exp(-C s^q) with C the large-array scale.
  const auto c = with_resolved_power(fig2());
  const auto s = sample_sir(SirSource::large_array, c, opts(20000));
  const double cc = large_array_scale(c, xi(c));
  for (double t : {1e3, 1e4, 1e5}) {
    std::vector<double> v;
    for (double x : s.values) v.push_back(std::exp(-t * x));
    const auto e = summarize(v);
    EXPECT_NEAR(e.mean, std::exp(-cc * std::pow(t, c.q())), 4 * e.std_error + 2e-3) << t;
  }
}

TEST(Simulator, FarFieldMeanFadingIsNegligible) {
  const auto c = with_resolved_power(fig2());
  auto exact = opts(4000);
  exact.exact_fading_radius = std::numeric_limits<double>::infinity();
  const auto a = sample_sir(SirSource::su, c, exact);
  const auto b = sample_sir(SirSource::su, c, opts(4000, 12));
  EXPECT_LT(ks_two_sample(a.values, b.values), 1.95 * std::sqrt(2.0 / 4000));
}

TEST(Estimators, AsrAndSopAgainstClosedForm) {
  const auto c = fig2();
  const auto asr = estimate_asr(c, opts(4000));
  EXPECT_NEAR(asr.mean, average_secrecy_rate(c).value, 4 * asr.std_error + 0.02);
  const auto sop = estimate_sop(c, 1.0, opts(4000));
  EXPECT_NEAR(sop.mean, secrecy_outage(c, 1.0).value, 4 * sop.std_error + 0.01);
  EXPECT_GT(asr.radius_m, 0.0);
  EXPECT_EQ(asr.seed, 11u);
  EXPECT_EQ(asr.n, 4000);
}

TEST(Estimators, SharedFieldModeRuns) {
  const auto e = estimate_asr(fig2(), opts(1000), Pairing::shared_field);
  EXPECT_TRUE(std::isfinite(e.mean));
  EXPECT_GE(e.mean, 0.0);
}

TEST(Estimators, DeterministicAcrossThreadCounts) {
  auto one = opts(2000, 5);
  one.threads = 1;
  auto four = opts(2000, 5);
  four.threads = 4;
  const auto a = sample_secrecy_rates(fig2(), one);
  const auto b = sample_secrecy_rates(fig2(), four);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(sample_secrecy_rates(fig2(), one).values, a.values);
  EXPECT_NE(sample_secrecy_rates(fig2(), opts(2000, 6)).values, a.values);
  const auto pa = estimate_pu_outage(fig2(), 0.005, one);
  const auto pb = estimate_pu_outage(fig2(), 0.005, four);
  EXPECT_EQ(pa.mean, pb.mean);
  EXPECT_EQ(pa.std_error, pb.std_error);
}

TEST(Estimators, GuardsAndCancellation) {
  EXPECT_THROW(estimate_asr(fig2(), opts(999)), DomainError);
  EXPECT_THROW(estimate_sop(fig2(), -1.0, opts(1000)), DomainError);
  std::stop_source src;
  src.request_stop();
  auto o = opts(5000);
  o.stop = src.get_token();
  EXPECT_THROW(estimate_asr(fig2(), o), CancelledError);
  auto big = opts(1000);
  big.radius = 1e6;
  EXPECT_THROW(estimate_asr(fig2(), big), ResourceError);
}

TEST(Estimators, EmpiricalCdfAndSummaries) {
  const auto e = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_LT(e.ci_low, e.mean);
  EXPECT_GT(e.ci_high, e.mean);
  SampleSet s;
  s.values = {0.5, 1.5, 2.5, 3.5};
  const auto cdf = empirical_cdf(s, {0.0, 1.0, 3.0, 10.0});
  EXPECT_DOUBLE_EQ(cdf[0].mean, 0.0);
  EXPECT_DOUBLE_EQ(cdf[1].mean, 0.25);
  EXPECT_DOUBLE_EQ(cdf[2].mean, 0.75);
  EXPECT_DOUBLE_EQ(cdf[3].mean, 1.0);
  const auto grid = estimate_cdf_su(fig2(), {0.1, 1.0, 10.0}, opts(2000));
  EXPECT_LE(grid[0].mean, grid[1].mean);
  EXPECT_LE(grid[1].mean, grid[2].mean);
}

TEST(Estimators, KsHelpers) {
  std::vector<double> u;
  for (int i = 0; i < 100; ++i) u.push_back((i + 0.5) / 100);
  EXPECT_NEAR(ks_distance(u, [](double x) { return x; }), 0.005, 1e-12);
  EXPECT_EQ(ks_two_sample(u, u), 0.0);
  EXPECT_THROW(ks_distance({}, [](double x) { return x; }), DomainError);
  EXPECT_EQ(secrecy_rate(3.0, 1.0), 1.0);
  EXPECT_EQ(secrecy_rate(1.0, 3.0), 0.0);
}
