#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <stop_token>
#include <string>
#include <vector>

#include "secrecy/errors.hpp"

namespace secrecy::numerics {

// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

// Phi(x) = (1/sqrt(pi)) * int_0^{x^2} e^{-t} t^{-1/2} dt, which is erf(x) after t = u^2.
inline double phi_fn(double x) {
  if (!(x >= 0.0)) throw DomainError("phi_fn: argument must be non-negative");
  return std::erf(x);
}

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 2000;
  std::stop_token stop = {};

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw DomainError("QuadratureSpec: tolerances must be strictly positive");
    if (max_subdivisions < 1) throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
  }
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  long evaluations = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21 constants).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452038, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod21(F& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = 0.0;
  double resk = kWgk[10] * fc;
  double resabs = std::abs(resk);
  std::array<double, 10> fv1{}, fv2{};
  for (int j = 0; j < 5; ++j) {
    const int jtw = 2 * j + 1;
    const double dx = half * kXgk[jtw];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 5; ++j) {
    const int jtwm1 = 2 * j;
    const double dx = half * kXgk[jtwm1];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j)
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  const double result = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double abserr = std::abs((resk - resg) * half);
  if (resasc != 0.0 && abserr != 0.0)
    abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
  if (resabs > uflow / (50.0 * eps)) abserr = std::max(eps * 50.0 * resabs, abserr);
  if (!std::isfinite(result)) abserr = std::numeric_limits<double>::infinity();
  return {a, b, result, abserr};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (21 point) on a finite interval. The integrand is
// never evaluated at the endpoints, so integrable endpoint singularities are allowed.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (a == b) return {};
  auto g = [&f](double x) { return static_cast<double>(f(x)); };
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gauss_kronrod21(g, a, b);
  long evals = 21;
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  int intervals = 1;
  auto tolerance = [&] { return std::max(spec.abs_tol, spec.rel_tol * std::abs(total)); };
  while (total_err > tolerance()) {
    if (spec.stop.stop_requested()) throw CancelledError();
    if (intervals >= spec.max_subdivisions)
      throw ConvergenceError("integrate: subdivision limit reached", total, total_err);
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= std::min(worst.a, worst.b) || mid >= std::max(worst.a, worst.b))
      throw ConvergenceError("integrate: interval collapsed below machine resolution", total,
                             total_err);
    heap.pop();
    auto left = detail::gauss_kronrod21(g, worst.a, mid);
    auto right = detail::gauss_kronrod21(g, mid, worst.b);
    evals += 42;
    ++intervals;
    heap.push(left);
    heap.push(right);
    // Re-accumulate occasionally to avoid drift from repeated subtraction.
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    if (intervals % 64 == 0) {
      auto copy = heap;
      numerics::KahanSum v, e;
      while (!copy.empty()) {
        v += copy.top().value;
        e += copy.top().error;
        copy.pop();
      }
      total = v.value();
      total_err = e.value();
    }
  }
  if (!std::isfinite(total))
    throw ConvergenceError("integrate: non-finite integrand", total, total_err);
  return {total, total_err, intervals, evals};
}

// int_0^inf f(x) dx through x = t/(1-t) on (0,1) followed by adaptive subdivision.
template <class F>
QuadResult quad_semi_infinite(F&& f, const QuadratureSpec& spec = {}) {
  auto mapped = [&f](double t) {
    const double one_minus = 1.0 - t;
    const double x = t / one_minus;
    if (!std::isfinite(x)) return 0.0;
    const double v = static_cast<double>(f(x));
    if (v == 0.0) return 0.0;
    return v / (one_minus * one_minus);
  };
  return integrate(mapped, 0.0, 1.0, spec);
}

// int_0^inf f(x) dx split at `pivot` and taken in logarithmic coordinates on both sides,
// x = pivot * e^{-s} and x = pivot * e^{s}. Keeps sharply localised integrands visible to the
// quadrature regardless of their absolute scale.
template <class F>
QuadResult quad_log_split(F&& f, double pivot, const QuadratureSpec& spec = {}) {
  if (!(pivot > 0.0) || !std::isfinite(pivot)) throw DomainError("quad_log_split: bad pivot");
  auto lower = [&](double s) {
    const double x = pivot * std::exp(-s);
    if (x == 0.0) return 0.0;
    return static_cast<double>(f(x)) * x;
  };
  auto upper = [&](double s) {
    const double x = pivot * std::exp(s);
    if (!std::isfinite(x)) return 0.0;
    const double v = static_cast<double>(f(x));
    return v == 0.0 ? 0.0 : v * x;
  };
  QuadratureSpec half = spec;
  half.abs_tol = 0.5 * spec.abs_tol;
  auto lo = quad_semi_infinite(lower, half);
  auto hi = quad_semi_infinite(upper, half);
  return {lo.value + hi.value, lo.abs_error + hi.abs_error, lo.intervals + hi.intervals,
          lo.evaluations + hi.evaluations};
}

// Characteristic function psi(w) = E[exp(j w X)] of a real random variable, evaluable on the
// complex plane along the integration contour.
struct CharacteristicFunction {
  std::function<std::complex<double>(std::complex<double>)> evaluate;
  // Power q of the envelope |psi(w)| <= exp(-envelope_rate * |w|^q) on the real axis.
  double decay_exponent = 1.0;
  double envelope_rate = 0.0;
  // Contour angle: the inversion integral runs along w = rho * exp(-j * tilt). Zero is the real
  // axis. A nonzero tilt is valid only where e^{-jwx} psi(w) is analytic and decays in the swept
  // sector.
  double tilt = 0.0;
};

// Gil-Pelaez inversion F(x) = 1/2 - (1/pi) int_0^inf Im[e^{-jwx} psi(w)] / w dw.
// The substitution w = u^{1/q} removes the w^{q-1} endpoint behaviour. On the real axis the
// integral is truncated where the envelope drops below 1e-12.
inline double gil_pelaez_cdf(const CharacteristicFunction& cf, double point,
                             const QuadratureSpec& spec = {}) {
  if (!cf.evaluate) throw DomainError("gil_pelaez_cdf: empty characteristic function");
  if (!std::isfinite(point)) throw DomainError("gil_pelaez_cdf: point must be finite");
  const double q = cf.decay_exponent;
  if (!(q > 0.0) || q > 2.0) throw DomainError("gil_pelaez_cdf: decay exponent out of range");
  if (!(std::abs(cf.tilt) < std::numbers::pi / 2))
    throw DomainError("gil_pelaez_cdf: tilt must lie in (-pi/2, pi/2)");

  const std::complex<double> direction = std::polar(1.0, -cf.tilt);
  const std::complex<double> j(0.0, 1.0);
  auto integrand = [&](double u) {
    const double rho = std::pow(u, 1.0 / q);
    const std::complex<double> w = rho * direction;
    const std::complex<double> v = std::exp(-j * w * point) * cf.evaluate(w);
    return v.imag() / (q * u);
  };

  double integral = 0.0;
  if (cf.tilt == 0.0) {
    if (!(cf.envelope_rate > 0.0))
      throw DomainError("gil_pelaez_cdf: real-axis inversion needs a decaying envelope");
    const double u_max = -std::log(1e-12) / cf.envelope_rate;
    integral = integrate(integrand, 0.0, u_max, spec).value;
  } else {
    integral = quad_semi_infinite(integrand, spec).value;
  }
  // Rotating the contour from the real axis picks up -tilt from the 1/w pole at the origin.
  const double value = 0.5 - (integral - cf.tilt) / std::numbers::pi;
  return std::clamp(value, 0.0, 1.0);
}

// d^m/dx^m exp(c * x^p) for m = 0..m_max via f^{(m)} = sum_k C(m-1,k) g^{(m-k)} f^{(k)}.
inline std::vector<double> exp_composite_derivatives(double c, double p, double x, int m_max) {
  if (!(x > 0.0)) throw DomainError("exp_composite_derivatives: x must be positive");
  if (m_max < 0) throw DomainError("exp_composite_derivatives: m_max must be >= 0");
  std::vector<double> g(static_cast<std::size_t>(m_max) + 1, 0.0);
  double falling = 1.0;
  for (int j = 1; j <= m_max; ++j) {
    falling *= (p - (j - 1));
    g[j] = c * falling * std::pow(x, p - j);
  }
  std::vector<double> f(static_cast<std::size_t>(m_max) + 1, 0.0);
  f[0] = std::exp(c * std::pow(x, p));
  for (int m = 1; m <= m_max; ++m) {
    KahanSum acc;
    double binom = 1.0;  // C(m-1, k)
    for (int k = 0; k <= m - 1; ++k) {
      acc += binom * g[m - k] * f[k];
      binom = binom * (m - 1 - k) / (k + 1);
    }
    f[m] = acc.value();
  }
  return f;
}

}  // namespace secrecy::numerics
