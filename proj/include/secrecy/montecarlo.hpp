#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <stop_token>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "secrecy/errors.hpp"
#include "secrecy/model.hpp"
#include "secrecy/numerics.hpp"

namespace secrecy::mc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 stream. Cheap to construct from a key, so every snapshot (and every
// interferer-receiver pair) gets its own stream derived from counters only.
class Rng {
 public:
  using result_type = std::uint64_t;
  explicit Rng(std::uint64_t key) : state_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    state_ += kGolden;
    return mix64(state_);
  }
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double open_uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential() { return -std::log(open_uniform()); }
  // Gamma(k, 1) for integer shape k >= 0.
  double gamma(int k) {
    if (k <= 0) return 0.0;
    if (k <= 16) {
      double p = 1.0;
      for (int i = 0; i < k; ++i) p *= open_uniform();
      return -std::log(p);
    }
    std::gamma_distribution<double> d(static_cast<double>(k), 1.0);
    return d(*this);
  }
  long poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<long> d(mean);
    return d(*this);
  }
  // Circularly symmetric CN(0, 1).
  std::complex<double> complex_normal() {
    const double r = std::sqrt(exponential());
    const double t = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  std::uint64_t state_;
};

enum class Stream : std::uint64_t { su = 1, eve = 2, pu = 3, large_array = 4, shared = 5, field = 6 };

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, Stream s) {
  return mix64(mix64(seed ^ 0x5851F42D4C957F2DULL) ^
               mix64(index * kGolden + static_cast<std::uint64_t>(s)));
}

inline std::uint64_t child_key(std::uint64_t parent, std::uint64_t id) {
  return mix64(parent ^ mix64(id + 0x2545F4914F6CDD1DULL));
}

struct Point {
  double x = 0.0, y = 0.0;
};

inline constexpr long kDefaultCountCap = 10'000'000;

inline std::vector<Point> sample_hppp(double density, double radius, Rng& rng,
                                      long cap = kDefaultCountCap) {
  if (!(density >= 0.0) || !(radius > 0.0)) throw DomainError("sample_hppp: bad density/radius");
  const double mean = density * std::numbers::pi * radius * radius;
  if (mean > static_cast<double>(cap))
    throw ResourceError("sample_hppp: expected point count " + std::to_string(mean) +
                        " exceeds cap " + std::to_string(cap));
  const long n = rng.poisson(mean);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(rng.uniform());
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return pts;
}

using ComplexVector = std::vector<std::complex<double>>;
using ComplexMatrix = std::vector<ComplexVector>;  // list of columns

// Orthonormal basis of the orthogonal complement of h (N_s - 1 columns).
inline ComplexMatrix null_space_basis(const ComplexVector& h) {
  const std::size_t n = h.size();
  if (n < 2) throw DomainError("null_space_basis: need at least two antennas");
  double norm = 0.0;
  for (const auto& v : h) norm += std::norm(v);
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DomainError("null_space_basis: zero channel vector");

  ComplexMatrix basis;
  ComplexVector first(n);
  for (std::size_t k = 0; k < n; ++k) first[k] = h[k] / norm;
  basis.push_back(first);

  // Try coordinate directions least aligned with h first.
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(h[a]) < std::abs(h[b]); });
  for (std::size_t idx : order) {
    if (basis.size() == n) break;
    ComplexVector u(n, 0.0);
    u[idx] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& col : basis) {
        std::complex<double> dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += std::conj(col[k]) * u[k];
        for (std::size_t k = 0; k < n; ++k) u[k] -= dot * col[k];
      }
    }
    double un = 0.0;
    for (const auto& v : u) un += std::norm(v);
    un = std::sqrt(un);
    if (un < 1e-6) continue;
    for (auto& v : u) v /= un;
    basis.push_back(std::move(u));
  }
  basis.erase(basis.begin());
  return basis;
}

// Interference weight of one SU interferer at an unrelated receiver, built from full channel
// vectors: beamformer along the interferer's own intended channel, AN spread over its null space.
inline double full_vector_interferer_weight(int n_s, double sigma_s_sq, double sigma_n_sq,
                                            Rng& rng) {
  ComplexVector h0(static_cast<std::size_t>(n_s)), hz(static_cast<std::size_t>(n_s));
  for (auto& v : h0) v = rng.complex_normal();
  for (auto& v : hz) v = rng.complex_normal();
  double n0 = 0.0;
  for (const auto& v : h0) n0 += std::norm(v);
  n0 = std::sqrt(n0);
  std::complex<double> hw = 0.0;
  for (int k = 0; k < n_s; ++k) hw += hz[k] * std::conj(h0[k]) / n0;
  double an = 0.0;
  if (n_s > 1) {
    // Columns of the orthogonal complement of conj(h0), so they are orthogonal to the beamformer.
    ComplexVector h0c(h0.size());
    for (std::size_t k = 0; k < h0.size(); ++k) h0c[k] = std::conj(h0[k]);
    for (const auto& col : null_space_basis(h0c)) {
      std::complex<double> v = 0.0;
      for (int k = 0; k < n_s; ++k) v += hz[k] * col[k];
      an += std::norm(v);
    }
  }
  return sigma_s_sq * std::norm(hw) + sigma_n_sq * an;
}

struct McOptions {
  long n = 100000;
  std::uint64_t seed = 1;
  std::optional<double> radius;  // simulation disk radius (m)
  // Interferers farther than this from a receiver enter with their fading replaced by its mean.
  // Infinity keeps per-link fading everywhere.
  std::optional<double> exact_fading_radius;
  // Eavesdroppers are simulated inside the disk holding this many of them on average.
  double eve_horizon_count = 50.0;
  bool redraw_empty = true;
  int threads = 0;  // 0: SECRECY_THREADS or hardware concurrency
  long count_cap = kDefaultCountCap;
  std::stop_token stop = {};
};

inline double default_radius(const NetworkConfig& cfg) {
  const double lmin = std::min({cfg.lambda_p, cfg.lambda_s, cfg.lambda_e});
  return std::max(30.0 / std::sqrt(lmin), 10.0 * std::max(cfg.r_p, cfg.r_s));
}

inline double default_exact_fading_radius(const NetworkConfig& cfg) {
  return std::max(10.0 / std::sqrt(cfg.lambda_s + cfg.lambda_p), 10.0 * std::max(cfg.r_p, cfg.r_s));
}

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SECRECY_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct SnapshotCounters {
  long redraws = 0;
  long divergent = 0;
};

struct FieldSnapshot {
  std::vector<Point> su_points, pu_points, eve_points;
  std::vector<double> su_weights;  // sigma_s^2 E + sigma_n^2 G
  std::vector<double> pu_gains;
  double intended_gain = 0.0;      // ||h_0||^2 ~ Gamma(N_s, 1)
  double radius_m = 0.0;
};

inline FieldSnapshot draw_field_snapshot(const NetworkConfig& cfg_in, double radius, Rng& rng,
                                         long cap = kDefaultCountCap) {
  const NetworkConfig cfg = with_resolved_power(cfg_in);
  const double p_s = *cfg.p_s;
  const double ss = cfg.mu * p_s;
  const double sn = cfg.n_s > 1 ? (p_s - ss) / (cfg.n_s - 1) : 0.0;
  FieldSnapshot f;
  f.radius_m = radius;
  f.su_points = sample_hppp(cfg.lambda_s, radius, rng, cap);
  f.pu_points = sample_hppp(cfg.lambda_p, radius, rng, cap);
  f.eve_points = sample_hppp(cfg.lambda_e, radius, rng, cap);
  for (std::size_t i = 0; i < f.su_points.size(); ++i) {
    const double e = rng.exponential();
    f.su_weights.push_back(sn > 0.0 ? ss * e + sn * rng.gamma(cfg.n_s - 1) : ss * e);
  }
  for (std::size_t i = 0; i < f.pu_points.size(); ++i) f.pu_gains.push_back(rng.exponential());
  f.intended_gain = rng.gamma(cfg.n_s);
  return f;
}

namespace detail {

// d2^{-alpha/2} with exact fast paths for the common exponents.
inline double path_gain(double d2, double alpha) {
  if (alpha == 4.0) return 1.0 / (d2 * d2);
  if (alpha == 3.0) return 1.0 / (d2 * std::sqrt(d2));
  if (alpha == 5.0) return 1.0 / (d2 * d2 * std::sqrt(d2));
  if (alpha == 6.0) return 1.0 / (d2 * d2 * d2);
  return std::pow(d2, -0.5 * alpha);
}

// Allocator whose resize leaves new elements uninitialized; every slot is written right after.
template <class T>
struct UninitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = UninitAllocator<U>;
  };
  UninitAllocator() = default;
  template <class U>
  UninitAllocator(const UninitAllocator<U>&) noexcept {}
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

template <class T>
using ScratchVector = std::vector<T, UninitAllocator<T>>;

struct FieldSoA {
  ScratchVector<double> x, y;
  ScratchVector<std::uint64_t> id;
  void push(double px, double py, std::uint64_t pid) {
    x.push_back(px);
    y.push_back(py);
    id.push_back(pid);
  }
  std::size_t size() const { return x.size(); }
};

// Uniform points in the annulus r_in < |p| <= r_out, by rejection from the bounding square.
// Both coordinates come from one 64-bit draw (32 bits each, sub-micrometre resolution at the
// radii used here).
inline void fill_annulus(FieldSoA& out, long count, double r_in, double r_out, Rng& rng,
                         std::uint64_t id_base, bool with_ids = true) {
  const double in2 = r_in * r_in, out2 = r_out * r_out;
  const std::size_t start = out.x.size();
  out.x.resize(start + count);
  out.y.resize(start + count);
  if (with_ids) out.id.resize(start + count);
  double* px = out.x.data() + start;
  double* py = out.y.data() + start;
  const double scale = 2.0 * r_out * 0x1.0p-32;
  for (long i = 0; i < count;) {
    const std::uint64_t bits = rng();
    const double x = static_cast<double>(bits >> 32) * scale - r_out;
    const double y = static_cast<double>(bits & 0xFFFFFFFFull) * scale - r_out;
    const double d2 = x * x + y * y;
    if (d2 > out2 || d2 <= in2) continue;
    px[i] = x;
    py[i] = y;
    if (with_ids) out.id[start + i] = id_base + static_cast<std::uint64_t>(i);
    ++i;
  }
}

}  // namespace detail

// Snapshot generator for one configuration. Every snapshot is a pure function of
// (seed, index, stream), so results do not depend on scheduling.
class Simulator {
 public:
  struct Geometry {
    double radius = 0.0;
    double exact_radius = 0.0;
    double eve_radius = 0.0;
  };

  Simulator(const NetworkConfig& cfg, const McOptions& opts)
      : cfg_(with_resolved_power(cfg)), opts_(opts) {
    geo_.radius = opts.radius.value_or(default_radius(cfg_));
    if (!(geo_.radius > 0.0)) throw DomainError("Simulator: radius must be > 0");
    geo_.exact_radius =
        std::min(geo_.radius, opts.exact_fading_radius.value_or(default_exact_fading_radius(cfg_)));
    if (!(geo_.exact_radius > 0.0)) throw DomainError("Simulator: exact fading radius must be > 0");
    geo_.eve_radius = std::min(
        geo_.radius, std::sqrt(opts.eve_horizon_count / (std::numbers::pi * cfg_.lambda_e)));
    p_s_ = *cfg_.p_s;
    sigma_s_sq_ = cfg_.mu * p_s_;
    sigma_n_sq_ = cfg_.n_s > 1 ? (p_s_ - sigma_s_sq_) / (cfg_.n_s - 1) : 0.0;
    const double area = std::numbers::pi * geo_.radius * geo_.radius;
    if ((cfg_.lambda_s + cfg_.lambda_p) * area > static_cast<double>(opts.count_cap))
      throw ResourceError("Simulator: expected interferer count exceeds cap");
  }

  const NetworkConfig& config() const { return cfg_; }
  const Geometry& geometry() const { return geo_; }
  double p_s() const { return p_s_; }

  double su_sir(std::uint64_t index, SnapshotCounters& c) const {
    Rng rng(stream_key(opts_.seed, index, Stream::su));
    return su_sir_from(rng, c);
  }
  double eve_sir(std::uint64_t index, SnapshotCounters& c) const {
    Rng rng(stream_key(opts_.seed, index, Stream::eve));
    return eve_sir_from(rng, c);
  }
  double pu_sir(std::uint64_t index, double p_s, SnapshotCounters& c) const {
    Rng rng(stream_key(opts_.seed, index, Stream::pu));
    return pu_sir_from(rng, p_s, c);
  }
  double large_array_interference(std::uint64_t index, SnapshotCounters& c) const {
    Rng rng(stream_key(opts_.seed, index, Stream::large_array));
    return large_array_interference_from(rng, c);
  }
  // SU and eavesdropper SIR from one shared field realization.
  std::pair<double, double> shared_pair(std::uint64_t index, SnapshotCounters& c) const {
    Rng rng(stream_key(opts_.seed, index, Stream::shared));
    return shared_pair_from(rng, c);
  }

  double su_weight(Rng& rng) const {
    const double e = rng.exponential();
    return sigma_n_sq_ > 0.0 ? sigma_s_sq_ * e + sigma_n_sq_ * rng.gamma(cfg_.n_s - 1)
                             : sigma_s_sq_ * e;
  }

  double su_sir_from(Rng& rng, SnapshotCounters& c) const {
    const double num = sigma_s_sq_ * rng.gamma(cfg_.n_s) * detail::path_gain(cfg_.r_s * cfg_.r_s, cfg_.alpha);
    for (int attempt = 0;; ++attempt) {
      long count = 0;
      const double i_s = origin_field(cfg_.lambda_s, p_s_, rng, count,
                                      [this](Rng& r) { return su_weight(r); });
      const double i_p = origin_field(cfg_.lambda_p, 1.0, rng, count,
                                      [](Rng& r) { return r.exponential(); });
      if (count > 0) return num / (i_s + cfg_.p_p * i_p);
      if (!retry_empty(attempt, c)) return std::numeric_limits<double>::infinity();
    }
  }

  double pu_sir_from(Rng& rng, double p_s, SnapshotCounters& c) const {
    if (!(p_s > 0.0)) throw DomainError("pu_sir: p_s must be > 0");
    const double scale = p_s / p_s_;
    const double num = rng.exponential() * detail::path_gain(cfg_.r_p * cfg_.r_p, cfg_.alpha);
    for (int attempt = 0;; ++attempt) {
      long count = 0;
      const double i_p = origin_field(cfg_.lambda_p, 1.0, rng, count,
                                      [](Rng& r) { return r.exponential(); });
      const double i_s = origin_field(cfg_.lambda_s, p_s, rng, count,
                                      [&](Rng& r) { return scale * su_weight(r); });
      if (count > 0) return num / (i_p + i_s / cfg_.p_p);
      if (!retry_empty(attempt, c)) return std::numeric_limits<double>::infinity();
    }
  }

  // Aggregate interference of the large-array limit: PU marks E/eta, SU marks mu E + 1 - mu.
  double large_array_interference_from(Rng& rng, SnapshotCounters&) const {
    const double eta = p_s_ / cfg_.p_p;
    const double mu = cfg_.mu;
    long count = 0;
    const double i_p = origin_field(cfg_.lambda_p, 1.0 / eta, rng, count,
                                    [eta](Rng& r) { return r.exponential() / eta; });
    const double i_s = origin_field(cfg_.lambda_s, 1.0, rng, count,
                                    [mu](Rng& r) { return mu * r.exponential() + 1.0 - mu; });
    return i_p + i_s;
  }

  double eve_sir_from(Rng& rng, SnapshotCounters& c) const {
    for (int attempt = 0;; ++attempt) {
      Field f = draw_shared_field(rng, false);
      if (f.total_count == 0 && !retry_empty(attempt, c))
        return std::numeric_limits<double>::infinity();
      if (f.total_count == 0) continue;
      return max_eve_sir(f);
    }
  }

  std::pair<double, double> shared_pair_from(Rng& rng, SnapshotCounters& c) const {
    for (int attempt = 0;; ++attempt) {
      Field f = draw_shared_field(rng, true);
      if (f.total_count == 0) {
        if (!retry_empty(attempt, c)) {
          const double inf = std::numeric_limits<double>::infinity();
          return {inf, inf};
        }
        continue;
      }
      Rng rx(child_key(f.key, 0xFFFFFFFFFFull));
      const double num = sigma_s_sq_ * rx.gamma(cfg_.n_s) *
                         detail::path_gain(cfg_.r_s * cfg_.r_s, cfg_.alpha);
      const double interference = exact_interference(f, cfg_.r_s, 0.0, child_key(f.key, 0xFFFFFFFFFEull));
      return {num / interference, max_eve_sir(f)};
    }
  }

 private:
  struct Field {
    detail::FieldSoA local_su, local_pu;  // within the local disk, positions kept
    detail::FieldSoA far_su, far_pu;      // beyond it, always mean-faded
    std::vector<Point> eves;
    std::vector<double> eve_signal, eve_an;
    double local_radius = 0.0;
    long total_count = 0;
    std::uint64_t key = 0;
    // Uniform grid over the local disk. local_su / local_pu are sorted by cell and
    // start_* holds the offset of each cell (one extra entry at the end).
    double cell = 1.0;
    int cells_per_side = 1;
    std::vector<std::uint32_t> start_su, start_pu;
  };

  bool retry_empty(int attempt, SnapshotCounters& c) const {
    if (!opts_.redraw_empty || attempt >= 1000) {
      ++c.divergent;
      return false;
    }
    ++c.redraws;
    return true;
  }

  // Interference at the origin from an HPPP of the given density in the simulation disk.
  template <class Draw>
  double origin_field(double density, double mean_weight, Rng& rng, long& count,
                      Draw&& draw) const {
    const double d = geo_.exact_radius;
    const double r = geo_.radius;
    const double alpha = cfg_.alpha;
    const long n_near = rng.poisson(density * std::numbers::pi * d * d);
    numerics::KahanSum near;
    for (long i = 0; i < n_near; ++i) {
      const double d2 = d * d * rng.open_uniform();
      near += draw(rng) * detail::path_gain(d2, alpha);
    }
    double far = 0.0;
    long n_far = 0;
    if (r > d) {
      n_far = rng.poisson(density * std::numbers::pi * (r * r - d * d));
      const double a = d * d, b = r * r - d * d;
      for (long i = 0; i < n_far; ++i) far += detail::path_gain(a + b * rng.uniform(), alpha);
    }
    count += n_near + n_far;
    return near.value() + mean_weight * far;
  }

  Field draw_shared_field(Rng& rng, bool with_su_receiver) const {
    Field f;
    f.key = rng();
    const double r = geo_.radius;
    const double reach = std::max(geo_.eve_radius, with_su_receiver ? cfg_.r_s : 0.0);
    f.local_radius = std::min(r, reach + geo_.exact_radius);

    const long n_eve = rng.poisson(cfg_.lambda_e * std::numbers::pi * geo_.eve_radius * geo_.eve_radius);
    for (long k = 0; k < n_eve; ++k) {
      const double rr = geo_.eve_radius * std::sqrt(rng.open_uniform());
      const double t = 2.0 * std::numbers::pi * rng.uniform();
      f.eves.push_back({rr * std::cos(t), rr * std::sin(t)});
    }
    for (long k = 0; k < n_eve; ++k) {
      Rng er(child_key(f.key, static_cast<std::uint64_t>(k)));
      const Point& z = f.eves[k];
      const double g = detail::path_gain(z.x * z.x + z.y * z.y, cfg_.alpha);
      f.eve_signal.push_back(sigma_s_sq_ * er.exponential() * g);
      f.eve_an.push_back(sigma_n_sq_ > 0.0 ? sigma_n_sq_ * er.gamma(cfg_.n_s - 1) * g : 0.0);
    }

    constexpr std::uint64_t kPuBase = 1ull << 40;
    const double lr = f.local_radius;
    const long n_su_local = rng.poisson(cfg_.lambda_s * std::numbers::pi * lr * lr);
    const long n_pu_local = rng.poisson(cfg_.lambda_p * std::numbers::pi * lr * lr);
    detail::fill_annulus(f.local_su, n_su_local, 0.0, lr, rng, 0);
    detail::fill_annulus(f.local_pu, n_pu_local, 0.0, lr, rng, kPuBase);
    if (r > lr) {
      const double ring = std::numbers::pi * (r * r - lr * lr);
      detail::fill_annulus(f.far_su, rng.poisson(cfg_.lambda_s * ring), lr, r, rng, 0, false);
      detail::fill_annulus(f.far_pu, rng.poisson(cfg_.lambda_p * ring), lr, r, rng, 0, false);
    }
    f.total_count = static_cast<long>(f.local_su.size() + f.local_pu.size() + f.far_su.size() +
                                      f.far_pu.size());

    f.cell = std::max(geo_.exact_radius / 3.0, 1e-9);
    f.cells_per_side = std::max(1, static_cast<int>(std::ceil(2.0 * lr / f.cell)));
    const std::size_t cells = static_cast<std::size_t>(f.cells_per_side) * f.cells_per_side;
    bucket(f, f.local_su, f.start_su, cells);
    bucket(f, f.local_pu, f.start_pu, cells);
    return f;
  }

  // Counting sort of a point set by grid cell.
  static void bucket(const Field& f, detail::FieldSoA& s, std::vector<std::uint32_t>& start,
                     std::size_t cells) {
    const std::size_t n = s.size();
    std::vector<std::uint32_t> cell_idx(n);
    start.assign(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      cell_idx[i] = static_cast<std::uint32_t>(cell_of(f, s.x[i], s.y[i]));
      ++start[cell_idx[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
    std::vector<std::uint32_t> pos(start.begin(), start.end() - 1);
    detail::FieldSoA sorted;
    sorted.x.resize(n);
    sorted.y.resize(n);
    sorted.id.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t j = pos[cell_idx[i]]++;
      sorted.x[j] = s.x[i];
      sorted.y[j] = s.y[i];
      sorted.id[j] = s.id[i];
    }
    s = std::move(sorted);
  }

  static int clamp_cell(const Field& f, double v) {
    const int c = static_cast<int>(std::floor((v + f.local_radius) / f.cell));
    return std::clamp(c, 0, f.cells_per_side - 1);
  }
  static std::size_t cell_of(const Field& f, double x, double y) {
    return static_cast<std::size_t>(clamp_cell(f, y)) * f.cells_per_side + clamp_cell(f, x);
  }

  double pair_su_weight(std::uint64_t rx_key, std::uint64_t id) const {
    Rng r(child_key(rx_key, id));
    return su_weight(r);
  }
  static double pair_pu_gain(std::uint64_t rx_key, std::uint64_t id) {
    Rng r(child_key(rx_key, id));
    return r.exponential();
  }

  // Interference from local interferers within `reach` of (x, y) with per-link fading.
  double near_interference(const Field& f, double x, double y, double reach,
                           std::uint64_t rx_key) const {
    const int span = static_cast<int>(std::ceil(reach / f.cell));
    const int cx = clamp_cell(f, x), cy = clamp_cell(f, y);
    const double reach2 = reach * reach;
    numerics::KahanSum acc;
    for (int gy = std::max(0, cy - span); gy <= std::min(f.cells_per_side - 1, cy + span); ++gy) {
      // Cells of one grid row are contiguous in the sorted arrays.
      const std::size_t row = static_cast<std::size_t>(gy) * f.cells_per_side;
      const std::size_t c0 = row + std::max(0, cx - span);
      const std::size_t c1 = row + std::min(f.cells_per_side - 1, cx + span) + 1;
      for (std::uint32_t i = f.start_su[c0]; i < f.start_su[c1]; ++i) {
        const double dx = f.local_su.x[i] - x, dy = f.local_su.y[i] - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > reach2) continue;
        acc += pair_su_weight(rx_key, f.local_su.id[i]) * detail::path_gain(d2, cfg_.alpha);
      }
      for (std::uint32_t i = f.start_pu[c0]; i < f.start_pu[c1]; ++i) {
        const double dx = f.local_pu.x[i] - x, dy = f.local_pu.y[i] - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > reach2) continue;
        acc += cfg_.p_p * pair_pu_gain(rx_key, f.local_pu.id[i]) *
               detail::path_gain(d2, cfg_.alpha);
      }
    }
    return acc.value();
  }

  // Sum of mean weight * path gain over interferers farther than the exact radius.
  double mean_faded(const detail::FieldSoA& s, double x, double y, double threshold2) const {
    const double alpha = cfg_.alpha;
    double acc = 0.0;
    const std::size_t n = s.size();
    const double* px = s.x.data();
    const double* py = s.y.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = px[i] - x, dy = py[i] - y;
      const double d2 = dx * dx + dy * dy;
      acc += d2 > threshold2 ? detail::path_gain(d2, alpha) : 0.0;
    }
    return acc;
  }

  double exact_interference(const Field& f, double x, double y, std::uint64_t rx_key) const {
    const double d = geo_.exact_radius;
    const double near = near_interference(f, x, y, d, rx_key);
    const double d2 = d * d;
    const double far = p_s_ * (mean_faded(f.local_su, x, y, d2) + mean_faded(f.far_su, x, y, d2)) +
                       cfg_.p_p * (mean_faded(f.local_pu, x, y, d2) + mean_faded(f.far_pu, x, y, d2));
    return near + far;
  }

  // Largest eavesdropper SIR. Candidates are visited in decreasing order of an upper bound built
  // from their closest interferers; the search stops once no remaining bound can beat the best.
  double max_eve_sir(const Field& f) const {
    const std::size_t n = f.eves.size();
    if (n == 0) return 0.0;
    const double inner = f.cell;
    std::vector<double> bound(n);
    std::vector<std::uint64_t> keys(n);
    for (std::size_t k = 0; k < n; ++k) {
      keys[k] = child_key(f.key, (1ull << 50) + k);
      const double lb = near_interference(f, f.eves[k].x, f.eves[k].y, inner, keys[k]);
      const double den = lb + f.eve_an[k];
      bound[k] = den > 0.0 ? f.eve_signal[k] / den : std::numeric_limits<double>::infinity();
    }
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return bound[a] > bound[b] || (bound[a] == bound[b] && a < b);
    });
    double best = 0.0;
    for (std::size_t k : order) {
      if (bound[k] <= best) break;
      const Point& z = f.eves[k];
      const double near = near_interference(f, z.x, z.y, geo_.exact_radius, keys[k]);
      if (f.eve_signal[k] / (near + f.eve_an[k]) <= best) continue;
      const double d2 = geo_.exact_radius * geo_.exact_radius;
      const double far =
          p_s_ * (mean_faded(f.local_su, z.x, z.y, d2) + mean_faded(f.far_su, z.x, z.y, d2)) +
          cfg_.p_p * (mean_faded(f.local_pu, z.x, z.y, d2) + mean_faded(f.far_pu, z.x, z.y, d2));
      const double den = near + far + f.eve_an[k];
      const double sir = den > 0.0 ? f.eve_signal[k] / den : std::numeric_limits<double>::infinity();
      best = std::max(best, sir);
    }
    return best;
  }

  NetworkConfig cfg_;
  McOptions opts_;
  Geometry geo_;
  double p_s_ = 0.0, sigma_s_sq_ = 0.0, sigma_n_sq_ = 0.0;
};

// Single-snapshot entry points driven by a caller-owned stream.
inline double su_sir_snapshot(const NetworkConfig& cfg, Rng& rng, const McOptions& opts = {},
                              SnapshotCounters* counters = nullptr) {
  SnapshotCounters local;
  return Simulator(cfg, opts).su_sir_from(rng, counters ? *counters : local);
}
inline double eve_sir_snapshot(const NetworkConfig& cfg, Rng& rng, const McOptions& opts = {},
                               SnapshotCounters* counters = nullptr) {
  SnapshotCounters local;
  return Simulator(cfg, opts).eve_sir_from(rng, counters ? *counters : local);
}
inline double pu_sir_snapshot(const NetworkConfig& cfg, double p_s, Rng& rng,
                              const McOptions& opts = {}, SnapshotCounters* counters = nullptr) {
  SnapshotCounters local;
  return Simulator(cfg, opts).pu_sir_from(rng, p_s, counters ? *counters : local);
}

struct SampleSet {
  std::vector<double> values;
  long redraws = 0;
  long divergent = 0;
  double radius_m = 0.0;
  std::uint64_t seed = 0;
};

// Runs body(i, counters) for i in [0, n) over worker threads; every output slot is written by
// exactly one index, so the result does not depend on the thread count.
template <class Body>
SnapshotCounters parallel_for(long n, int threads, std::stop_token stop, Body&& body) {
  const int workers = std::max(1, std::min<int>(worker_count(threads), static_cast<int>(std::max(1L, n / 64))));
  std::atomic<long> next{0};
  std::vector<SnapshotCounters> per(static_cast<std::size_t>(workers));
  std::atomic<bool> cancelled{false};
  auto run = [&](int w) {
    constexpr long chunk = 64;
    for (;;) {
      if (stop.stop_requested()) {
        cancelled = true;
        return;
      }
      const long start = next.fetch_add(chunk);
      if (start >= n) return;
      const long end = std::min(n, start + chunk);
      for (long i = start; i < end; ++i) body(i, per[static_cast<std::size_t>(w)]);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  if (cancelled) throw CancelledError();
  SnapshotCounters total;
  for (const auto& c : per) {
    total.redraws += c.redraws;
    total.divergent += c.divergent;
  }
  return total;
}

enum class SirSource { su, eve, pu, large_array };

inline SampleSet sample_sir(SirSource source, const NetworkConfig& cfg, const McOptions& opts,
                            std::optional<double> p_s = std::nullopt) {
  if (opts.n < 1) throw DomainError("sample_sir: n must be >= 1");
  const Simulator sim(cfg, opts);
  SampleSet out;
  out.values.resize(static_cast<std::size_t>(opts.n));
  out.radius_m = sim.geometry().radius;
  out.seed = opts.seed;
  const double pu_power = p_s.value_or(sim.p_s());
  const auto counters = parallel_for(opts.n, opts.threads, opts.stop, [&](long i, SnapshotCounters& c) {
    const auto idx = static_cast<std::uint64_t>(i);
    double v = 0.0;
    switch (source) {
      case SirSource::su: v = sim.su_sir(idx, c); break;
      case SirSource::eve: v = sim.eve_sir(idx, c); break;
      case SirSource::pu: v = sim.pu_sir(idx, pu_power, c); break;
      case SirSource::large_array: v = sim.large_array_interference(idx, c); break;
    }
    out.values[static_cast<std::size_t>(i)] = v;
  });
  out.redraws = counters.redraws;
  out.divergent = counters.divergent;
  return out;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long n = 0;
  std::uint64_t seed = 0;
  double radius_m = 0.0;
  long redraws = 0;
  long divergent = 0;
};

// Mean and standard error of values in index order (compensated sums).
inline McEstimate summarize(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("summarize: no samples");
  numerics::KahanSum s;
  for (double v : values) s += v;
  const double n = static_cast<double>(values.size());
  const double mean = s.value() / n;
  numerics::KahanSum ss;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss.value() / (n - 1.0) : 0.0;
  McEstimate e;
  e.mean = mean;
  e.std_error = std::sqrt(var / n);
  e.ci_low = mean - 1.96 * e.std_error;
  e.ci_high = mean + 1.96 * e.std_error;
  e.n = static_cast<long>(values.size());
  return e;
}

inline McEstimate with_run_info(McEstimate e, const SampleSet& s) {
  e.seed = s.seed;
  e.radius_m = s.radius_m;
  e.redraws = s.redraws;
  e.divergent = s.divergent;
  return e;
}

inline std::vector<McEstimate> empirical_cdf(const SampleSet& s, const std::vector<double>& grid) {
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<McEstimate> out;
  const double n = static_cast<double>(sorted.size());
  for (double g : grid) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
    const double p = static_cast<double>(below) / n;
    McEstimate e;
    e.mean = p;
    e.std_error = std::sqrt(p * (1.0 - p) / n);
    e.ci_low = p - 1.96 * e.std_error;
    e.ci_high = p + 1.96 * e.std_error;
    e.n = static_cast<long>(sorted.size());
    out.push_back(with_run_info(e, s));
  }
  return out;
}

inline void check_sample_count(const McOptions& opts) {
  if (opts.n < 1000) throw DomainError("Monte Carlo estimates need at least 1000 snapshots");
}

inline std::vector<McEstimate> estimate_cdf_su(const NetworkConfig& cfg,
                                               const std::vector<double>& grid,
                                               const McOptions& opts) {
  check_sample_count(opts);
  return empirical_cdf(sample_sir(SirSource::su, cfg, opts), grid);
}

inline std::vector<McEstimate> estimate_cdf_eve(const NetworkConfig& cfg,
                                                const std::vector<double>& grid,
                                                const McOptions& opts) {
  check_sample_count(opts);
  return empirical_cdf(sample_sir(SirSource::eve, cfg, opts), grid);
}

inline double secrecy_rate(double gamma_s, double gamma_e) {
  if (std::isinf(gamma_s)) return std::isinf(gamma_e) ? 0.0 : std::numeric_limits<double>::infinity();
  return std::max(0.0, std::log2(1.0 + gamma_s) - std::log2(1.0 + gamma_e));
}

enum class Pairing { independent, shared_field };

// Per-snapshot instantaneous secrecy rates. Independent pairing uses the SU and eavesdropper
// streams of the same index; shared-field pairing draws both from one realization.
inline SampleSet sample_secrecy_rates(const NetworkConfig& cfg, const McOptions& opts,
                                      Pairing pairing = Pairing::independent) {
  const Simulator sim(cfg, opts);
  SampleSet out;
  out.values.resize(static_cast<std::size_t>(opts.n));
  out.radius_m = sim.geometry().radius;
  out.seed = opts.seed;
  const auto counters = parallel_for(opts.n, opts.threads, opts.stop, [&](long i, SnapshotCounters& c) {
    const auto idx = static_cast<std::uint64_t>(i);
    double gs = 0.0, ge = 0.0;
    if (pairing == Pairing::independent) {
      gs = sim.su_sir(idx, c);
      ge = sim.eve_sir(idx, c);
    } else {
      std::tie(gs, ge) = sim.shared_pair(idx, c);
    }
    out.values[static_cast<std::size_t>(i)] = secrecy_rate(gs, ge);
  });
  out.redraws = counters.redraws;
  out.divergent = counters.divergent;
  return out;
}

inline McEstimate estimate_asr(const NetworkConfig& cfg, const McOptions& opts,
                               Pairing pairing = Pairing::independent) {
  check_sample_count(opts);
  const auto s = sample_secrecy_rates(cfg, opts, pairing);
  return with_run_info(summarize(s.values), s);
}

inline McEstimate estimate_sop(const NetworkConfig& cfg, double rate, const McOptions& opts,
                               Pairing pairing = Pairing::independent) {
  check_sample_count(opts);
  if (!(rate >= 0.0)) throw DomainError("estimate_sop: rate must be >= 0");
  auto s = sample_secrecy_rates(cfg, opts, pairing);
  for (auto& v : s.values) v = v < rate ? 1.0 : 0.0;
  return with_run_info(summarize(s.values), s);
}

inline McEstimate estimate_pu_outage(const NetworkConfig& cfg, double p_s, const McOptions& opts) {
  check_sample_count(opts);
  auto s = sample_sir(SirSource::pu, cfg, opts, p_s);
  for (auto& v : s.values) v = v < cfg.gamma_th_p ? 1.0 : 0.0;
  return with_run_info(summarize(s.values), s);
}

enum class McMetric { cdf_su, cdf_eve, asr, sop, pu_outage };

// Uniform front door: `grid` for the CDFs, `parameter` is R_s for sop and P_s for pu_outage.
inline std::vector<McEstimate> estimate(McMetric metric, const NetworkConfig& cfg,
                                        const McOptions& opts, const std::vector<double>& grid = {},
                                        double parameter = 0.0) {
  switch (metric) {
    case McMetric::cdf_su: return estimate_cdf_su(cfg, grid, opts);
    case McMetric::cdf_eve: return estimate_cdf_eve(cfg, grid, opts);
    case McMetric::asr: return {estimate_asr(cfg, opts)};
    case McMetric::sop: return {estimate_sop(cfg, parameter, opts)};
    case McMetric::pu_outage: return {estimate_pu_outage(cfg, parameter, opts)};
  }
  throw DomainError("estimate: unknown metric");
}

// Kolmogorov-Smirnov distance between the empirical distribution of samples and a CDF.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const double f = std::isinf(x) ? (x > 0 ? 1.0 : 0.0) : cdf(x);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace secrecy::mc
