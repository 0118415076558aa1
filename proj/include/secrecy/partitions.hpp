#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "secrecy/errors.hpp"
#include "secrecy/numerics.hpp"

namespace secrecy {

// Multiplicity vector (m_1, ..., m_m): m_i copies of part i, sum of i * m_i == m.
struct Partition {
  std::vector<int> multiplicities;

  int order() const {
    int m = 0;
    for (std::size_t i = 0; i < multiplicities.size(); ++i)
      m += static_cast<int>(i + 1) * multiplicities[i];
    return m;
  }
  bool operator==(const Partition&) const = default;
};

inline constexpr int kPartitionCap = 64;

namespace detail {

// Parts i..m still open with `rem` left to cover; m_i is tried from largest to smallest. The
// leftover must be zero or reachable by parts larger than i.
inline void enumerate_desc(int m, int i, int rem, std::vector<int>& mult,
                           std::vector<Partition>& out) {
  if (rem == 0) {
    out.push_back({mult});
    return;
  }
  if (i > m) return;
  for (int k = rem / i; k >= 0; --k) {
    const int left = rem - k * i;
    if (left != 0 && left < i + 1) continue;
    mult[i - 1] = k;
    enumerate_desc(m, i + 1, left, mult, out);
    mult[i - 1] = 0;
  }
}

}  // namespace detail

// Every multiplicity vector of m, in descending lexicographic order of (m_1, m_2, ...).
inline std::vector<Partition> partitions_with_multiplicity(int m, int cap = kPartitionCap) {
  if (m < 1) throw DomainError("partitions_with_multiplicity: m must be >= 1");
  if (m > cap)
    throw ResourceError("partitions_with_multiplicity: m = " + std::to_string(m) +
                        " exceeds cap " + std::to_string(cap));
  std::vector<Partition> out;
  std::vector<int> mult(static_cast<std::size_t>(m), 0);
  detail::enumerate_desc(m, 1, m, mult, out);
  return out;
}

inline constexpr int kPartitionTableMax = 20;

// Partitions of 1..kPartitionTableMax, built once.
inline const std::vector<Partition>& partition_table(int m) {
  static const std::vector<std::vector<Partition>> table = [] {
    std::vector<std::vector<Partition>> t(kPartitionTableMax + 1);
    for (int k = 1; k <= kPartitionTableMax; ++k) t[k] = partitions_with_multiplicity(k);
    return t;
  }();
  if (m < 1 || m > kPartitionTableMax) throw DomainError("partition_table: m out of range");
  return table[m];
}

// Sum over partitions of m of m! * prod_j (g^{(j)})^{m_j} / (m_j! (j!)^{m_j}).
// Multiplied by e^g this is the m-th derivative of e^{g(x)}.
inline double faa_di_bruno_exp(const std::vector<double>& g_derivs, int m) {
  if (m < 1) throw DomainError("faa_di_bruno_exp: m must be >= 1");
  if (static_cast<int>(g_derivs.size()) != m)
    throw ConfigError("faa_di_bruno_exp: expected " + std::to_string(m) + " derivatives, got " +
                      std::to_string(g_derivs.size()));
  const double log_m_fact = std::lgamma(m + 1.0);
  numerics::KahanSum acc;
  std::vector<Partition> owned;
  if (m > kPartitionTableMax) owned = partitions_with_multiplicity(m);
  const auto& parts = m > kPartitionTableMax ? owned : partition_table(m);
  for (const auto& p : parts) {
    double term = 1.0;
    double log_denominator = 0.0;
    for (int j = 1; j <= m; ++j) {
      const int mj = p.multiplicities[j - 1];
      if (mj == 0) continue;
      term *= std::pow(g_derivs[j - 1], mj);
      log_denominator += std::lgamma(mj + 1.0) + mj * std::lgamma(j + 1.0);
    }
    acc += term * std::exp(log_m_fact - log_denominator);
  }
  return acc.value();
}

}  // namespace secrecy
