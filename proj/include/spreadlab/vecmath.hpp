#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spreadlab {

using Vec = std::vector<double>;

/// Compensated (Kahan) accumulator. All loss reductions go through this in a
/// fixed index order so reordering tests can use tight tolerances.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double dot(const Vec& a, const Vec& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec normalized(const Vec& a) {
  double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::runtime_error("numerical-failure: cannot normalize zero or non-finite vector");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] / n;
  return r;
}

/// Squared chordal distance of unit vectors via 2 - 2<u,v>, clamped to [0,4].
/// Self pairs are handled by callers as exact zeros; this is for i != j.
inline double unit_dist2(const Vec& u, const Vec& v) {
  double d2 = 2.0 - 2.0 * dot(u, v);
  if (d2 < 0.0) d2 = 0.0;
  if (d2 > 4.0) d2 = 4.0;
  return d2;
}

inline double euclid_dist(const Vec& a, const Vec& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s.add(d * d);
  }
  return std::sqrt(s.value());
}

/// log sum_i exp(t_i) with max subtraction; terms summed in index order.
inline double logsumexp(std::span<const double> t) {
  if (t.empty()) throw std::invalid_argument("logsumexp: empty term list");
  double m = t[0];
  for (double x : t)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;  // all -inf, or a non-finite term
  KahanSum s;
  for (double x : t) s.add(std::exp(x - m));
  return m + std::log(s.value());
}

/// 17-significant-digit decimal rendering; round-trips IEEE doubles exactly.
inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Deterministic RNG wrapper. The transforms are hand-rolled so sampled
/// streams do not depend on the standard library's distribution internals.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  std::uint64_t next_u64() { return gen(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    // modulo bias is irrelevant at the n used here (n << 2^64)
    return static_cast<std::size_t>(gen() % n);
  }

  /// Standard normal via Box-Muller (no cached spare; deterministic stream).
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Uniform point on the unit sphere in R^d (normalized Gaussian).
  Vec unit_vector(int d) {
    Vec v(static_cast<std::size_t>(d));
    while (true) {
      for (auto& x : v) x = normal();
      double n = norm(v);
      if (n > 1e-12) {
        for (auto& x : v) x /= n;
        return v;
      }
    }
  }

  /// Fisher-Yates shuffle, deterministic given the seed.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }
};

}  // namespace spreadlab
