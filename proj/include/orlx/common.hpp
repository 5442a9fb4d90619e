#pragma once

// Shared plumbing: numeric tolerances, dual exponents, deterministic RNG,
// and a slot-writing parallel_for whose results do not depend on the
// thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace orlx {

inline constexpr double kEpsConvex = 1e-9;       // discrete convexity slack
inline constexpr double kInverseTolRel = 1e-10;  // inverse solves
inline constexpr double kLuxemburgTolRel = 1e-10;
inline constexpr double kWeightFloor = 1e-12;    // strict positivity floor
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// p' = p/(p-1), with 1' = inf and inf' = 1.
inline double dual_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (!(p >= 1.0))
    throw std::invalid_argument("dual_exponent: p must be in [1, inf]");
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

inline bool almost_equal(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

// ---------------------------------------------------------------------------
// Threads. Results must be invariant under the thread count: parallel_for
// hands out disjoint index ranges and callers write to per-index slots only.

inline std::atomic<int>& detail_thread_slot() {
  static std::atomic<int> n{1};
  return n;
}

inline void set_max_threads(int n) {
  detail_thread_slot().store(std::max(1, std::min(n, 64)));
}

inline int max_threads() { return detail_thread_slot().load(); }

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const int threads = max_threads();
  if (threads <= 1 || count < 64) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t nt = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (count + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// splitmix64: tiny, seedable, and identical everywhere.

struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(next_u64() % span);
  }

  // Box-Muller; two draws per call so the stream stays aligned.
  double normal() {
    const double u1 = std::max(uniform(), 0x1.0p-60);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal());
  }
};

// Stable per-trial sub-seed so trials are independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  Rng r(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  r.next_u64();
  return r.next_u64();
}

}  // namespace orlx
