// Deterministic RNG used everywhere. A small counter-seeded generator keeps
// every stream reproducible from (global_seed, stream_index) regardless of
// platform or standard-library version, which byte-identical reruns require.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hampbench {

// splitmix64: tiny, well-distributed, and stable across platforms.
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive mix of two 64-bit values, for deriving per-entity streams
// such as (seed, sample_id) or (seed, shadow_index). Mixing a fully before
// injecting b keeps the map injective in either argument alone, so nearby
// (seed, id) pairs can never share a stream.
inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  uint64_t s = a;
  const uint64_t mixed_a = splitmix64(s);
  s = mixed_a ^ b;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // Burn one output so nearby seeds do not yield nearby first draws.
    (void)splitmix64(state_);
  }

  // Derives an independent stream for a worker/instance index.
  static Rng for_stream(uint64_t global_seed, uint64_t stream) {
    return Rng(hash_combine(global_seed, stream));
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), unbiased via rejection.
  int next_int(int bound) {
    const uint64_t b = static_cast<uint64_t>(bound);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<int>(v % b);
  }

  bool next_bool() { return (next_u64() & 1ULL) != 0; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller; second value cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_int(static_cast<int>(i)));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Draws `count` distinct values from [0, bound) in selection order.
  std::vector<int> sample_without_replacement(int bound, int count) {
    std::vector<int> pool(static_cast<size_t>(bound));
    for (int i = 0; i < bound; ++i) pool[static_cast<size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int j = i + next_int(bound - i);
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
      out.push_back(pool[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace hampbench
