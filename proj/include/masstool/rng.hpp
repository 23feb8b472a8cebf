#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace masstool {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Deterministic RNG. All sampling in the engine goes through this wrapper so
/// results do not depend on implementation-defined distribution internals.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  /// Derive an independent stream for a named purpose (slates, init, shuffle...).
  Rng split(std::string_view purpose) const { return Rng(seed_ ^ fnv1a64(purpose)); }

  std::uint64_t next() { return eng_(); }

  /// Uniform integer in [0, n) via rejection sampling (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 eng_;
  std::uint64_t seed_;
};

}  // namespace masstool
