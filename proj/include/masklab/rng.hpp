#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace masklab {

// Stateless seed mixing (splitmix64) so that work item i of a seeded run
// gets an independent stream regardless of worker scheduling.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

/// Seeded generator with bit-reproducible draws. Uniform doubles are built
/// from the top 53 bits of mt19937_64 output, so sequences do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); safe to pass through log().
  double uniform_open() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard exponential, strictly positive.
  double exponential() { return -std::log(uniform_open()); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace masklab
