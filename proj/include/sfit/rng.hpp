#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sfit {

// Deterministic random source. All draws are derived from the raw mt19937_64
// stream with fixed transforms instead of std:: distributions, whose output
// is implementation-defined; this keeps seeded runs byte-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  // Independent child stream; used to decorrelate per-epoch shuffles and
  // per-module draws from one experiment seed.
  Rng split(std::uint64_t stream) const {
    std::uint64_t h = seed_hash_ ^ (0x9e3779b97f4a7c15ull + stream);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return Rng(h);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_hash_ = engine_();  // consumed once, keys split()
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sfit
