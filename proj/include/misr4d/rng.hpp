#ifndef MISR4D_RNG_HPP
#define MISR4D_RNG_HPP

#include <cstdint>
#include <limits>

namespace misr4d {

/// Counter-style 64-bit generator (splitmix64). One instance per logical
/// stream: cheap to seed, so every pixel / sample / epoch can own an
/// independent stream derived from a master seed. Satisfies
/// UniformRandomBitGenerator, so std:: distributions run on top of it.
class SplitMix64 {
public:
  using result_type = uint64_t;

  explicit SplitMix64(uint64_t seed = 0) : state_(seed) {}

  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return std::numeric_limits<uint64_t>::max(); }

  uint64_t operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  uint64_t state_;
};

/// Mixes one word into a seed; chain calls to derive stream seeds from
/// (master, epoch, index, ...) tuples without collisions in practice.
inline uint64_t seed_mix(uint64_t seed, uint64_t word) {
  uint64_t z = seed ^ (word + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t a) { return seed_mix(master, a); }
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
  return seed_mix(seed_mix(master, a), b);
}

} // namespace misr4d

#endif
