#pragma once

#include <cstdint>
#include <string_view>

namespace kgbench {

// Seeded, portable random generator (splitmix64). Every stochastic operation
// in the toolkit draws from a stream derived from (seed, operation label,
// part label, index...), so outputs are identical across platforms, runs and
// worker counts.
class Rng {
 public:
  explicit Rng(uint64_t seed) : root_(seed), state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw from [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    const uint64_t reject_under = (0ULL - n) % n;  // 2^64 mod n
    uint64_t x = next();
    while (x < reject_under) x = next();
    return x % n;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool coin() { return (next() >> 63) != 0; }

  // Independent stream keyed by a label; derivation starts from this stream's
  // seed, not its current state, so call order does not matter.
  Rng derive(std::string_view label) const {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the label
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return Rng(mix(root_ ^ h));
  }

  Rng derive(uint64_t index) const { return Rng(mix(root_ ^ mix(index))); }

  uint64_t seed() const { return root_; }

  // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t root_;
  uint64_t state_;
};

}  // namespace kgbench
