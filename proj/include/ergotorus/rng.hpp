#pragma once

#include <cstdint>

namespace ergotorus {

// splitmix64 step; full-period scrambler over u64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-seeded stream: member i of an ensemble draws from stream(seed, i)
// regardless of evaluation order or thread placement, so results do not
// depend on ensemble size or scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = stream;
    state_ = seed ^ (splitmix64(s) | 1ull);
    next_u64();  // decouple first output from the seed arithmetic
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0,1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

 private:
  std::uint64_t state_;
};

// Radical-inverse of index in the given base; halton(i, 2), halton(i, 3), ...
// form a low-discrepancy sequence on [0,1).
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base;
  double place = inv;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * place;
    index /= base;
    place *= inv;
  }
  return value;
}

struct Halton3 {
  // index 0 maps to sequence element 1 so the origin is never emitted
  static void point(std::uint64_t index, double out[3]) {
    out[0] = radical_inverse(index + 1, 2);
    out[1] = radical_inverse(index + 1, 3);
    out[2] = radical_inverse(index + 1, 5);
  }
};

}  // namespace ergotorus
