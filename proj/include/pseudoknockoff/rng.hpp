#pragma once

#include <cstdint>

namespace pkf {

/// SplitMix64 finalizer; also the mixing core for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combiner used to derive grid-point and trial seeds.
inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c) {
  return hash_combine(hash_combine(a, b), c);
}

/// Counter-based generator: draw i is a pure function of (key, i), so
/// substreams never overlap and replay does not depend on call order of
/// other streams.  The raw stream is SplitMix64 keyed by `seed`.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(seed) {}

  /// Independent child stream; derivation is one-way so child draws do not
  /// collide with the parent's.
  CounterRng substream(std::uint64_t idx) const {
    return CounterRng(hash_combine(key_, idx));
  }

  std::uint64_t next_u64() {
    return mix64(key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the sine partner is cached so draws
  /// come in deterministic pairs.
  double next_gaussian();

  /// Uniform integer in [0, n).  Unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace pkf
