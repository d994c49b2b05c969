#pragma once
// Counter-based RNG: every draw is a pure function of (seed, chain, sweep, slot).
// Streams never overlap between chains or sweeps, so parallel chains and
// resumed runs are reproducible regardless of scheduling.

#include <cstdint>

namespace ising {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct CounterRng {
  uint64_t key;
  CounterRng(uint64_t seed, uint64_t chain, uint64_t salt = 0)
      : key(mix64(seed ^ mix64(chain + 0x517cc1b727220a95ull) ^ mix64(salt + 0x2545f4914f6cdd1dull))) {}

  uint64_t at(uint64_t sweep, uint64_t slot) const {
    // two mixing rounds over the combined counter
    uint64_t h = mix64(key ^ mix64(sweep + 0x9e3779b97f4a7c15ull));
    return mix64(h ^ mix64(slot + 0xd1b54a32d192ed03ull));
  }
  // uniform in [0,1)
  double uniform(uint64_t sweep, uint64_t slot) const {
    return (at(sweep, slot) >> 11) * 0x1.0p-53;
  }
  bool bernoulli(uint64_t sweep, uint64_t slot, uint64_t threshold) const {
    return at(sweep, slot) < threshold;
  }
};

// threshold so that P[u64 < t] = p
inline uint64_t bernoulli_threshold(double p) {
  if (p <= 0) return 0;
  if (p >= 1) return ~0ull;
  long double t = (long double)p * 18446744073709551616.0L;
  return (uint64_t)t;
}

}  // namespace ising
