#pragma once

#include <cstdint>

namespace bapusim {

// Splittable per-node random stream built on the splitmix64 finalizer.
// A stream is fully determined by (seed, stream_id): the same pair always
// replays the same draws, and streams with distinct ids are independent, so
// consuming from one never shifts another. Node streams are keyed by a
// stable role index rather than topology position; adding an AP to a
// scenario leaves every other node's draw sequence untouched.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream_id)
      : state_(mix(seed ^ mix(stream_id + 0x9e3779b97f4a7c15ull))) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [lo, hi] inclusive. Modulo bias is negligible for
  // simulation ranges and keeps the draw count per call fixed.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

 private:
  static constexpr uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

// Well-mixed 64-bit hash of an IP identification value; used by the
// decentralized modulo forwarding strategy.
constexpr uint64_t ipid_hash(uint16_t ipid) {
  uint64_t z = ipid + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace bapusim
